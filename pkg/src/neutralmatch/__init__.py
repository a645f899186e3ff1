"""Group strategy-proof and gender-neutral matching mechanisms, with exhaustive axiom audits."""

from .core import (
    Instance, Matching, Profile, Submatching, Symmetry, enumerate_matchings,
    enumerate_profiles, is_efficient, load_profile, one_sided_profile, pareto_dominates,
    profile_from_json, profile_to_json, reflect_matching, reflect_profile, two_sided_profile,
)
from .axioms import (
    AxiomReport, MechanismTable, Mode, check_efficiency, check_gn, check_group_sp,
    check_ir, check_stability, check_weak_gn,
)

__all__ = [
    "Instance", "Matching", "Profile", "Submatching", "Symmetry", "enumerate_matchings",
    "enumerate_profiles", "is_efficient", "load_profile", "one_sided_profile",
    "pareto_dominates", "profile_from_json", "profile_to_json", "reflect_matching",
    "reflect_profile", "two_sided_profile", "AxiomReport", "MechanismTable", "Mode",
    "check_efficiency", "check_gn", "check_group_sp", "check_ir", "check_stability",
    "check_weak_gn",
]
