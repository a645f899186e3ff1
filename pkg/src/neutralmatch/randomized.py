"""Exact-rational lotteries over matchings: symmetrization and dominance.

Probabilities are :class:`fractions.Fraction` throughout; no floats.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .axioms import AxiomReport
from .core import Instance, Matching, Profile, is_efficient, pareto_dominates
from .fouragent import FourAgentMechanism
from .twosided import SerialDictatorship2, royal_pair_mechanism, stable_matchings


@dataclass(frozen=True)
class RationalMatrix:
    """Rows are men, columns are women; entry ``[i][j]`` is P(m_i with w_j)."""

    rows: tuple

    def __post_init__(self):
        rows = tuple(tuple(Fraction(x) for x in r) for r in self.rows)
        object.__setattr__(self, "rows", rows)
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise ValueError("allocation matrix must be square")
        if any(x < 0 or x > 1 for r in rows for x in r):
            raise ValueError("probabilities must lie in [0, 1]")

    @classmethod
    def parse(cls, grid: Sequence[Sequence]) -> "RationalMatrix":
        return cls(tuple(tuple(Fraction(str(x)) for x in r) for r in grid))

    @property
    def n(self) -> int:
        return len(self.rows)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def is_doubly_stochastic(self) -> bool:
        n = self.n
        return (all(sum(r) == 1 for r in self.rows)
                and all(sum(self.rows[i][j] for i in range(n)) == 1 for j in range(n)))

    def to_json(self) -> list:
        return [[str(x) for x in r] for r in self.rows]

    def __str__(self):
        cells = [[str(x) for x in r] for r in self.rows]
        width = max(len(c) for r in cells for c in r)
        head = " " * 4 + " ".join(f"w{j + 1}".rjust(width) for j in range(self.n))
        body = [f"m{i + 1}  " + " ".join(c.rjust(width) for c in r) for i, r in enumerate(cells)]
        return "\n".join([head] + body)


def lottery_matrix(outcomes: Iterable[tuple[Matching, Fraction]]) -> RationalMatrix:
    """Allocation matrix of a lottery given as ``(matching, probability)`` pairs."""
    outcomes = list(outcomes)
    inst = outcomes[0][0].instance
    n = inst.n
    grid = [[Fraction(0)] * n for _ in range(n)]
    for mu, w in outcomes:
        for m in inst.men:
            grid[m][mu(m) - n] += Fraction(w)
    return RationalMatrix(tuple(tuple(r) for r in grid))


@dataclass(frozen=True)
class RoleDistribution:
    """Uniform distribution over role assignments."""

    roles: tuple

    def __post_init__(self):
        if not self.roles:
            raise ValueError("a role distribution needs at least one role")

    @property
    def weight(self) -> Fraction:
        return Fraction(1, len(self.roles))


def realizations(mech_family: Callable, roles: RoleDistribution, p: Profile) -> list[Matching]:
    return [mech_family(role)(p) for role in roles.roles]


def symmetrize(mech_family: Callable, roles: RoleDistribution, p: Profile) -> RationalMatrix:
    """Average outcome over the uniform role distribution, exactly."""
    w = roles.weight
    mat = lottery_matrix((mu, w) for mu in realizations(mech_family, roles, p))
    assert mat.is_doubly_stochastic()
    return mat


def all_orders(inst: Instance) -> RoleDistribution:
    return RoleDistribution(tuple(itertools.permutations(inst.agents)))


def royal_pairs(inst: Instance) -> RoleDistribution:
    return RoleDistribution(tuple((m, w) for m in inst.men for w in inst.women))


def rsd_matrix(p: Profile) -> RationalMatrix:
    inst = p.instance
    return symmetrize(lambda order: SerialDictatorship2(inst, order), all_orders(inst), p)


def royalty_family(inst: Instance, terminal: FourAgentMechanism | str = "a2", regime: str = "D"):
    """Role -> royalty mechanism with that royal pair first (cached per role)."""
    cache: dict = {}

    def make(role):
        if role not in cache:
            cache[role] = royal_pair_mechanism(inst, role[0], role[1], regime, terminal)
        return cache[role]

    return make


def uniform_royalty_matrix(p: Profile, terminal: FourAgentMechanism | str = "a2",
                           regime: str = "D") -> RationalMatrix:
    """Royals drawn uniformly among all man-woman pairs, then lowest free pair each round.

    ``terminal`` resolves the last four agents, with its diagonal matching
    pairing the survivors in index order. The default majority rule (quota 2)
    sends two-two splits to that index-order pairing.
    """
    inst = p.instance
    return symmetrize(royalty_family(inst, terminal, regime), royal_pairs(inst), p)


def half_support_matrix(p: Profile) -> RationalMatrix:
    """Equal lottery over the men-optimal and women-optimal stable matchings."""
    stable = stable_matchings(p)
    men_best = min(stable, key=lambda mu: [p.rank(m, mu(m)) for m in p.instance.men])
    women_best = min(stable, key=lambda mu: [p.rank(w, mu(w)) for w in p.instance.women])
    half = Fraction(1, 2)
    return lottery_matrix([(men_best, half), (women_best, half)])


def _upper_mass(p: Profile, P: RationalMatrix, agent: int) -> list[Fraction]:
    inst = p.instance
    n = inst.n
    out, acc = [], Fraction(0)
    for j in p.prefs[agent]:
        acc += P[agent, j - n] if inst.is_man(agent) else P[j, agent - n]
        out.append(acc)
    return out


def fosd_dominates(p: Profile, P: RationalMatrix, Q: RationalMatrix) -> bool:
    """Every agent's lottery under ``P`` first-order dominates ``Q``, strictly somewhere."""
    strict = False
    for a in p.instance.agents:
        for x, y in zip(_upper_mass(p, P, a), _upper_mass(p, Q, a)):
            if x < y:
                return False
            strict |= x > y
    return strict


def expost_efficient(mech_family: Callable, roles: RoleDistribution, p: Profile) -> AxiomReport:
    for role, mu in zip(roles.roles, realizations(mech_family, roles, p)):
        if not is_efficient(p, mu):
            dom = next(nu for nu in _all(p) if pareto_dominates(p, nu, mu))
            return AxiomReport("expost_efficiency", "fails",
                               {"profile": p, "role": list(role) if isinstance(role, tuple) else role,
                                "outcome": mu, "dominating": dom}, 1)
    return AxiomReport("expost_efficiency", "holds", None, 1)


def _all(p):
    from .core import enumerate_matchings
    return enumerate_matchings(p.instance)


def random_profile(inst: Instance, rng: random.Random) -> Profile:
    prefs = []
    for a in inst.agents:
        r = list(inst.partners(a))
        rng.shuffle(r)
        prefs.append(r)
    return Profile(inst, prefs)


def find_ranking_flip(seed: int, budget: int, n: int = 3,
                      terminal: FourAgentMechanism | str = "a2") -> Profile | None:
    """Search random profiles for one where the royalty lottery dominates RSD."""
    inst = Instance.two_sided(n)
    rng = random.Random(seed)
    family = royalty_family(inst, terminal)
    roles = royal_pairs(inst)
    for _ in range(budget):
        p = random_profile(inst, rng)
        roy = symmetrize(family, roles, p)
        if fosd_dominates(p, roy, rsd_matrix(p)):
            return p
    return None
