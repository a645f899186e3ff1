import itertools

import pytest

from neutralmatch.axioms import MechanismTable, check_efficiency, check_group_sp, check_weak_gn
from neutralmatch.core import Symmetry, enumerate_profiles, two_sided_profile
from neutralmatch.fouragent import (
    COUPLE_SWAP, FULL, MU, NU, PAIR, FourAgentMechanism, FourAgentRule, catalog_entries,
    catalog_lemma4, catalog_names, enumerate_valid_four, evaluate_four, named_mechanism,
    profile_to_set, render_lattice,
)

SIGMA = Symmetry.canonical(PAIR)
CROSSED = Symmetry(PAIR, (3, 2, 1, 0))


def prof(m1, m2, w1, w2):
    """True means that agent prefers its diagonal partner."""
    return two_sided_profile([[1, 2] if m1 else [2, 1], [2, 1] if m2 else [1, 2]],
                             [[1, 2] if w1 else [2, 1], [2, 1] if w2 else [1, 2]])


def dual(f):
    """Swap the roles of the two matchings."""
    table = 0
    for s in range(16):
        if not f.chooses_nu(FULL ^ s):
            table |= 1 << s
    return FourAgentMechanism(table)


def test_profile_to_set():
    assert profile_to_set(prof(1, 1, 1, 1)) == {0, 1, 2, 3}
    assert profile_to_set(prof(0, 0, 0, 0)) == frozenset()
    assert profile_to_set(prof(1, 0, 0, 0)) == {0}


def test_matched_by_default_pairs_royals_on_one_vote():
    assert evaluate_four(named_mechanism("mbd"), prof(1, 0, 0, 0)) == NU


def test_unmatched_by_default_needs_both_royals():
    ubd = FourAgentMechanism.from_generators([("m1", "w1")])
    assert named_mechanism("ubd") == ubd
    assert evaluate_four(ubd, prof(1, 0, 0, 0)) == MU
    assert evaluate_four(ubd, prof(1, 0, 1, 0)) == NU


def test_unanimity_needs_everyone():
    f = named_mechanism("unanimity")
    assert f(prof(1, 1, 1, 1)) == NU
    for bits in itertools.product((0, 1), repeat=4):
        if sum(bits) < 4:
            assert f(prof(*bits)) == MU


def test_case_b_generators():
    assert str(named_mechanism("b")) == "{{m2,w2},{m1,m2,w1},{m1,w1,w2}}"


def test_majority_is_counted_twice():
    assert named_mechanism("a2") == named_mechanism("d1234")
    assert {"a2", "d1234"} <= set(catalog_names()[named_mechanism("a2")])


def test_exchanging_matchings_turns_c_into_e():
    assert dual(named_mechanism("c")) == named_mechanism("e")
    assert dual(named_mechanism("mbd")) == named_mechanism("ubd")


def test_survivors_closed_under_exchanging_matchings():
    survivors = enumerate_valid_four()
    assert {dual(f) for f in survivors} == survivors


def test_brute_force_equals_catalog():
    assert enumerate_valid_four() == catalog_lemma4()
    assert enumerate_valid_four(CROSSED) == catalog_lemma4(CROSSED)


def test_catalog_dedup_sizes():
    assert len(catalog_entries()) == 46
    assert len(catalog_lemma4()) == len(enumerate_valid_four())


def test_quota_rules_are_the_anonymous_survivors():
    anon = {f for f in enumerate_valid_four() if f.is_anonymous()}
    assert anon == {named_mechanism(f"quota{x}") for x in range(1, 5)}


def test_survivors_are_upward_closed_efficient_symmetric():
    for f in enumerate_valid_four():
        assert f.is_monotone() and f.is_efficient() and f.is_symmetric(SIGMA)
        for s in f.family:
            for t in range(16):
                if t & s == s:
                    assert f.chooses_nu(t)


def test_generators_form_an_antichain():
    for f in enumerate_valid_four():
        gens = [set(g) for g in f.generators]
        assert not any(a < b for a in gens for b in gens)
        assert FourAgentMechanism.from_generators(f.generators) == f


def test_survivors_pass_generic_checkers():
    for f in enumerate_valid_four():
        t = MechanismTable.from_mechanism(f)
        assert t.instance.num_profiles == 16
        assert check_efficiency(t).holds
        assert check_group_sp(t, "all").holds
        assert check_weak_gn(t, SIGMA).holds


def test_non_symmetric_monotone_rule_is_rejected():
    f = FourAgentMechanism.from_generators([("m1",)])
    assert f.is_monotone() and f.is_efficient()
    assert not f.is_symmetric(SIGMA)
    assert f not in enumerate_valid_four()


def test_couple_swap_relabel_is_involution():
    for f in catalog_lemma4():
        assert f.relabel(COUPLE_SWAP).relabel(COUPLE_SWAP) == f


def test_relabel_must_keep_sides():
    with pytest.raises(ValueError):
        named_mechanism("f").relabel((2, 1, 0, 3))


def test_unknown_name():
    with pytest.raises(KeyError):
        named_mechanism("z9")


def test_rule_on_larger_instance_matches_mechanism():
    # a rule placed on agents (m1, m2, w1, w2) of a two-couple instance is the mechanism itself
    for f in enumerate_valid_four():
        rule = FourAgentRule(f, (0, 1, 2, 3))
        for p in enumerate_profiles(PAIR):
            pairs = set(rule.pairs(p))
            assert pairs == ({(0, 2), (1, 3)} if f(p) == NU else {(0, 3), (1, 2)})


def test_rule_reflection_commutes_with_profile_reflection():
    from neutralmatch.core import reflect_profile
    s = SIGMA.sigma
    for f in enumerate_valid_four():
        rule = FourAgentRule(f, (0, 1, 2, 3))
        image = rule.reflect(s)
        for p in enumerate_profiles(PAIR):
            mirrored = {tuple(sorted((s[a], s[b]))) for a, b in rule.pairs(p)}
            assert {tuple(sorted(x)) for x in image.pairs(reflect_profile(SIGMA, p))} == mirrored


def test_lattice_marks_family():
    text = render_lattice(named_mechanism("f"))
    assert "*{m1}" in text and " {m2}" in text and "*{w1}" in text
    assert text.count("*") == len(named_mechanism("f").family)
