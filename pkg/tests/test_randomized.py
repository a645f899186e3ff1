import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from neutralmatch.axioms import ConstantMechanism
from neutralmatch.core import Instance, Matching, Profile
from neutralmatch.randomized import (
    RationalMatrix, RoleDistribution, all_orders, expost_efficient, find_ranking_flip,
    fosd_dominates, half_support_matrix, lottery_matrix, random_profile, royal_pairs,
    royalty_family, rsd_matrix, symmetrize, uniform_royalty_matrix,
)
from neutralmatch.twosided import SerialDictatorship2

THREE = Instance.two_sided(3)


def grid(diag, off):
    return RationalMatrix.parse([[diag if i == j else off for j in range(3)] for i in range(3)])


def test_rsd_matrix_at_cyclic_profile(cyclic):
    got = rsd_matrix(cyclic)
    assert got == grid("1/12", "11/24")
    assert got.is_doubly_stochastic()
    assert got[0, 1] == Fraction(11, 24)


def test_royalty_matrix_at_cyclic_profile(cyclic):
    assert uniform_royalty_matrix(cyclic) == grid("1/9", "4/9")


def test_matched_by_default_terminal_breaks_the_pattern(cyclic):
    got = uniform_royalty_matrix(cyclic, "f")
    assert got.is_doubly_stochastic()
    assert got != grid("1/9", "4/9")


def test_half_support_matrix(cyclic):
    assert half_support_matrix(cyclic) == grid("0", "1/2")


def test_single_role_gives_deterministic_matrix(cyclic):
    roles = RoleDistribution(((0, 1, 2, 3, 4, 5),))
    got = symmetrize(lambda order: SerialDictatorship2(THREE, order), roles, cyclic)
    # m1 takes w3, m2 takes w1, m3 takes w2
    assert got == RationalMatrix.parse([[0, 0, 1], [1, 0, 0], [0, 1, 0]])


def test_role_counts():
    assert len(all_orders(THREE).roles) == 720
    assert len(royal_pairs(THREE).roles) == 9
    with pytest.raises(ValueError):
        RoleDistribution(())


def test_fosd_chain(cyclic):
    half, rsd, roy = half_support_matrix(cyclic), rsd_matrix(cyclic), uniform_royalty_matrix(cyclic)
    assert fosd_dominates(cyclic, half, rsd)
    assert fosd_dominates(cyclic, rsd, roy)
    assert fosd_dominates(cyclic, half, roy)
    assert not fosd_dominates(cyclic, roy, rsd)


def test_fosd_irreflexive_and_asymmetric(cyclic):
    mats = [half_support_matrix(cyclic), rsd_matrix(cyclic), uniform_royalty_matrix(cyclic),
            uniform_royalty_matrix(cyclic, "f")]
    for a in mats:
        assert not fosd_dominates(cyclic, a, a)
        for b in mats:
            assert not (fosd_dominates(cyclic, a, b) and fosd_dominates(cyclic, b, a))


def test_expost_efficiency(cyclic):
    rng = random.Random(3)
    sd = lambda order: SerialDictatorship2(THREE, order)
    for _ in range(5):
        assert expost_efficient(sd, all_orders(THREE), random_profile(THREE, rng)).holds
    assert expost_efficient(royalty_family(THREE), royal_pairs(THREE), cyclic).holds


def test_expost_efficiency_fails_with_constant_role(cyclic):
    diagonal = Matching.parse(THREE, "m1-w1,m2-w2,m3-w3")
    rep = expost_efficient(lambda role: ConstantMechanism(diagonal), RoleDistribution(("c",)), cyclic)
    assert not rep.holds
    assert rep.witness["outcome"] == diagonal


def test_ranking_flip_search():
    assert find_ranking_flip(0, 0) is None
    found = find_ranking_flip(1, 25)
    if found is not None:
        assert fosd_dominates(found, uniform_royalty_matrix(found), rsd_matrix(found))


def test_cyclic_profile_is_not_a_flip(cyclic):
    assert not fosd_dominates(cyclic, uniform_royalty_matrix(cyclic), rsd_matrix(cyclic))


def test_matrix_validation():
    with pytest.raises(ValueError):
        RationalMatrix(((1, 0), (0,)))
    with pytest.raises(ValueError):
        RationalMatrix(((2, 0), (0, 1)))
    assert not RationalMatrix(((1, 0), (1, 0))).is_doubly_stochastic()


def test_matrix_text_and_json(cyclic):
    m = rsd_matrix(cyclic)
    assert RationalMatrix.parse(m.to_json()) == m
    assert m.to_json()[0] == ["1/12", "11/24", "11/24"]
    assert str(m).splitlines()[1].startswith("m1")


def test_lottery_matrix_weights():
    a = Matching.parse(THREE, "m1-w1,m2-w2,m3-w3")
    b = Matching.parse(THREE, "m1-w2,m2-w3,m3-w1")
    m = lottery_matrix([(a, Fraction(1, 3)), (b, Fraction(2, 3))])
    assert m[0, 0] == Fraction(1, 3) and m[0, 1] == Fraction(2, 3)
    assert m.is_doubly_stochastic()


@settings(max_examples=25, deadline=None)
@given(st.integers(0, THREE.num_profiles - 1))
def test_symmetrized_matrices_are_doubly_stochastic(k):
    p = Profile.from_index(THREE, k)
    for mat in (rsd_matrix(p), uniform_royalty_matrix(p)):
        assert mat.is_doubly_stochastic()
