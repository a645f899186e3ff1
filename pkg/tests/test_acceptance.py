"""Acceptance criteria, one test each, with their wall-clock limits."""

import itertools
import json
import time
from importlib import resources

import numpy as np
import pytest

from neutralmatch import axioms as ax
from neutralmatch.core import Instance, Matching, Symmetry, profile_from_json, reflect_matching
from neutralmatch.fouragent import catalog_lemma4, enumerate_valid_four
from neutralmatch.onesided import (
    SequentialDictatorship, enumerate_picking_orders, two_agent_scan,
)
from neutralmatch.randomized import (
    RationalMatrix, fosd_dominates, half_support_matrix, rsd_matrix, uniform_royalty_matrix,
)
from neutralmatch.twosided import (
    RoyalCascade, induced_one_sided, one_side_dictatorship, stable_matchings,
)

criterion = pytest.mark.criterion


@pytest.fixture(scope="module")
def fx():
    return json.loads(resources.files("neutralmatch").joinpath("data/fixtures.json").read_text())


class Clock:
    def __init__(self, limit):
        self.limit = limit
        self.start = time.perf_counter()

    def check(self, extra=0.0):
        elapsed = time.perf_counter() - self.start + extra
        assert elapsed < self.limit, f"took {elapsed:.1f}s, limit {self.limit}s"


@pytest.fixture(scope="module")
def sd3_tables():
    inst = Instance.one_sided(3)
    return [ax.MechanismTable.from_mechanism(SequentialDictatorship(inst, order))
            for order in enumerate_picking_orders(3)]


@criterion(1, "RSD allocation matrix", 1)
def test_rsd_table(cyclic, fx):
    clock = Clock(1)
    assert rsd_matrix(cyclic) == RationalMatrix.parse(fx["rsd_table"]["matrix"])
    clock.check()


@criterion(2, "uniform royal-pair allocation matrix", 1)
def test_royalty_table(cyclic, fx):
    clock = Clock(1)
    spec = fx["royalty_table"]
    got = uniform_royalty_matrix(cyclic, spec["terminal"])
    assert got == RationalMatrix.parse(spec["matrix"])
    print(f"terminal tie-break: {spec['terminal']}")
    clock.check()


@criterion(3, "first-order dominance chain", 1)
def test_fosd_chain(cyclic, fx):
    clock = Clock(1)
    half, rsd, roy = half_support_matrix(cyclic), rsd_matrix(cyclic), uniform_royalty_matrix(cyclic)
    assert half == RationalMatrix.parse(fx["half_support_table"]["matrix"])
    assert fosd_dominates(cyclic, half, rsd)
    assert fosd_dominates(cyclic, rsd, roy)
    clock.check()


@criterion(4, "two-couple brute force equals the catalog", 10)
def test_two_couple_catalog(fx):
    clock = Clock(10)
    survivors = enumerate_valid_four()
    assert survivors == catalog_lemma4()
    assert len(survivors) == fx["lemma4"]["survivors"]
    clock.check()


@criterion(5, "stable matchings are not self-reflections", 1)
def test_stability_counterexample(cyclic, fx):
    clock = Clock(1)
    inst = cyclic.instance
    got = stable_matchings(cyclic)
    assert set(got) == {Matching.parse(inst, s) for s in fx["stability"]["stable"]}
    assert len(got) == 2
    sigma = Symmetry.canonical(inst)
    for mu in got:
        assert reflect_matching(sigma, mu) != mu
    clock.check()


@criterion(6, "neutral royalty mechanisms are efficient, pairwise GSP and weakly neutral", 300)
def test_royalty_family_axioms(royalty_family):
    clock = Clock(300)
    tables = royalty_family.get()
    assert len(tables) >= 20
    distinct = []
    for t in tables:
        assert not any(t.same_as(d) for d in distinct), t.name
        distinct.append(t)
    sigma = Symmetry.canonical(royalty_family.inst)
    for t in tables:
        assert ax.check_efficiency(t).holds, t.name
        assert ax.check_group_sp(t, 2).holds, t.name
        assert ax.check_weak_gn(t, sigma).holds, t.name
    clock.check()


@criterion(7, "sequential dictatorships are efficient and GSP", 120)
def test_sequential_dictatorships(sd3_tables):
    clock = Clock(120)
    assert len(sd3_tables) == 12
    for t in sd3_tables:
        assert ax.check_efficiency(t).holds
        assert ax.check_group_sp(t, 2).holds
        assert ax.check_group_sp(t, "all").holds
    four = Instance.one_sided(4)
    t4 = ax.MechanismTable.from_mechanism(SequentialDictatorship.fixed(four, [2, 0, 3, 1]))
    assert ax.check_efficiency(t4).holds
    assert ax.check_group_sp(t4, 2).holds
    clock.check()


@criterion(8, "two-agent scan leaves dictatorships and unanimity rules", 1)
def test_two_agent_scan():
    clock = Clock(1)
    names = sorted(name for name, _ in two_agent_scan())
    assert len(names) == 4
    assert "unnamed" not in names
    assert sum(n.startswith("dictator") for n in names) == 2
    assert sum(n.startswith("unanimity") for n in names) == 2
    clock.check()


@criterion(9, "individual rationality fails for every first dictator", 1)
def test_sd_individual_rationality():
    clock = Clock(1)
    inst = Instance.one_sided(3)
    for first in inst.agents:
        t = ax.MechanismTable.from_mechanism(
            SequentialDictatorship(inst, next(enumerate_picking_orders(3, first=first))))
        rep = ax.check_ir(t)
        assert not rep.holds
        assert ax.revalidate(rep, t)
    clock.check()


@criterion(10, "R-minimizing and royal cascade counterexamples", 10)
def test_counterexamples(fx):
    clock = Clock(10)
    spec = fx["rmin_counterexample"]
    p = profile_from_json(spec["profile"])
    one = p.instance
    rmin = ax.MechanismTable.from_mechanism(ax.RMinMechanism(one, ax.three_agent_priority(one)))
    assert not ax.check_group_sp(rmin, 1).holds
    assert rmin(p) == Matching.parse(one, spec["outcome"])
    hits = ax.manipulations_at(rmin, p, 1)
    assert any(h["coalition"] == spec["coalition"] and h["misreport"] == spec["misreport"]
               and h["deviation_outcome"] == Matching.parse(one, spec["deviation_outcome"])
               for h in hits)

    inst = Instance.two_sided(3)
    P = inst.parse_agent
    cascade = ax.MechanismTable.from_mechanism(RoyalCascade(inst))
    assert ax.check_weak_gn(cascade, Symmetry.canonical(inst)).holds
    rep = ax.check_gn(cascade)
    assert not rep.holds and ax.revalidate(rep, cascade)
    # the mirror image of the reported witness leaves the women dictating
    g = ax.continuation_submechanism(
        cascade, [P("m2"), P("m3"), P("w1"), P("w2")],
        {P("w3"): (P("m1"), P("m2"), P("m3")), P("m1"): (P("w3"), P("w1"), P("w2"))})
    assert one_side_dictatorship(g.table)[0] == "women"
    assert not ax.weak_gn_symmetries(g.table)

    cont = fx["cascade_counterexample"]["continuation"]
    inst4 = Instance.two_sided(cont["n"])
    subset = [inst4.parse_agent(a) for a in cont["subset"]]
    prefs = {inst4.parse_agent(a): tuple(inst4.parse_agent(x) for x in r)
             for a, r in cont["outsiders"].items()}
    g4 = ax.continuation_submechanism(RoyalCascade(inst4), subset, prefs)
    assert one_side_dictatorship(g4.table)[0] == "women"
    assert not ax.weak_gn_symmetries(g4.table)
    clock.check()


@criterion(11, "pairwise and unrestricted coalition checks agree", 300)
def test_coalition_size_cross_validation(royalty_family, sd3_tables):
    clock = Clock(300)
    two = Instance.one_sided(2)
    n2 = [ax.MechanismTable(two, np.array(outs, dtype=np.int16))
          for outs in itertools.product(range(2), repeat=two.num_profiles)]
    assert len(n2) == 16
    rmin_inst = Instance.one_sided(3)
    extra = [ax.MechanismTable.from_mechanism(ax.RMinMechanism(rmin_inst, ax.three_agent_priority(rmin_inst))),
             ax.MechanismTable.from_mechanism(RoyalCascade(Instance.two_sided(3)))]
    for t in royalty_family.get() + sd3_tables + n2 + extra:
        assert ax.check_group_sp(t, 2).holds == ax.check_group_sp(t, "all").holds, t.name
    clock.check()


@criterion(12, "induced one-sided mechanisms are efficient and GSP", 60)
def test_induced_one_sided(royalty_family):
    tables = royalty_family.get()
    clock = Clock(60)
    sigma = Symmetry.canonical(royalty_family.inst)
    for t in tables:
        g = induced_one_sided(t, sigma)
        assert g.instance == Instance.one_sided(3)
        assert ax.check_efficiency(g).holds, t.name
        assert ax.check_group_sp(g, "all").holds, t.name
    clock.check()
