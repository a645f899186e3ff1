import json

import pytest

from neutralmatch.axioms import MechanismTable, check_efficiency, check_group_sp
from neutralmatch.core import EMPTY, Instance, Matching, Submatching, one_sided_profile
from neutralmatch.onesided import (
    DomainGapError, SequentialDictatorship, TableOrder, TwoAgentRule,
    enumerate_picking_orders, identify_picking_order, two_agent_scan, restrict_mechanism,
    run_sd, run_two_agent, sd_table,
)

ONE3 = Instance.one_sided(3)
ONE2 = Instance.one_sided(2)


def parse(inst, text):
    return Matching.parse(inst, text)


def test_dictator_takes_top_choice():
    p = one_sided_profile([[2, 1, 3], [1, 2, 3], [3, 1, 2]])
    assert run_sd(SequentialDictatorship.fixed(ONE3, [0, 1, 2]), p) == parse(ONE3, "1-2,3")


def test_everyone_single_when_all_top_self():
    p = one_sided_profile([[1, 2, 3], [2, 1, 3], [3, 1, 2]])
    for order in enumerate_picking_orders(3):
        assert SequentialDictatorship(ONE3, order)(p) == parse(ONE3, "1,2,3")


def test_leftover_agent_is_single():
    p = one_sided_profile([[2, 3, 1], [3, 1, 2], [1, 2, 3]])
    assert run_sd(SequentialDictatorship.fixed(ONE3, [0, 1, 2]), p) == parse(ONE3, "1-2,3")


def test_fixed_order_must_list_everyone():
    with pytest.raises(ValueError):
        SequentialDictatorship.fixed(ONE3, [0, 1])


def test_domain_gap_reports_submatching():
    order = TableOrder(ONE3, {EMPTY: 0})
    p = one_sided_profile([[1, 2, 3], [2, 1, 3], [3, 1, 2]])
    with pytest.raises(DomainGapError) as err:
        SequentialDictatorship(ONE3, order)(p)
    assert err.value.submatching == Submatching(frozenset(), frozenset({0}))


def test_picking_order_counts():
    assert len(list(enumerate_picking_orders(3))) == 12
    assert len(list(enumerate_picking_orders(3, two_agent_rules=False))) == 6
    assert len(list(enumerate_picking_orders(3, first=1))) == 4


def test_picking_order_json_round_trip():
    for order in enumerate_picking_orders(3):
        data = json.loads(json.dumps(order.to_json()))
        assert TableOrder.from_json(data) == order


@pytest.mark.parametrize("rule,expected", [
    (TwoAgentRule.dictator(0), "1-2"),
    (TwoAgentRule.dictator(1), "1,2"),
    (TwoAgentRule.unanimity("paired"), "1-2"),
    (TwoAgentRule.unanimity("single"), "1,2"),
])
def test_two_agent_rules_on_disagreement(rule, expected):
    # agent 1 wants agent 2, agent 2 would rather be single
    p = one_sided_profile([[2, 1], [2, 1]])
    assert run_two_agent(rule, p) == parse(ONE2, expected)


@pytest.mark.parametrize("rule", [TwoAgentRule.dictator(0), TwoAgentRule.dictator(1),
                                  TwoAgentRule.unanimity("paired"), TwoAgentRule.unanimity("single")])
def test_two_agent_rules_respect_agreement(rule):
    assert run_two_agent(rule, one_sided_profile([[2, 1], [1, 2]])) == parse(ONE2, "1-2")
    assert run_two_agent(rule, one_sided_profile([[1, 2], [2, 1]])) == parse(ONE2, "1,2")


def test_two_agent_rule_needs_two_agents():
    with pytest.raises(ValueError):
        run_two_agent(TwoAgentRule.dictator(0), one_sided_profile([[1, 2, 3]] * 3))
    with pytest.raises(ValueError):
        TwoAgentRule("unanimity", default="maybe")


def test_two_agent_scan_finds_the_four_rules():
    names = sorted(name for name, _ in two_agent_scan())
    assert names == ["dictator(1)", "dictator(2)", "unanimity(paired)", "unanimity(single)"]


def test_restrict_four_agent_sd_to_three():
    four = Instance.one_sided(4)
    f = sd_table(four, SequentialDictatorship.fixed(four, [0, 1, 2, 3]).order)
    g = restrict_mechanism(f, {3})
    assert g.same_as(sd_table(ONE3, SequentialDictatorship.fixed(ONE3, [0, 1, 2]).order))


def test_restrict_three_agent_sd_by_first_dictator():
    f = sd_table(ONE3, SequentialDictatorship.fixed(ONE3, [0, 1, 2]).order)
    g = restrict_mechanism(f, {0})
    assert g.same_as(sd_table(ONE2, SequentialDictatorship.fixed(ONE2, [0, 1]).order))


def test_restrict_pair_from_four_agent_sd():
    four = Instance.one_sided(4)
    f = sd_table(four, SequentialDictatorship.fixed(four, [0, 1, 2, 3]).order)
    g = restrict_mechanism(f, {1, 2})
    # kept agents 1 and 4 are relabelled 1 and 2, agent 1 still moves first
    assert g.same_as(sd_table(ONE2, SequentialDictatorship.fixed(ONE2, [0, 1]).order))


def test_restriction_of_every_three_agent_sd_is_an_sd():
    for order in enumerate_picking_orders(3):
        f = sd_table(ONE3, order)
        for removed in ({0}, {1}, {2}, {0, 1}, {0, 2}, {1, 2}):
            g = restrict_mechanism(f, removed)
            assert identify_picking_order(g) is not None


def test_identify_recovers_every_order():
    for order in enumerate_picking_orders(3):
        found = identify_picking_order(sd_table(ONE3, order))
        assert found is not None
        assert sd_table(ONE3, found).same_as(sd_table(ONE3, order))


def test_identify_rejects_non_dictatorships():
    from neutralmatch.axioms import RMinMechanism, three_agent_priority
    assert identify_picking_order(MechanismTable.from_mechanism(
        RMinMechanism(ONE3, three_agent_priority(ONE3)))) is None


def test_every_three_agent_sd_is_efficient_and_gsp():
    for order in enumerate_picking_orders(3):
        t = sd_table(ONE3, order)
        assert check_efficiency(t).holds
        assert check_group_sp(t, 2).holds
