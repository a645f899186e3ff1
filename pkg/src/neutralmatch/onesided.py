"""Sequential dictatorships, two-agent rules and submechanism restriction."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

from .axioms import MechanismTable, as_table
from .core import (
    EMPTY, Instance, Matching, Profile, Submatching, _ranking_index,
    enumerate_matchings, matching_index, partner_array, profile_digits_array,
    rankings,
)


class DomainGapError(LookupError):
    """The picking order (or succession order) is undefined at a reachable node."""

    def __init__(self, submatching: Submatching, instance: Instance, what="picking order"):
        self.submatching = submatching
        key = submatching.encode(instance) or "(empty)"
        super().__init__(f"{what} undefined at reachable submatching {key}")


class RestrictionError(ValueError):
    """Two valid extensions of a reduced profile disagree."""

    def __init__(self, msg, witness):
        super().__init__(msg)
        self.witness = witness


@dataclass(frozen=True)
class TwoAgentRule:
    """A two-agent rule: ``dictator`` (``agent`` decides) or ``unanimity``.

    ``default`` is ``"paired"`` or ``"single"`` for unanimity rules. The
    ``agent`` is an actual agent id, so the same rule object can sit at a
    two-agent node inside a larger picking order.
    """

    kind: str
    agent: int | None = None
    default: str | None = None

    def __post_init__(self):
        if self.kind == "dictator":
            if self.agent is None or self.default is not None:
                raise ValueError("a dictator rule names its agent and no default")
        elif self.kind == "unanimity":
            if self.default not in ("paired", "single") or self.agent is not None:
                raise ValueError("a unanimity rule has default 'paired' or 'single'")
        else:
            raise ValueError(f"unknown two-agent rule {self.kind!r}")

    @classmethod
    def dictator(cls, agent: int) -> "TwoAgentRule":
        return cls("dictator", agent=agent)

    @classmethod
    def unanimity(cls, default: str) -> "TwoAgentRule":
        return cls("unanimity", default=default)

    def pairs(self, p: Profile, a: int, b: int) -> bool:
        """Whether ``a`` and ``b`` end up together."""
        want_a = p.prefers(a, b, a)
        want_b = p.prefers(b, a, b)
        if self.kind == "dictator":
            if self.agent not in (a, b):
                raise ValueError(f"dictator {self.agent} is not one of the two agents")
            return want_a if self.agent == a else want_b
        if self.default == "paired":
            return want_a or want_b
        return want_a and want_b

    def label(self, inst: Instance) -> str:
        if self.kind == "dictator":
            return f"dictator({inst.label(self.agent)})"
        return f"unanimity({self.default})"


def run_two_agent(rule: TwoAgentRule, p: Profile) -> Matching:
    inst = p.instance
    if inst.two or inst.n != 2:
        raise ValueError("two-agent rules need a one-sided profile with n=2")
    if rule.pairs(p, 0, 1):
        return Matching(inst, (1, 0))
    return Matching(inst, (0, 1))


def two_agent_rule_set() -> list[TwoAgentRule]:
    return [TwoAgentRule.dictator(0), TwoAgentRule.dictator(1),
            TwoAgentRule.unanimity("paired"), TwoAgentRule.unanimity("single")]


# --- picking orders --------------------------------------------------------

class PickingOrder:
    """Maps a proper submatching to the next dictator (or a two-agent rule)."""

    def __call__(self, nu: Submatching, remaining: Sequence[int]):
        raise NotImplementedError


@dataclass(frozen=True)
class SerialOrder(PickingOrder):
    """A fixed sequence: the first not-yet-matched agent picks next."""

    sequence: tuple

    def __call__(self, nu, remaining):
        done = nu.matched
        for a in self.sequence:
            if a not in done:
                return a
        raise LookupError("serial order exhausted before all agents were matched")


class CallbackOrder(PickingOrder):
    def __init__(self, fn: Callable):
        self.fn = fn

    def __call__(self, nu, remaining):
        return self.fn(nu, remaining)


class TableOrder(PickingOrder):
    """Explicit decision table keyed by submatching."""

    def __init__(self, instance: Instance, table: dict):
        self.instance = instance
        self.table = dict(table)

    def __call__(self, nu, remaining):
        try:
            return self.table[nu]
        except KeyError:
            raise DomainGapError(nu, self.instance) from None

    def __eq__(self, other):
        return isinstance(other, TableOrder) and self.table == other.table

    def __hash__(self):
        return hash(frozenset(self.table.items()))

    def to_json(self) -> dict:
        inst = self.instance
        nodes = {}
        for nu, v in sorted(self.table.items(), key=lambda kv: (len(kv[0]), kv[0].encode(inst))):
            if isinstance(v, TwoAgentRule):
                d = {"rule": v.kind}
                if v.kind == "dictator":
                    d["agent"] = int(inst.label(v.agent))
                else:
                    d["default"] = v.default
                nodes[nu.encode(inst)] = d
            else:
                nodes[nu.encode(inst)] = int(inst.label(v))
        return {"kind": "picking_order", "n": inst.n, "nodes": nodes}

    @classmethod
    def from_json(cls, data) -> "TableOrder":
        if isinstance(data, str):
            data = json.loads(data)
        inst = Instance.one_sided(int(data["n"]))
        table = {}
        for key, v in data["nodes"].items():
            nu = Submatching.decode(inst, key)
            if isinstance(v, dict):
                if v.get("rule") == "dictator":
                    table[nu] = TwoAgentRule.dictator(inst.parse_agent(v["agent"]))
                else:
                    table[nu] = TwoAgentRule.unanimity(v.get("default"))
            else:
                table[nu] = inst.parse_agent(v)
        return cls(inst, table)


class SequentialDictatorship:
    """One-sided mechanism driven by a picking order."""

    def __init__(self, instance: Instance, order, name: str | None = None):
        if instance.two:
            raise ValueError("sequential dictatorships here are one-sided")
        if not isinstance(order, PickingOrder):
            order = SerialOrder(tuple(order)) if not callable(order) else CallbackOrder(order)
        self.instance = instance
        self.order = order
        self.name = name or (f"sd:fixed={[a + 1 for a in order.sequence]}"
                             if isinstance(order, SerialOrder) else "sd")

    @classmethod
    def fixed(cls, instance: Instance, sequence: Sequence[int]) -> "SequentialDictatorship":
        seq = tuple(sequence)
        if sorted(seq) != list(instance.agents):
            raise ValueError("a fixed order must list every agent once")
        return cls(instance, SerialOrder(seq))

    def __call__(self, p: Profile) -> Matching:
        return run_sd(self, p)


def run_sd(sd: SequentialDictatorship, p: Profile) -> Matching:
    inst = sd.instance
    if p.instance != inst:
        raise ValueError("profile belongs to another instance")
    nu = EMPTY
    while True:
        rem = nu.remaining(inst)
        if not rem:
            break
        if len(rem) == 1:
            nu = nu.extend(singles=rem)
            break
        choice = sd.order(nu, rem)
        if isinstance(choice, TwoAgentRule):
            if len(rem) != 2:
                raise ValueError("a two-agent rule can only act when two agents remain")
            a, b = rem
            nu = nu.extend(pairs=[(a, b)]) if choice.pairs(p, a, b) else nu.extend(singles=rem)
            break
        if choice not in rem:
            raise ValueError(f"picking order chose matched agent {inst.label(choice)}")
        j = p.top(choice, rem)
        nu = nu.extend(singles=[choice]) if j == choice else nu.extend(pairs=[(choice, j)])
    return Matching.from_pairs(inst, nu.pairs, nu.singles)


def reachable_nodes(inst: Instance, order) -> Iterator[tuple[Submatching, object]]:
    """Walk every submatching the algorithm can reach, with the order's choice."""
    stack = [EMPTY]
    while stack:
        nu = stack.pop()
        rem = nu.remaining(inst)
        if len(rem) <= 1:
            continue
        choice = order(nu, rem)
        yield nu, choice
        if isinstance(choice, TwoAgentRule):
            continue
        stack.append(nu.extend(singles=[choice]))
        stack.extend(nu.extend(pairs=[(choice, j)]) for j in rem if j != choice)


def materialize_order(inst: Instance, order) -> TableOrder:
    return TableOrder(inst, dict(reachable_nodes(inst, order)))


def enumerate_picking_orders(n: int, two_agent_rules: bool = True,
                             first: int | None = None) -> Iterator[TableOrder]:
    """Every picking order on the reachable domain for ``n`` agents.

    With ``two_agent_rules`` a node with two agents left may also hold a
    unanimity rule. Use ``first`` to fix the first dictator.
    """
    inst = Instance.one_sided(n)

    def options(rem):
        if len(rem) == 2:
            a, b = rem
            opts = [a, b]
            if two_agent_rules:
                opts += [TwoAgentRule.unanimity("paired"), TwoAgentRule.unanimity("single")]
            return opts
        return list(rem)

    def trees(nu, first_choice=None):
        rem = nu.remaining(inst)
        if len(rem) <= 1:
            yield {}
            return
        choices = [first_choice] if first_choice is not None else options(rem)
        for c in choices:
            if isinstance(c, TwoAgentRule):
                yield {nu: c}
                continue
            kids = [nu.extend(singles=[c])] + [nu.extend(pairs=[(c, j)]) for j in rem if j != c]
            for combo in itertools.product(*[list(trees(k)) for k in kids]):
                table = {nu: c}
                for t in combo:
                    table.update(t)
                yield table

    for table in trees(EMPTY, first):
        yield TableOrder(inst, table)


# --- restriction -------------------------------------------------------------

def restrict_mechanism(f, removed) -> MechanismTable:
    """The submechanism on the other agents after removing ``{j}`` or ``{j, k}``.

    A removed singleton ranks itself first; a removed pair rank each other
    first. Everyone else ranks the removed agents last. Every such extension
    of a reduced profile must give the same outcome on the kept agents.
    """
    table = as_table(f)
    inst = table.instance
    if inst.two:
        raise ValueError("restriction is defined for one-sided mechanisms")
    removed = tuple(sorted(set(removed)))
    if len(removed) not in (1, 2) or not set(removed) <= set(inst.agents):
        raise ValueError("remove one agent or two agents")
    keep = [a for a in inst.agents if a not in removed]
    sub = Instance.one_sided(len(keep))
    index = {a: k for k, a in enumerate(keep)}
    ridx = [_ranking_index(inst, a) for a in inst.agents]

    # rankings available to removed agents
    removed_options = []
    for pos, j in enumerate(removed):
        head = (j,) if len(removed) == 1 else (removed[1 - pos],)
        tails = itertools.permutations([a for a in inst.agents if a not in head])
        removed_options.append([ridx[j][head + t] for t in tails])
    tail_orders = list(itertools.permutations(removed))
    part = partner_array(inst)
    sub_index = matching_index(sub)
    out = np.empty(sub.num_profiles, dtype=np.int16)
    for q in range(sub.num_profiles):
        qp = Profile.from_index(sub, q)
        kept_options = []
        for k, a in enumerate(keep):
            base = tuple(keep[x] for x in qp.prefs[k])
            kept_options.append([ridx[a][base + t] for t in tail_orders])
        result = None
        first_profile = None
        for combo in itertools.product(*kept_options, *removed_options):
            digits = [0] * inst.num_agents
            for a, d in zip(keep + list(removed), combo):
                digits[a] = d
            full = 0
            for d in digits:
                full = full * inst.num_rankings + d
            m = table.outcome_index(full)
            row = part[m]
            if any(int(row[a]) not in index for a in keep):
                raise RestrictionError(
                    "the mechanism matches a kept agent with a removed one",
                    {"profile": Profile.from_index(inst, full)})
            sub_m = sub_index[tuple(index[int(row[a])] for a in keep)]
            if result is None:
                result, first_profile = sub_m, full
            elif sub_m != result:
                raise RestrictionError(
                    "two extensions of the same reduced profile disagree",
                    {"profiles": (Profile.from_index(inst, first_profile),
                                  Profile.from_index(inst, full))})
        out[q] = result
    return MechanismTable(sub, out, name=f"{table.name} without {removed}")


def sd_table(inst: Instance, order) -> MechanismTable:
    return MechanismTable.from_mechanism(SequentialDictatorship(inst, order))


def identify_picking_order(f) -> TableOrder | None:
    """Recover a picking order reproducing ``f``, or None if ``f`` is not an SD."""
    table = as_table(f)
    inst = table.instance
    nodes = _identify(table, list(inst.agents), EMPTY, inst)
    if nodes is None:
        return None
    order = TableOrder(inst, nodes)
    rebuilt = sd_table(inst, order)
    return order if rebuilt.same_as(table) else None


def _identify(table: MechanismTable, agents: list, nu: Submatching, root: Instance):
    """Nodes of a picking order for ``table`` (whose agent k is ``agents[k]``)."""
    inst = table.instance
    if inst.n == 1:
        return {}
    out = table.outcomes.astype(np.int64)
    if inst.n == 2:
        for rule in two_agent_rule_set():
            mech = [run_two_agent(rule, Profile.from_index(inst, q)) for q in range(4)]
            if all(matching_index(inst)[m.partner] == out[q] for q, m in enumerate(mech)):
                if rule.kind == "dictator":
                    return {nu: agents[rule.agent]}
                return {nu: rule}
        return None
    digits = profile_digits_array(inst)
    part = partner_array(inst)[out]
    for d in inst.agents:
        tops = np.array([r[0] for r in rankings(inst, d)])[digits[:, d]]
        if not np.array_equal(part[:, d], tops):
            continue
        nodes = {nu: agents[d]}
        ok = True
        for j in inst.agents:
            removed = {d} if j == d else {d, j}
            try:
                sub = restrict_mechanism(table, removed)
            except RestrictionError:
                ok = False
                break
            child_nu = (nu.extend(singles=[agents[d]]) if j == d
                        else nu.extend(pairs=[(agents[d], agents[j])]))
            kept = [agents[a] for a in inst.agents if a not in removed]
            child = _identify(sub, kept, child_nu, root)
            if child is None:
                ok = False
                break
            nodes.update(child)
        if ok:
            return nodes
    return None


def two_agent_scan() -> list[tuple[str, MechanismTable]]:
    """All GSP and efficient mechanisms for two one-sided agents, by brute force."""
    from .axioms import check_efficiency, check_group_sp
    inst = Instance.one_sided(2)
    M = len(enumerate_matchings(inst))
    survivors = []
    for outs in itertools.product(range(M), repeat=inst.num_profiles):
        t = MechanismTable(inst, np.array(outs, dtype=np.int16))
        if check_efficiency(t).holds and check_group_sp(t, 2).holds:
            survivors.append(t)
    named = []
    for t in survivors:
        name = next((r.label(inst) for r in two_agent_rule_set()
                     if MechanismTable.from_function(inst, lambda p, r=r: run_two_agent(r, p)).same_as(t)),
                    "unnamed")
        named.append((name, t))
    return named
