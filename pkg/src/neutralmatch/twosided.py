"""Royalty mechanisms, neutral royalty construction and two-sided helpers."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .axioms import MechanismTable, as_table, blocking_pairs, check_weak_gn
from .core import (
    EMPTY, Instance, Matching, Profile, Submatching, Symmetry, enumerate_matchings,
    matching_index,
)
from .fouragent import FourAgentMechanism, FourAgentRule, named_mechanism
from .onesided import DomainGapError

D, U = "D", "U"


@dataclass(frozen=True)
class RoyalStep:
    man: int
    woman: int
    regime: str

    def __post_init__(self):
        if self.regime not in (D, U):
            raise ValueError(f"regime must be 'D' or 'U', got {self.regime!r}")


class RoyaltyMechanism:
    """Succession order (``order``) plus terminal condition (``terminal``).

    ``order`` maps a submatching with more than four agents left to a
    :class:`RoyalStep`; ``terminal`` maps a submatching with exactly four
    agents left to a :class:`FourAgentRule` on those agents.
    """

    def __init__(self, instance: Instance, order: dict, terminal: dict, name: str = "royalty"):
        if not instance.two:
            raise ValueError("royalty mechanisms are two-sided")
        self.instance = instance
        self.order = dict(order)
        self.terminal = dict(terminal)
        self.name = name

    def __call__(self, p: Profile) -> Matching:
        return run_royalty(self, p)

    def validate(self) -> None:
        """Check the reachable domain; raise :class:`DomainGapError` on a gap."""
        inst = self.instance
        stack = [EMPTY]
        seen = set()
        while stack:
            nu = stack.pop()
            if nu in seen:
                continue
            seen.add(nu)
            rem = nu.remaining(inst)
            if len(rem) <= 2:
                continue
            if len(rem) == 4:
                rule = self.terminal.get(nu)
                if rule is None:
                    raise DomainGapError(nu, inst, "terminal condition")
                if sorted(rule.agents) != rem:
                    raise ValueError(f"terminal rule at {nu.encode(inst)} acts on other agents")
                continue
            step = self.order.get(nu)
            if step is None:
                raise DomainGapError(nu, inst, "succession order")
            m, w = step.man, step.woman
            if m not in rem or w not in rem or not inst.is_man(m) or inst.is_man(w):
                raise ValueError(f"royals at {nu.encode(inst)} are not a free man and woman")
            stack.extend(_children(inst, nu, m, w))

    def reachable(self) -> list[Submatching]:
        self.validate()
        out, stack = [], [EMPTY]
        while stack:
            nu = stack.pop()
            out.append(nu)
            if nu in self.order:
                s = self.order[nu]
                stack.extend(_children(self.instance, nu, s.man, s.woman))
        return out

    def to_json(self) -> dict:
        inst = self.instance
        lab = inst.label
        order = {nu.encode(inst): {"royals": [lab(s.man), lab(s.woman)], "regime": s.regime}
                 for nu, s in sorted(self.order.items(), key=lambda kv: kv[0].encode(inst))}
        term = {nu.encode(inst): {"agents": [lab(a) for a in r.agents],
                                  "table": r.mechanism.table,
                                  "generators": [[("m1", "m2", "w1", "w2")[a] for a in g]
                                                 for g in r.mechanism.generators]}
                for nu, r in sorted(self.terminal.items(), key=lambda kv: kv[0].encode(inst))}
        return {"kind": "royalty", "n": inst.n, "order": order, "terminal": term}

    @classmethod
    def from_json(cls, data) -> "RoyaltyMechanism":
        if isinstance(data, str):
            data = json.loads(data)
        inst = Instance.two_sided(int(data["n"]))
        order = {}
        for key, v in data.get("order", {}).items():
            m, w = (inst.parse_agent(x) for x in v["royals"])
            order[Submatching.decode(inst, key)] = RoyalStep(m, w, v["regime"])
        terminal = {}
        for key, v in data.get("terminal", {}).items():
            agents = tuple(inst.parse_agent(x) for x in v["agents"])
            if "table" in v:
                mech = FourAgentMechanism(int(v["table"]))
            elif "generators" in v:
                mech = FourAgentMechanism.from_generators(v["generators"])
            else:
                mech = named_mechanism(v["name"])
            terminal[Submatching.decode(inst, key)] = FourAgentRule(mech, agents)
        r = cls(inst, order, terminal, name=data.get("name", "royalty"))
        r.validate()
        return r


def _children(inst: Instance, nu: Submatching, m: int, w: int) -> list[Submatching]:
    rem = nu.remaining(inst)
    kids = [nu.extend(pairs=[(m, w)])]
    for x in rem:
        if inst.is_man(x) or x == w:
            continue
        for y in rem:
            if inst.is_man(y) and y != m:
                kids.append(nu.extend(pairs=[(m, x), (y, w)]))
    return kids


def run_royalty(r: RoyaltyMechanism, p: Profile) -> Matching:
    inst = r.instance
    if p.instance != inst:
        raise ValueError("profile belongs to another instance")
    nu = EMPTY
    while True:
        rem = nu.remaining(inst)
        if not rem:
            break
        if len(rem) == 2:
            nu = nu.extend(pairs=[tuple(rem)])
            break
        if len(rem) == 4:
            rule = r.terminal.get(nu)
            if rule is None:
                raise DomainGapError(nu, inst, "terminal condition")
            nu = nu.extend(pairs=rule.pairs(p))
            break
        step = r.order.get(nu)
        if step is None:
            raise DomainGapError(nu, inst, "succession order")
        m, w = step.man, step.woman
        women = [x for x in rem if not inst.is_man(x)]
        men = [x for x in rem if inst.is_man(x)]
        m_tops = p.top(m, women) == w
        w_tops = p.top(w, men) == m
        together = (m_tops or w_tops) if step.regime == D else (m_tops and w_tops)
        if together:
            nu = nu.extend(pairs=[(m, w)])
        else:
            x = p.top(m, [a for a in women if a != w])
            y = p.top(w, [a for a in men if a != m])
            nu = nu.extend(pairs=[(m, x), (y, w)])
    return Matching.from_pairs(inst, nu.pairs)


def build_royalty(inst: Instance, choose: Callable, terminal: Callable,
                  name: str = "royalty") -> RoyaltyMechanism:
    """Materialize a royalty mechanism from callbacks over the reachable domain.

    ``choose(nu, remaining) -> RoyalStep`` and
    ``terminal(nu, remaining) -> FourAgentRule``.
    """
    order, term = {}, {}
    stack = [EMPTY]
    while stack:
        nu = stack.pop()
        rem = nu.remaining(inst)
        if len(rem) <= 2 or nu in order or nu in term:
            continue
        if len(rem) == 4:
            term[nu] = terminal(nu, rem)
            continue
        step = choose(nu, rem)
        order[nu] = step
        stack.extend(_children(inst, nu, step.man, step.woman))
    r = RoyaltyMechanism(inst, order, term, name)
    r.validate()
    return r


def index_pairing_rule(inst: Instance, mech: FourAgentMechanism, rem) -> FourAgentRule:
    """``mech`` on four survivors with ``nu`` pairing the men and women in index order."""
    men = sorted(a for a in rem if inst.is_man(a))
    women = sorted(a for a in rem if not inst.is_man(a))
    return FourAgentRule(mech, (men[0], men[1], women[0], women[1]))


def royal_pair_mechanism(inst: Instance, man: int, woman: int, regime: str = D,
                         terminal: FourAgentMechanism | str = "a2",
                         name: str | None = None) -> RoyaltyMechanism:
    """First royals ``(man, woman)``; later rounds use the lowest free man and woman.

    The terminal rule pairs the four survivors by index order for its
    diagonal matching.
    """
    mech = named_mechanism(terminal) if isinstance(terminal, str) else terminal

    def choose(nu, rem):
        if nu == EMPTY:
            return RoyalStep(man, woman, regime)
        m = min(a for a in rem if inst.is_man(a))
        w = min(a for a in rem if not inst.is_man(a))
        return RoyalStep(m, w, regime)

    return build_royalty(inst, choose, lambda nu, rem: index_pairing_rule(inst, mech, rem),
                         name or f"royal({inst.label(man)},{inst.label(woman)})")


# --- neutral royalty construction --------------------------------------------

@dataclass
class TerminalNode:
    """A catalog mechanism on the four agents left.

    Catalog labels: the two sigma couples sorted by man id become
    ``(m1, w1)`` and ``(m2, w2)``.
    """

    mechanism: FourAgentMechanism | str
    sigma: tuple | None = None

    def resolve(self) -> FourAgentMechanism:
        m = self.mechanism
        return named_mechanism(m) if isinstance(m, str) else m


@dataclass
class RoyalNode:
    """Royal couple ``(royal, sigma(royal))`` with a regime and its branches.

    ``matched`` is the continuation after the royals pair up. ``branches``
    maps ``(x, y)`` (the royal man took woman ``x``, the royal woman took man
    ``y``) to a continuation. Only symmetric branches and the lower of each
    asymmetric pair are read; the other one is derived by reflection.
    ``sigma`` optionally fixes this node's symmetry as (man, woman) pairs.
    """

    royal: int
    regime: str = D
    matched: object = None
    branches: dict = field(default_factory=dict)
    sigma: tuple | None = None


@dataclass
class NeutralRoyaltySpec:
    sigma: Symmetry
    root: object
    fill: Callable | None = None  # (remaining, sigma_pairs) -> node, for missing branches

    @property
    def instance(self) -> Instance:
        return self.sigma.instance


class SpecError(ValueError):
    """A neutral royalty specification is incomplete or inconsistent."""


def _pairs_of(sigma: Symmetry, agents) -> tuple:
    s = sigma.sigma
    return tuple(sorted((a, s[a]) for a in agents if a < sigma.instance.n))


def _as_map(pairs) -> dict:
    out = {}
    for m, w in pairs:
        out[m], out[w] = w, m
    return out


def _sorted_pairs(inst: Instance, rem) -> tuple:
    men = sorted(a for a in rem if inst.is_man(a))
    women = sorted(a for a in rem if not inst.is_man(a))
    return tuple(zip(men, women))


def build_neutral_royalty(spec: NeutralRoyaltySpec, name: str = "neutral_royalty") -> RoyaltyMechanism:
    """Materialize the succession order and terminal condition of ``spec``.

    Asymmetric branch pairs are completed by reflecting the chosen branch
    through the parent node's symmetry.
    """
    inst = spec.instance
    order: dict = {}
    term: dict = {}
    root_pairs = _pairs_of(spec.sigma, inst.agents)
    _build(inst, spec, spec.root, EMPTY, root_pairs, order, term)
    r = RoyaltyMechanism(inst, order, term, name)
    r.validate()
    return r


def _build(inst, spec, node, nu, pairs, order, term):
    rem = nu.remaining(inst)
    if len(rem) <= 2:
        return
    if node is None:
        if spec.fill is None:
            raise SpecError(f"free-choice table incomplete at {nu.encode(inst) or '(empty)'}")
        node = spec.fill(tuple(rem), pairs)
    smap = _as_map(pairs)
    if len(rem) == 4:
        if not isinstance(node, TerminalNode):
            raise SpecError(f"expected a terminal node at {nu.encode(inst)}")
        (ma, wa), (mb, wb) = sorted(pairs)
        term[nu] = FourAgentRule(node.resolve(), (ma, mb, wa, wb))
        return
    if not isinstance(node, RoyalNode):
        raise SpecError(f"expected a royal node at {nu.encode(inst) or '(empty)'}")
    m = node.royal
    if m not in smap:
        raise SpecError(f"royal {inst.label(m)} is not free at {nu.encode(inst) or '(empty)'}")
    w = smap[m]
    order[nu] = RoyalStep(m, w, node.regime)
    rest_pairs = tuple(pr for pr in pairs if pr[0] != m)
    _build(inst, spec, _child_with_sigma(node.matched, rest_pairs, True, inst),
           nu.extend(pairs=[(m, w)]), rest_pairs, order, term)
    women = [a for a in rem if not inst.is_man(a) and a != w]
    men = [a for a in rem if inst.is_man(a) and a != m]
    for x in women:
        for y in men:
            child_nu = nu.extend(pairs=[(m, x), (y, w)])
            left = [a for a in rem if a not in (m, w, x, y)]
            if len(left) <= 2:
                continue
            if smap[x] == y:
                sub_pairs = tuple(pr for pr in pairs if pr[0] not in (m, y))
                child = _child_with_sigma(node.branches.get((x, y)), sub_pairs, True, inst)
                _build(inst, spec, child, child_nu, sub_pairs, order, term)
                continue
            k, l = y, smap[x]
            if k < l:
                child = node.branches.get((x, y))
                sub_pairs = (tuple(sorted(child.sigma)) if child is not None and child.sigma
                             else _sorted_pairs(inst, left))
                _build(inst, spec, child, child_nu, sub_pairs, order, term)
            else:
                xx, yy = smap[y], smap[x]
                src = node.branches.get((xx, yy))
                src_nu = nu.extend(pairs=[(m, xx), (yy, w)])
                src_left = [a for a in rem if a not in (m, w, xx, yy)]
                src_pairs = (tuple(sorted(src.sigma)) if src is not None and src.sigma
                             else _sorted_pairs(inst, src_left))
                sub_o, sub_t = {}, {}
                _build(inst, spec, src, src_nu, src_pairs, sub_o, sub_t)
                for key, step in sub_o.items():
                    order[_reflect_sub(smap, key, nu)] = RoyalStep(
                        smap[step.woman], smap[step.man], step.regime)
                for key, rule in sub_t.items():
                    term[_reflect_sub(smap, key, nu)] = rule.reflect(_full_map(inst, smap))


def _full_map(inst, smap):
    return tuple(smap.get(a, a) for a in inst.agents)


def _reflect_sub(smap, key: Submatching, base: Submatching) -> Submatching:
    # pairs already fixed in ``base`` stay; the rest are mirrored through smap
    new = [pr for pr in key.pairs if pr in base.pairs]
    new += [(smap[a], smap[b]) for a, b in key.pairs if (a, b) not in base.pairs]
    return Submatching(frozenset(new))


def _child_with_sigma(child, sub_pairs, symmetric, inst):
    if child is not None and child.sigma is not None and symmetric:
        if tuple(sorted(child.sigma)) != tuple(sorted(sub_pairs)):
            raise SpecError("a symmetric branch must keep the restricted symmetry")
    return child


def uniform_node(inst: Instance, rem, pairs, regime=D, terminal="f", first=None):
    """Royal node (or terminal node) using the same regime and terminal everywhere."""
    if len(rem) <= 2:
        return None
    if len(rem) == 4:
        return TerminalNode(terminal)
    royal = first if first is not None else min(m for m, _ in pairs)
    return RoyalNode(royal, regime)


def uniform_neutral_royalty(inst: Instance, regime: str = D, first: int = 0,
                            terminal="f", sigma: Symmetry | None = None) -> RoyaltyMechanism:
    """Neutral royalty mechanism with couple ``first`` royal first.

    Every later round uses the lowest-indexed free sigma couple, the same
    regime, and ``terminal`` for the last four agents. ``first`` is a
    0-based man id.
    """
    sigma = sigma or Symmetry.canonical(inst)

    def fill(rem, pairs):
        return uniform_node(inst, rem, pairs, regime, terminal)

    root = uniform_node(inst, list(inst.agents), _pairs_of(sigma, inst.agents),
                        regime, terminal, first)
    tname = terminal if isinstance(terminal, str) else f"table{terminal.table}"
    spec = NeutralRoyaltySpec(sigma, root, fill)
    return build_neutral_royalty(spec, name=f"all_{regime}:first={first + 1},terminal={tname}")


def reflect_royalty(r: RoyaltyMechanism, sigma: Symmetry) -> RoyaltyMechanism:
    """``sigma`` applied to the whole mechanism: ``p -> sigma * r(sigma(p))``."""
    smap = _as_map(_pairs_of(sigma, r.instance.agents))
    order = {_reflect_sub(smap, k, EMPTY): RoyalStep(smap[s.woman], smap[s.man], s.regime)
             for k, s in r.order.items()}
    term = {_reflect_sub(smap, k, EMPTY): t.reflect(sigma.sigma) for k, t in r.terminal.items()}
    return RoyaltyMechanism(r.instance, order, term, r.name + "~")


# --- induced one-sided mechanism ------------------------------------------------

class ReadoutError(ValueError):
    def __init__(self, msg, witness):
        super().__init__(msg)
        self.witness = witness


def symmetric_lift(sigma: Symmetry, q: Profile) -> Profile:
    """The two-sided profile in which couple ``j`` both rank as one-sided agent ``j``."""
    inst = sigma.instance
    couples = sorted(range(inst.n))
    s = sigma.sigma
    prefs = [None] * inst.num_agents
    for j in couples:
        order = q.prefs[j]
        prefs[j] = tuple(s[k] for k in order)
        prefs[s[j]] = tuple(order)
    return Profile(inst, prefs)


def induced_one_sided(f, sigma: Symmetry, check: bool = True) -> MechanismTable:
    """The one-sided mechanism read off ``f`` on symmetric profiles.

    Couple ``j`` is ``(m_j, sigma(m_j))``. Raises :class:`ReadoutError` if
    ``f`` is not weakly gender-neutral with respect to ``sigma``.
    """
    table = as_table(f)
    inst = table.instance
    if check:
        rep = check_weak_gn(table, sigma)
        if not rep.holds:
            raise ReadoutError("mechanism is not weakly gender-neutral for this symmetry",
                               rep.witness)
    one = Instance.one_sided(inst.n)
    s = sigma.sigma
    out = np.empty(one.num_profiles, dtype=np.int16)
    index = matching_index(one)
    for k in range(one.num_profiles):
        q = Profile.from_index(one, k)
        mu = table(symmetric_lift(sigma, q))
        g = []
        for j in range(inst.n):
            i = s[mu(j)]
            if mu(s[j]) != i:
                raise ReadoutError("inconsistent readout", {"profile": q, "outcome": mu})
            g.append(i)
        out[k] = index[tuple(g)]
    return MechanismTable(one, out, name=f"induced({table.name})")


# --- two-sided serial dictatorship, stability ------------------------------------

def run_sd_two_sided(order: Sequence[int], p: Profile) -> Matching:
    inst = p.instance
    if sorted(order) != list(inst.agents):
        raise ValueError("order must list every agent once")
    partner = {}
    for a in order:
        if a in partner:
            continue
        free = [b for b in inst.partners(a) if b not in partner]
        b = p.top(a, free)
        partner[a], partner[b] = b, a
    return Matching(inst, tuple(partner[a] for a in inst.agents))


class SerialDictatorship2:
    def __init__(self, instance: Instance, order: Sequence[int], name: str | None = None):
        self.instance = instance
        self.order = tuple(order)
        self.name = name or "sd2:order=[" + ",".join(instance.label(a) for a in self.order) + "]"

    def __call__(self, p: Profile) -> Matching:
        return run_sd_two_sided(self.order, p)


def stable_matchings(p: Profile) -> list[Matching]:
    return [mu for mu in enumerate_matchings(p.instance) if not blocking_pairs(p, mu)]


def one_side_dictatorship(g) -> tuple[str, tuple] | None:
    """``("men"|"women", order)`` if ``g`` is a serial dictatorship of one side."""
    table = as_table(g)
    inst = table.instance
    for side_name, side in (("men", inst.men), ("women", inst.women)):
        for perm in itertools.permutations(side):
            order = list(perm) + [a for a in inst.agents if a not in perm]
            sd = MechanismTable.from_mechanism(SerialDictatorship2(inst, order))
            if sd.same_as(table):
                return side_name, perm
    return None


class StableChoice:
    """Some stable matching at every profile (the first in canonical order)."""

    def __init__(self, instance: Instance):
        self.instance = instance
        self.name = "stable_first"

    def __call__(self, p):
        return stable_matchings(p)[0]


# --- royal cascade (weakly but not fully gender-neutral) -----------------------

class RoyalCascade:
    """Couples in index order act as royals until one pair splits.

    A couple pairs up only when both top-rank each other; otherwise each
    takes their favourite free partner other than their own. If the man
    took ``w_j`` and the woman took ``m_l``, the men pick serially in index
    order when ``j < l``, the women when ``j > l``, and the cascade moves on
    to the next intact couple when ``j == l``.
    """

    name = "royal_cascade"

    def __init__(self, instance: Instance):
        if not instance.two:
            raise ValueError("the cascade is two-sided")
        self.instance = instance

    def __call__(self, p: Profile) -> Matching:
        inst = self.instance
        n = inst.n
        prefs = p.prefs
        partner: dict = {}

        def top(a, exclude=-1):
            for j in prefs[a]:
                if j not in partner and j != exclude:
                    return j
            raise ValueError(f"agent {inst.label(a)} has no available partner")

        def pair(a, b):
            partner[a], partner[b] = b, a

        for k in range(n):
            m, w = k, n + k
            if m in partner or w in partner:
                continue
            if len(partner) == 2 * n - 2:
                pair(m, w)
                break
            if top(m) == w and top(w) == m:
                pair(m, w)
                continue
            x, y = top(m, w), top(w, m)
            pair(m, x)
            pair(y, w)
            j, l = x - n, y
            if j == l:
                continue
            side = range(n) if j < l else range(n, 2 * n)
            for a in side:
                if a not in partner:
                    pair(a, top(a))
            break
        return Matching(inst, tuple(partner[a] for a in inst.agents))
