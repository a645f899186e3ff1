"""Extensional mechanism tables and axiom checkers.

Every checker takes a :class:`MechanismTable` (or any mechanism object, which
is wrapped) and returns an :class:`AxiomReport`. Exhaustive checks work on
the materialized outcome array with numpy; sampled checks evaluate the
mechanism lazily on a seeded random subset of profiles.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .core import (
    Instance, Matching, Profile, Symmetry, _rank_vectors, all_symmetries,
    digits_array_to_index, enumerate_matchings, index_to_digits, is_efficient,
    matching_index, partner_array, profile_digits_array, profile_to_json,
    rank_lookup, rankings, reflect_matching, reflect_profile, _ranking_index,
)

MAX_MATERIALIZE = 5_000_000


class BudgetError(RuntimeError):
    """The requested exhaustive computation is too large for this instance."""


@dataclass(frozen=True)
class Mode:
    kind: str = "exhaustive"
    k: int = 0
    seed: int = 0

    @classmethod
    def parse(cls, text: "str | Mode | None") -> "Mode":
        if text is None:
            return cls()
        if isinstance(text, Mode):
            return text
        if text == "exhaustive":
            return cls()
        parts = text.split(":")
        if parts[0] == "sample" and len(parts) == 3:
            return cls("sample", int(parts[1]), int(parts[2]))
        raise ValueError(f"mode must be 'exhaustive' or 'sample:K:SEED', got {text!r}")

    @property
    def exhaustive(self) -> bool:
        return self.kind == "exhaustive"

    def __str__(self):
        return "exhaustive" if self.exhaustive else f"sample:{self.k}:{self.seed}"

    def sample_indices(self, inst: Instance) -> np.ndarray:
        total = inst.num_profiles
        if self.exhaustive or self.k >= total:
            return np.arange(total, dtype=np.int64)
        rng = np.random.default_rng(self.seed)
        idx = rng.choice(total, size=self.k, replace=False) if total < 2**62 else \
            rng.integers(0, total, size=self.k)
        return np.sort(np.asarray(idx, dtype=np.int64))


def _chunk_outcomes(args):
    mech, inst, start, stop = args
    index = matching_index(inst)
    base = inst.num_rankings
    out = np.empty(stop - start, dtype=np.int16)
    digits = list(index_to_digits(inst, start))
    for k in range(stop - start):
        out[k] = index[mech(Profile.from_digits(inst, digits)).partner]
        j = len(digits) - 1
        while j >= 0:
            digits[j] += 1
            if digits[j] < base:
                break
            digits[j] = 0
            j -= 1
    return out


class MechanismTable:
    """Profile index -> matching index, materialized or computed on demand."""

    def __init__(self, instance: Instance, outcomes: np.ndarray | None = None,
                 mechanism: Callable | None = None, name: str | None = None):
        if outcomes is None and mechanism is None:
            raise ValueError("need outcomes or a mechanism")
        self.instance = instance
        self.mechanism = mechanism
        self.name = name or getattr(mechanism, "name", None) or type(mechanism).__name__
        self._outcomes = None
        self._cache: dict = {}
        if outcomes is not None:
            outcomes = np.asarray(outcomes, dtype=np.int16)
            if outcomes.shape != (instance.num_profiles,):
                raise ValueError("outcome table does not cover the profile space")
            if outcomes.min() < 0 or outcomes.max() >= len(enumerate_matchings(instance)):
                raise ValueError("outcome table holds an invalid matching index")
            self._outcomes = outcomes

    @classmethod
    def from_mechanism(cls, mechanism, instance: Instance | None = None,
                       materialize: bool = True, jobs: int = 1, name=None) -> "MechanismTable":
        if isinstance(mechanism, MechanismTable):
            return mechanism
        inst = instance or mechanism.instance
        t = cls(inst, mechanism=mechanism, name=name)
        if materialize:
            t.materialize(jobs)
        return t

    @classmethod
    def from_function(cls, instance: Instance, fn: Callable[[Profile], Matching],
                      name=None) -> "MechanismTable":
        index = matching_index(instance)
        out = np.array([index[fn(Profile.from_index(instance, k)).partner]
                        for k in range(instance.num_profiles)], dtype=np.int16)
        return cls(instance, out, name=name)

    @property
    def materialized(self) -> bool:
        return self._outcomes is not None

    def materialize(self, jobs: int = 1) -> np.ndarray:
        if self._outcomes is not None:
            return self._outcomes
        inst = self.instance
        total = inst.num_profiles
        if total > MAX_MATERIALIZE:
            raise BudgetError(
                f"{total} profiles is beyond the exhaustive budget; use sample mode")
        if jobs > 1:
            step = -(-total // (jobs * 4))
            chunks = [(self.mechanism, inst, s, min(s + step, total))
                      for s in range(0, total, step)]
            with ProcessPoolExecutor(jobs) as pool:
                parts = list(pool.map(_chunk_outcomes, chunks))
            self._outcomes = np.concatenate(parts)
        else:
            self._outcomes = _chunk_outcomes((self.mechanism, inst, 0, total))
        return self._outcomes

    @property
    def outcomes(self) -> np.ndarray:
        return self.materialize()

    def outcome_index(self, index: int) -> int:
        if self._outcomes is not None:
            return int(self._outcomes[index])
        if index not in self._cache:
            p = Profile.from_index(self.instance, index)
            self._cache[index] = matching_index(self.instance)[self.mechanism(p).partner]
        return self._cache[index]

    def outcome_indices(self, indices: np.ndarray) -> np.ndarray:
        if self._outcomes is not None:
            return self._outcomes[indices]
        inst, cache = self.instance, self._cache
        index = matching_index(inst)
        out = np.empty(len(indices), dtype=np.int16)
        rows = profile_digits_array(inst, indices).tolist()
        for pos, (k, digits) in enumerate(zip(np.asarray(indices).tolist(), rows)):
            if k not in cache:
                cache[k] = index[self.mechanism(Profile.from_digits(inst, digits)).partner]
            out[pos] = cache[k]
        return out

    def __call__(self, p: Profile) -> Matching:
        if p.instance != self.instance:
            raise ValueError("profile belongs to another instance")
        if self._outcomes is None:
            return self.mechanism(p)
        return enumerate_matchings(self.instance)[self.outcome_index(p.index)]

    def same_as(self, other: "MechanismTable") -> bool:
        return (self.instance == other.instance
                and np.array_equal(self.outcomes, other.outcomes))

    def __repr__(self):
        state = "materialized" if self.materialized else "lazy"
        return f"MechanismTable({self.name}, {self.instance}, {state})"


def as_table(f) -> MechanismTable:
    if isinstance(f, MechanismTable):
        return f
    return MechanismTable.from_mechanism(f, materialize=False)


@dataclass
class AxiomReport:
    axiom: str
    verdict: str
    witness: dict | None = None
    profiles_checked: int = 0
    mode: str = "exhaustive"
    note: str = ""

    @property
    def holds(self) -> bool:
        return self.verdict == "holds"

    def to_json(self) -> dict:
        return {"axiom": self.axiom, "verdict": self.verdict,
                "witness": _jsonable(self.witness), "profiles_checked": self.profiles_checked,
                "mode": self.mode, "note": self.note}


def _jsonable(x):
    if isinstance(x, Profile):
        return profile_to_json(x)
    if isinstance(x, Matching):
        return str(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, set, frozenset)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.integer):
        return int(x)
    return x


def _report(axiom, mode, checked, witness=None, note=""):
    return AxiomReport(axiom, "fails" if witness else "holds", witness, int(checked),
                       str(mode), note)


def _profile(inst, index) -> Profile:
    return Profile.from_index(inst, int(index))


def _match(inst, m) -> Matching:
    return enumerate_matchings(inst)[int(m)]


def _rank_matrix(inst: Instance, digits: np.ndarray) -> np.ndarray:
    """``[profile, agent, matching]`` rank of each agent's partner."""
    L = rank_lookup(inst)
    return np.stack([L[a][digits[:, a]] for a in inst.agents], axis=1)


# --- efficiency ------------------------------------------------------------

def check_efficiency(f, mode="exhaustive") -> AxiomReport:
    """Every outcome is Pareto efficient at its profile."""
    table, mode = as_table(f), Mode.parse(mode)
    inst = table.instance
    idx = mode.sample_indices(inst)
    out = table.outcome_indices(idx).astype(np.int64)
    rk = _rank_matrix(inst, profile_digits_array(inst, idx))
    cur = rk[np.arange(len(idx)), :, out]
    first_bad, first_dom = None, None
    for m in range(rk.shape[2]):
        alt = rk[:, :, m]
        bad = (alt <= cur).all(1) & (alt < cur).any(1)
        if bad.any():
            k = int(np.flatnonzero(bad)[0])
            if first_bad is None or k < first_bad:
                first_bad, first_dom = k, m
    if first_bad is None:
        return _report("efficiency", mode, len(idx))
    p = _profile(inst, idx[first_bad])
    return _report("efficiency", mode, len(idx), {
        "profile": p, "outcome": _match(inst, out[first_bad]),
        "dominating": _match(inst, first_dom)})


# --- group strategy-proofness ------------------------------------------------

def _gsp_block(inst: Instance, out: np.ndarray, coalition: tuple):
    """Least (true profile, deviation) manipulation by ``coalition`` or None."""
    A, R = inst.num_agents, inst.num_rankings
    d = len(coalition)
    others = [a for a in inst.agents if a not in coalition]
    L = rank_lookup(inst)
    cube = out.reshape((R,) * A).transpose(list(coalition) + others)
    cube = cube.reshape(R ** d, -1).astype(np.int64)
    best = None
    for t in range(R ** d):
        tdig = np.unravel_index(t, (R,) * d)
        base = cube[t]
        weak = np.ones(cube.shape, dtype=bool)
        strict = np.zeros(cube.shape, dtype=bool)
        for pos, a in enumerate(coalition):
            lut = L[a, tdig[pos]]
            dev, cur = lut[cube], lut[base]
            weak &= dev <= cur
            strict |= dev < cur
        viol = weak & strict
        if not viol.any():
            continue
        dev_idx, rest_idx = np.nonzero(viol)
        full = _compose(inst, coalition, others, t, rest_idx)
        k = int(np.argmin(full))
        cand = (int(full[k]), int(dev_idx[k]))
        if best is None or cand < best:
            best = cand
    if best is None:
        return None
    true_index, dev = best
    digits = list(index_to_digits(inst, true_index))
    ddig = np.unravel_index(dev, (R,) * d)
    for pos, a in enumerate(coalition):
        digits[a] = int(ddig[pos])
    return true_index, tuple(digits)


def _compose(inst, coalition, others, t, rest_idx):
    R = inst.num_rankings
    d = len(coalition)
    A = inst.num_agents
    digits = np.zeros((len(rest_idx), A), dtype=np.int64)
    tdig = np.unravel_index(t, (R,) * d)
    for pos, a in enumerate(coalition):
        digits[:, a] = tdig[pos]
    if others:
        rdig = np.unravel_index(rest_idx, (R,) * len(others))
        for pos, a in enumerate(others):
            digits[:, a] = rdig[pos]
    return digits_array_to_index(inst, digits)


def _gsp_reach(inst: Instance, out: np.ndarray):
    """Manipulation by any coalition, via outcome reachability.

    A coalition can move the outcome from ``mu`` to ``mu'`` profitably iff
    ``mu'`` is reachable by changing only the reports of agents who weakly
    prefer ``mu'`` and at least one agent strictly prefers it.
    """
    A, R = inst.num_agents, inst.num_rankings
    M = len(enumerate_matchings(inst))
    if M > 63:
        raise BudgetError("too many matchings for the reachability check")
    bits = (np.uint64(1) << out.astype(np.uint64)).reshape((R,) * A)
    reach = np.empty((1 << A, inst.num_profiles), dtype=np.uint64)
    for W in range(1 << A):
        axes = tuple(a for a in range(A) if W >> a & 1)
        r = np.bitwise_or.reduce(bits, axis=axes, keepdims=True) if axes else bits
        reach[W] = np.broadcast_to(r, bits.shape).ravel()
    digits = profile_digits_array(inst)
    rk = _rank_matrix(inst, digits)
    outl = out.astype(np.int64)
    P = inst.num_profiles
    cur = rk[np.arange(P), :, outl]
    weights = (1 << np.arange(A)).astype(np.int64)
    first = None
    for m in range(M):
        alt = rk[:, :, m]
        W = ((alt <= cur) * weights).sum(1)
        gain = (alt < cur).any(1)
        ok = ((reach[W, np.arange(P)] >> np.uint64(m)) & np.uint64(1)).astype(bool)
        viol = ok & gain
        if viol.any():
            k = int(np.flatnonzero(viol)[0])
            if first is None or k < first[0]:
                first = (k, m, int(W[k]))
    if first is None:
        return None
    p, m, W = first
    # least profile in the cylinder around p (free coordinates W) with outcome m
    pd = index_to_digits(inst, p)
    free = [a for a in range(A) if W >> a & 1]
    cands = []
    for combo in itertools.product(range(R), repeat=len(free)):
        dg = list(pd)
        for a, v in zip(free, combo):
            dg[a] = v
        q = int(digits_array_to_index(inst, np.array([dg]))[0])
        if outl[q] == m:
            cands.append((q, tuple(dg)))
    q, dg = min(cands)
    return p, dg


def check_group_sp(f, max_coalition=2, mode="exhaustive") -> AxiomReport:
    """No coalition of size <= ``max_coalition`` has a profitable joint misreport.

    ``max_coalition`` is an int or ``"all"``. Exhaustive mode with an int
    scans every coalition block; ``"all"`` uses an independent reachability
    argument over outcome sets.
    """
    table, mode = as_table(f), Mode.parse(mode)
    inst = table.instance
    A = inst.num_agents
    limit = A if max_coalition == "all" else int(max_coalition)
    name = f"group_sp(<= {max_coalition})"
    if mode.exhaustive:
        out = table.outcomes
        found = None
        if max_coalition == "all":
            found = _gsp_reach(inst, out)
        else:
            for size in range(1, min(limit, A) + 1):
                for coalition in itertools.combinations(inst.agents, size):
                    found = _gsp_block(inst, out, coalition)
                    if found:
                        break
                if found:
                    break
        checked = inst.num_profiles
    else:
        if limit > 2 and inst.num_rankings ** limit > 10_000:
            raise BudgetError("sampled group check supports coalitions of size <= 2")
        found, checked = _gsp_sample(table, limit, mode), mode.k
    if not found:
        return _report(name, mode, checked)
    true_index, dev_digits = found
    return _report(name, mode, checked, _gsp_witness(table, true_index, dev_digits))


def _gsp_sample(table, limit, mode):
    inst = table.instance
    R = inst.num_rankings
    for idx in mode.sample_indices(inst):
        p = _profile(inst, idx)
        mu = table(p)
        for size in range(1, limit + 1):
            for coalition in itertools.combinations(inst.agents, size):
                for combo in itertools.product(range(R), repeat=size):
                    dg = list(p.digits)
                    for a, v in zip(coalition, combo):
                        dg[a] = v
                    q = Profile.from_digits(inst, dg)
                    nu = table(q)
                    if _profitable(p, coalition, mu, nu):
                        return int(idx), tuple(dg)
    return None


def _profitable(p: Profile, coalition, mu: Matching, nu: Matching) -> bool:
    strict = False
    for a in coalition:
        x, y = p.rank(a, nu(a)), p.rank(a, mu(a))
        if x > y:
            return False
        strict |= x < y
    return strict


def _gsp_witness(table, true_index, dev_digits):
    inst = table.instance
    p = _profile(inst, true_index)
    q = Profile.from_digits(inst, dev_digits)
    mu, nu = table(p), table(q)
    changed = [a for a in inst.agents if p.digits[a] != q.digits[a]]
    coalition = list(changed)
    if not any(p.rank(a, nu(a)) < p.rank(a, mu(a)) for a in coalition):
        gainer = next(a for a in inst.agents if p.rank(a, nu(a)) < p.rank(a, mu(a)))
        coalition = sorted(coalition + [gainer])
    lab = inst.label
    return {"profile": p, "coalition": [lab(a) for a in coalition],
            "misreport": {lab(a): [lab(j) for j in q.prefs[a]] for a in changed},
            "outcome": mu, "deviation_outcome": nu, "deviation_profile": q}


def manipulations_at(f, p: Profile, max_coalition: int = 2) -> list[dict]:
    """Every profitable joint misreport at ``p`` by coalitions up to the given size."""
    table = as_table(f)
    inst = table.instance
    mu = table(p)
    found = []
    for size in range(1, max_coalition + 1):
        for coalition in itertools.combinations(inst.agents, size):
            for combo in itertools.product(range(inst.num_rankings), repeat=size):
                dg = list(p.digits)
                for a, v in zip(coalition, combo):
                    dg[a] = v
                if any(dg[a] == p.digits[a] for a in coalition):
                    continue  # covered by a smaller coalition
                q = Profile.from_digits(inst, dg)
                if _profitable(p, coalition, mu, table(q)):
                    found.append(_gsp_witness(table, p.index, tuple(dg)))
    return found


# --- gender neutrality -----------------------------------------------------

@lru_cache(maxsize=None)
def _reflect_maps(sigma: Symmetry):
    inst = sigma.instance
    s = sigma.sigma
    rmap = []
    for i in inst.agents:
        target = _ranking_index(inst, s[i])
        rmap.append(np.array([target[tuple(s[j] for j in r)] for r in rankings(inst, i)],
                             dtype=np.int64))
    mindex = matching_index(inst)
    mmap = np.array([mindex[reflect_matching(sigma, m).partner]
                     for m in enumerate_matchings(inst)], dtype=np.int64)
    return rmap, mmap


def reflect_indices(sigma: Symmetry, indices: np.ndarray) -> np.ndarray:
    inst = sigma.instance
    rmap, _ = _reflect_maps(sigma)
    digits = profile_digits_array(inst, indices)
    new = np.empty_like(digits)
    for i in inst.agents:
        new[:, sigma.sigma[i]] = rmap[i][digits[:, i]]
    return digits_array_to_index(inst, new)


def check_weak_gn(f, sigma: Symmetry, mode="exhaustive") -> AxiomReport:
    """``f(sigma(p)) == sigma * f(p)`` for every profile."""
    table, mode = as_table(f), Mode.parse(mode)
    inst = table.instance
    if not inst.two:
        raise ValueError("weak gender-neutrality is a two-sided axiom")
    _, mmap = _reflect_maps(sigma)
    idx = mode.sample_indices(inst)
    ridx = reflect_indices(sigma, idx)
    out = table.outcome_indices(idx).astype(np.int64)
    rout = table.outcome_indices(ridx).astype(np.int64)
    bad = np.flatnonzero(rout != mmap[out])
    if not len(bad):
        return _report("weak_gn", mode, len(idx))
    k = int(bad[0])
    p = _profile(inst, idx[k])
    return _report("weak_gn", mode, len(idx), {
        "profile": p, "outcome": table(p), "reflected_profile": reflect_profile(sigma, p),
        "reflected_outcome": table(reflect_profile(sigma, p)),
        "expected": reflect_matching(sigma, table(p))})


def weak_gn_symmetries(f) -> list[Symmetry]:
    """Every symmetry under which ``f`` is weakly gender-neutral (exhaustive)."""
    table = as_table(f)
    return [s for s in all_symmetries(table.instance) if check_weak_gn(table, s).holds]


@dataclass(frozen=True)
class Continuation:
    """A continuation submechanism: ``f`` restricted to ``subset``."""

    subset: tuple
    outsiders: dict
    table: MechanismTable = field(compare=False)
    agent_map: tuple = ()

    def describe(self, parent: Instance) -> dict:
        sub = self.table.instance
        lab = parent.label
        rows = []
        for k in range(sub.num_profiles):
            p = Profile.from_index(sub, k)
            mu = self.table(p)
            rows.append({
                "profile": {lab(self.agent_map[a]): [lab(self.agent_map[j]) for j in p.prefs[a]]
                            for a in sub.agents},
                "outcome": [f"{lab(self.agent_map[a])}-{lab(self.agent_map[b])}"
                            for a, b in mu.pairs()]})
        return {"subset": [lab(a) for a in self.subset],
                "outsiders": {lab(a): [lab(j) for j in r] for a, r in self.outsiders.items()},
                "submechanism": rows}


def _sub_instance(inst: Instance, subset):
    men = [a for a in subset if inst.is_man(a)]
    women = [a for a in subset if not inst.is_man(a)]
    if len(men) != len(women) or not men:
        return None
    sub = Instance.two_sided(len(men))
    agent_map = tuple(men + women)
    return sub, agent_map


@lru_cache(maxsize=None)
def _restriction_maps(inst: Instance, subset: tuple):
    """Per insider: full ranking index -> restricted ranking index in the sub-instance."""
    sub, amap = _sub_instance(inst, subset)
    back = {a: k for k, a in enumerate(amap)}
    maps = []
    for k, a in enumerate(amap):
        target = _ranking_index(sub, k)
        maps.append(np.array([target[tuple(back[j] for j in r if j in back)]
                              for r in rankings(inst, a)], dtype=np.int64))
    mindex = matching_index(sub)
    part = partner_array(inst)
    sub_of = np.full(part.shape[0], -1, dtype=np.int64)
    inside = set(subset)
    for m, row in enumerate(part):
        if all(int(row[a]) in inside for a in subset):
            sub_of[m] = mindex[tuple(back[int(row[a])] for a in amap)]
    return sub, amap, maps, sub_of


def continuation_submechanism(f, subset, outsider_prefs: dict,
                              sample: int | None = None, seed: int = 0) -> Continuation | None:
    """The continuation on ``subset`` given outsiders' rankings, or None.

    Well-definedness (every insider profile keeps ``subset`` matched
    internally, and the result only depends on rankings restricted to the
    subset) is checked over all insider profiles unless ``sample`` is given.
    """
    table = as_table(f)
    inst = table.instance
    subset = tuple(sorted(subset))
    if _sub_instance(inst, subset) is None:
        return None
    sub, amap, maps, sub_of = _restriction_maps(inst, subset)
    R = inst.num_rankings
    total = R ** len(subset)
    if sample is None or sample >= total:
        ins = np.arange(total, dtype=np.int64)
    else:
        ins = np.sort(np.random.default_rng(seed).choice(total, size=sample, replace=False))
    idig = np.stack(np.unravel_index(ins, (R,) * len(subset)), axis=1)
    digits = np.zeros((len(ins), inst.num_agents), dtype=np.int64)
    for a, r in outsider_prefs.items():
        digits[:, a] = _ranking_index(inst, a)[tuple(r)]
    for pos, a in enumerate(amap):
        digits[:, a] = idig[:, pos]
    full = digits_array_to_index(inst, digits)
    outs = sub_of[table.outcome_indices(full).astype(np.int64)]
    if (outs < 0).any():
        return None
    ridx = np.zeros(len(ins), dtype=np.int64)
    for pos in range(len(amap)):
        ridx = ridx * sub.num_rankings + maps[pos][idig[:, pos]]
    g = np.full(sub.num_profiles, -1, dtype=np.int64)
    g[ridx] = outs
    if not np.array_equal(g[ridx], outs) or (g < 0).any():
        return None
    return Continuation(subset, dict(outsider_prefs),
                        MechanismTable(sub, g, name="continuation"), amap)


def _gn_symmetric(g: MechanismTable, cache: dict) -> bool:
    key = (g.instance, g.outcomes.tobytes())
    if key not in cache:
        cache[key] = bool(weak_gn_symmetries(g))
    return cache[key]


def check_gn(f, mode="exhaustive", inner: int = 400_000) -> AxiomReport:
    """Every continuation submechanism is weakly gender-neutral for some symmetry.

    Exhaustive mode enumerates every even subset with as many men as women
    and every outsider profile (feasible up to three couples). Sampled mode
    draws ``k`` (subset, outsider profile) candidates; a candidate's
    well-definedness is checked on all insider profiles when there are at
    most ``inner`` of them, otherwise on ``inner`` sampled ones.
    """
    table, mode = as_table(f), Mode.parse(mode)
    inst = table.instance
    if not inst.two:
        raise ValueError("gender-neutrality is a two-sided axiom")
    cache: dict = {}
    subsets = [s for size in range(2, inst.num_agents + 1, 2)
               for s in itertools.combinations(inst.agents, size)
               if _sub_instance(inst, s) is not None]
    if mode.exhaustive:
        if inst.n > 3:
            raise BudgetError("exhaustive continuation scan is limited to 3 couples")
        found, checked = _gn_exhaustive(table, subsets, cache)
    else:
        found, checked = _gn_sample(table, subsets, mode, inner, cache)
    if found is None:
        return _report("gn", mode, checked)
    cont, certified = found
    w = cont.describe(inst)
    w["certified"] = certified
    w["reason"] = "no symmetry makes this continuation weakly gender-neutral"
    return _report("gn", mode, checked, w)


def _gn_exhaustive(table, subsets, cache):
    inst = table.instance
    R = inst.num_rankings
    out = table.outcomes.astype(np.int64)
    checked = 0
    for subset in subsets:
        sub, amap, maps, sub_of = _restriction_maps(inst, subset)
        outsiders = [a for a in inst.agents if a not in subset]
        cube = out.reshape((R,) * inst.num_agents).transpose(outsiders + list(amap))
        cube = sub_of[cube.reshape(R ** len(outsiders), -1)]
        idig = np.stack(np.unravel_index(np.arange(R ** len(amap)), (R,) * len(amap)), 1)
        ridx = np.zeros(idig.shape[0], dtype=np.int64)
        for pos in range(len(amap)):
            ridx = ridx * sub.num_rankings + maps[pos][idig[:, pos]]
        order = np.argsort(ridx, kind="stable")
        starts = np.flatnonzero(np.r_[True, np.diff(ridx[order]) != 0])
        grouped = cube[:, order]
        lo = np.minimum.reduceat(grouped, starts, axis=1)
        hi = np.maximum.reduceat(grouped, starts, axis=1)
        valid = (lo >= 0).all(1) & (lo == hi).all(1)
        checked += valid.sum()
        seen = set()
        for o in np.flatnonzero(valid):
            g = lo[o]
            key = g.tobytes()
            if key in seen:
                continue
            seen.add(key)
            gt = MechanismTable(sub, g, name="continuation")
            if not _gn_symmetric(gt, cache):
                odig = np.unravel_index(o, (R,) * len(outsiders))
                prefs = {a: rankings(inst, a)[int(odig[k])] for k, a in enumerate(outsiders)}
                return (Continuation(subset, prefs, gt, amap), "exhaustive"), int(checked)
    return None, int(checked)


def _gn_sample(table, subsets, mode, inner, cache):
    inst = table.instance
    rng = np.random.default_rng(mode.seed)
    checked = 0
    for _ in range(mode.k):
        subset = subsets[int(rng.integers(len(subsets)))]
        outsiders = [a for a in inst.agents if a not in subset]
        prefs = {a: rankings(inst, a)[int(rng.integers(inst.num_rankings))] for a in outsiders}
        # cheap screen first, full check only for candidates that would fail
        cont = continuation_submechanism(table, subset, prefs, sample=min(64, inner),
                                         seed=int(rng.integers(2**31)))
        if cont is None:
            continue
        checked += 1
        if _gn_symmetric(cont.table, cache):
            continue
        total = inst.num_rankings ** len(subset)
        full = continuation_submechanism(table, subset, prefs,
                                         sample=None if total <= inner else inner, seed=mode.seed)
        if full is not None and not _gn_symmetric(full.table, cache):
            return (full, "exhaustive" if total <= inner else f"sampled:{inner}"), checked
    return None, checked


# --- individual rationality, stability ---------------------------------------

def _positions(inst: Instance, digits: np.ndarray) -> np.ndarray:
    """``[profile, agent, partner]`` ranking positions."""
    P, A = digits.shape
    pos = np.empty((P, A, A), dtype=np.int16)
    for a in range(A):
        vecs = np.array(_rank_vectors(inst, a), dtype=np.int16)
        pos[:, a, :] = vecs[digits[:, a]]
    return pos


def check_ir(f, mode="exhaustive") -> AxiomReport:
    """No agent is matched to someone they rank below staying single."""
    table, mode = as_table(f), Mode.parse(mode)
    inst = table.instance
    if inst.two:
        raise ValueError("individual rationality is checked on one-sided mechanisms")
    idx = mode.sample_indices(inst)
    out = table.outcome_indices(idx).astype(np.int64)
    part = partner_array(inst)[out].astype(np.int64)
    pos = _positions(inst, profile_digits_array(inst, idx))
    P = len(idx)
    rows = np.arange(P)[:, None]
    agents = np.arange(inst.num_agents)[None, :]
    own = pos[rows, agents, agents]
    got = pos[rows, agents, part]
    bad = np.argwhere(got > own)
    if not len(bad):
        return _report("individual_rationality", mode, P)
    k, a = map(int, bad[0])
    p = _profile(inst, idx[k])
    return _report("individual_rationality", mode, P, {
        "profile": p, "outcome": _match(inst, out[k]),
        "agent": inst.label(a), "partner": inst.label(int(part[k, a]))})


def blocking_pairs(p: Profile, mu: Matching) -> list[tuple[int, int]]:
    inst = p.instance
    return [(m, w) for m in inst.men for w in inst.women
            if mu(m) != w and p.prefers(m, w, mu(m)) and p.prefers(w, m, mu(w))]


def check_stability(f, mode="exhaustive") -> AxiomReport:
    """No outcome admits a blocking pair."""
    table, mode = as_table(f), Mode.parse(mode)
    inst = table.instance
    if not inst.two:
        raise ValueError("stability is a two-sided axiom")
    idx = mode.sample_indices(inst)
    out = table.outcome_indices(idx).astype(np.int64)
    part = partner_array(inst)[out].astype(np.int64)
    pos = _positions(inst, profile_digits_array(inst, idx))
    P = len(idx)
    rows = np.arange(P)
    bad_rows = np.zeros(P, dtype=bool)
    first = None
    for m in inst.men:
        for w in inst.women:
            blk = ((part[:, m] != w)
                   & (pos[rows, m, w] < pos[rows, m, part[:, m]])
                   & (pos[rows, w, m] < pos[rows, w, part[:, w]]))
            if blk.any():
                k = int(np.flatnonzero(blk)[0])
                if first is None or k < first[0]:
                    first = (k, m, w)
            bad_rows |= blk
    if first is None:
        return _report("stability", mode, P)
    k, m, w = first
    p = _profile(inst, idx[k])
    return _report("stability", mode, P, {
        "profile": p, "outcome": _match(inst, out[k]),
        "blocking_pair": (inst.label(m), inst.label(w))})


# --- witness replay ----------------------------------------------------------

def revalidate(report: AxiomReport, f, sigma: Symmetry | None = None) -> bool:
    """Independently replay a failing report's witness against ``f``."""
    if report.holds:
        return True
    w = report.witness
    table = as_table(f)
    p = w.get("profile")
    if report.axiom == "efficiency":
        from .core import pareto_dominates
        mu = table(p)
        return mu == w["outcome"] and pareto_dominates(p, w["dominating"], mu)
    if report.axiom.startswith("group_sp"):
        q = w["deviation_profile"]
        coalition = [p.instance.parse_agent(a) for a in w["coalition"]]
        changed = [a for a in p.instance.agents if p.prefs[a] != q.prefs[a]]
        if not set(changed) <= set(coalition):
            return False
        return _profitable(p, coalition, table(p), table(q))
    if report.axiom == "weak_gn":
        if sigma is None:
            raise ValueError("need the symmetry to replay a weak_gn witness")
        return table(reflect_profile(sigma, p)) != reflect_matching(sigma, table(p))
    if report.axiom == "individual_rationality":
        inst = p.instance
        a = inst.parse_agent(w["agent"])
        mu = table(p)
        return p.rank(a, mu(a)) > p.rank(a, a)
    if report.axiom == "stability":
        inst = p.instance
        m, x = (inst.parse_agent(s) for s in w["blocking_pair"])
        return (m, x) in blocking_pairs(p, table(p))
    if report.axiom == "gn":
        inst = table.instance
        subset = [inst.parse_agent(s) for s in w["subset"]]
        prefs = {inst.parse_agent(a): tuple(inst.parse_agent(j) for j in r)
                 for a, r in w["outsiders"].items()}
        cont = continuation_submechanism(table, subset, prefs)
        return cont is not None and not weak_gn_symmetries(cont.table)
    raise ValueError(f"no replay for axiom {report.axiom}")


# --- counterexample mechanisms ----------------------------------------------

class RMinMechanism:
    """Pick the efficient matching with the smallest priority value ``R``."""

    def __init__(self, instance: Instance, priority: Sequence[Matching] | None = None,
                 name: str = "r_min"):
        self.instance = instance
        self.name = name
        order = list(priority) if priority is not None else list(enumerate_matchings(instance))
        if len({m.partner for m in order}) != len(order):
            raise ValueError("priority must be injective")
        missing = set(m.partner for m in enumerate_matchings(instance)) - {m.partner for m in order}
        self.priority = tuple(order) + tuple(m for m in enumerate_matchings(instance)
                                             if m.partner in missing)

    def __call__(self, p: Profile) -> Matching:
        return r_min_mechanism(self.priority, p)


def r_min_mechanism(R, p: Profile) -> Matching:
    """The ``R``-minimal efficient matching at ``p``.

    ``R`` is a sequence of matchings (lowest value first) or a dict from
    matching to an integer.
    """
    if isinstance(R, dict):
        if len(set(R.values())) != len(R):
            raise ValueError("R must be injective")
        order = sorted(R, key=R.get)
    else:
        order = list(R)
    for mu in order:
        if is_efficient(p, mu):
            return mu
    raise ValueError("R does not rank any efficient matching")


def three_agent_priority(inst: Instance) -> list[Matching]:
    """The three-agent priority {(1,2),(3)} < {(1),(2,3)} < {(1,3),(2)} < all single."""
    if inst != Instance.one_sided(3):
        raise ValueError("this priority is defined for three one-sided agents")
    return [Matching.parse(inst, s) for s in ("1-2,3", "1,2-3", "1-3,2", "1,2,3")]


class ConstantMechanism:
    def __init__(self, matching: Matching, name: str = "constant"):
        self.instance = matching.instance
        self.matching = matching
        self.name = name

    def __call__(self, p: Profile) -> Matching:
        return self.matching
