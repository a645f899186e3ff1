"""Agents, preferences, matchings and reflections.

Agents are dense integer ids. In a two-sided instance with ``n`` couples the
men are ``0..n-1`` and the women ``n..2n-1``; in a one-sided instance the
agents are ``0..n-1`` and ``mu(i) == i`` means agent ``i`` stays single.
Labels shown to users are 1-based (``m1``, ``w3``, ``2``).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import lru_cache
from math import factorial
from typing import Iterable, Iterator, Sequence

import numpy as np

ONE_SIDED = "one_sided"
TWO_SIDED = "two_sided"


class ProfileError(ValueError):
    """Raised when a preference profile (or its JSON form) is malformed."""


class MatchingError(ValueError):
    """Raised when a pairing is not a valid (sub)matching of its instance."""


@dataclass(frozen=True)
class Instance:
    kind: str
    n: int

    def __post_init__(self):
        if self.kind not in (ONE_SIDED, TWO_SIDED):
            raise ValueError(f"unknown instance kind {self.kind!r}")
        if self.n < 1:
            raise ValueError("an instance needs at least one agent/couple")

    @classmethod
    def one_sided(cls, n: int) -> "Instance":
        return cls(ONE_SIDED, n)

    @classmethod
    def two_sided(cls, n: int) -> "Instance":
        return cls(TWO_SIDED, n)

    @property
    def two(self) -> bool:
        return self.kind == TWO_SIDED

    @property
    def num_agents(self) -> int:
        return 2 * self.n if self.two else self.n

    @property
    def agents(self) -> range:
        return range(self.num_agents)

    @property
    def men(self) -> range:
        return range(self.n)

    @property
    def women(self) -> range:
        return range(self.n, 2 * self.n)

    def is_man(self, i: int) -> bool:
        return self.two and i < self.n

    def side(self, i: int) -> range:
        """Agents on the same side as ``i`` (everyone, for one-sided)."""
        if not self.two:
            return self.agents
        return self.men if i < self.n else self.women

    def partners(self, i: int) -> tuple[int, ...]:
        """The partner universe ``i`` ranks (own id included for one-sided)."""
        if not self.two:
            return tuple(self.agents)
        return tuple(self.women if i < self.n else self.men)

    @property
    def num_rankings(self) -> int:
        return factorial(self.n)

    @property
    def num_profiles(self) -> int:
        return self.num_rankings ** self.num_agents

    def label(self, i: int) -> str:
        if not self.two:
            return str(i + 1)
        return f"m{i + 1}" if i < self.n else f"w{i - self.n + 1}"

    def parse_agent(self, token) -> int:
        """Inverse of :meth:`label`; also accepts 1-based ints for one-sided."""
        s = str(token).strip()
        try:
            if self.two:
                if len(s) < 2 or s[0] not in "mw":
                    raise ValueError
                k = int(s[1:])
                if not 1 <= k <= self.n:
                    raise ValueError
                return k - 1 if s[0] == "m" else self.n + k - 1
            k = int(s)
            if not 1 <= k <= self.n:
                raise ValueError
            return k - 1
        except ValueError:
            raise ValueError(f"no agent {token!r} in {self}") from None

    def __str__(self):
        side = "couples" if self.two else "agents"
        return f"{self.kind} instance with {self.n} {side}"


@lru_cache(maxsize=None)
def rankings(inst: Instance, i: int) -> tuple[tuple[int, ...], ...]:
    """All strict rankings agent ``i`` can hold, in lexicographic order."""
    return tuple(itertools.permutations(inst.partners(i)))


@lru_cache(maxsize=None)
def _ranking_index(inst: Instance, i: int) -> dict:
    return {r: k for k, r in enumerate(rankings(inst, i))}


@lru_cache(maxsize=None)
def _rank_vectors(inst: Instance, i: int) -> tuple[tuple[int, ...], ...]:
    # position of every agent in each ranking; non-partners get a sentinel
    out = []
    big = inst.num_agents + 1
    for r in rankings(inst, i):
        pos = [big] * inst.num_agents
        for k, j in enumerate(r):
            pos[j] = k
        out.append(tuple(pos))
    return tuple(out)


def _check_ranking(inst: Instance, i: int, ranking: Sequence[int]) -> None:
    universe = inst.partners(i)
    seen = set()
    for pos, j in enumerate(ranking):
        if j not in universe:
            raise ProfileError(
                f"agent {inst.label(i)}: position {pos + 1}: "
                f"{j!r} is not a possible partner")
        if j in seen:
            raise ProfileError(
                f"agent {inst.label(i)}: position {pos + 1}: "
                f"repeated entry {inst.label(j)}")
        seen.add(j)
    if len(seen) != len(universe):
        missing = sorted(set(universe) - seen)
        raise ProfileError(
            f"agent {inst.label(i)}: ranking omits "
            + ", ".join(inst.label(j) for j in missing))


class Profile:
    """An immutable strict preference profile.

    ``prefs[i]`` lists agent ``i``'s possible partners from best to worst.
    ``digits`` is the rank-vector encoding (each agent's ranking index) and
    ``index`` the mixed-radix profile index, agent 0 most significant.
    """

    __slots__ = ("instance", "prefs", "digits", "_rank")

    def __init__(self, instance: Instance, prefs: Sequence[Sequence[int]]):
        if len(prefs) != instance.num_agents:
            raise ProfileError(
                f"expected {instance.num_agents} rankings, got {len(prefs)}")
        prefs = tuple(tuple(int(j) for j in r) for r in prefs)
        for i, r in enumerate(prefs):
            _check_ranking(instance, i, r)
        digits = tuple(_ranking_index(instance, i)[r]
                       for i, r in enumerate(prefs))
        self._fill(instance, prefs, digits)

    def _fill(self, instance, prefs, digits):
        object.__setattr__(self, "instance", instance)
        object.__setattr__(self, "prefs", prefs)
        object.__setattr__(self, "digits", digits)
        object.__setattr__(self, "_rank", tuple(
            _rank_vectors(instance, i)[d] for i, d in enumerate(digits)))

    def __setattr__(self, name, value):
        raise AttributeError("Profile is immutable")

    def __reduce__(self):
        return Profile.from_digits, (self.instance, self.digits)

    @classmethod
    def from_digits(cls, instance: Instance, digits: Sequence[int]) -> "Profile":
        digits = tuple(int(d) for d in digits)
        prefs = tuple(rankings(instance, i)[d] for i, d in enumerate(digits))
        p = object.__new__(cls)
        p._fill(instance, prefs, digits)
        return p

    @classmethod
    def from_index(cls, instance: Instance, index: int) -> "Profile":
        if not 0 <= index < instance.num_profiles:
            raise IndexError(f"profile index {index} out of range")
        return cls.from_digits(instance, index_to_digits(instance, index))

    @property
    def index(self) -> int:
        return digits_to_index(self.instance, self.digits)

    def rank(self, i: int, j: int) -> int:
        """Position of ``j`` in ``i``'s ranking (0 is best)."""
        return self._rank[i][j]

    def prefers(self, i: int, a: int, b: int) -> bool:
        """True iff ``i`` strictly prefers ``a`` to ``b``."""
        return self._rank[i][a] < self._rank[i][b]

    def top(self, i: int, available: Iterable[int] | None = None) -> int:
        """``i``'s favourite partner, optionally among ``available``."""
        if available is None:
            return self.prefs[i][0]
        avail = available if isinstance(available, (set, frozenset)) else set(available)
        for j in self.prefs[i]:
            if j in avail:
                return j
        raise ValueError(f"agent {self.instance.label(i)} has no available partner")

    def replace(self, changes: dict) -> "Profile":
        """Profile with some agents' rankings replaced (``{agent: ranking}``)."""
        prefs = list(self.prefs)
        for i, r in changes.items():
            prefs[i] = tuple(r)
        return Profile(self.instance, prefs)

    def __eq__(self, other):
        return (isinstance(other, Profile) and self.instance == other.instance
                and self.digits == other.digits)

    def __hash__(self):
        return hash((self.instance, self.digits))

    def __repr__(self):
        lab = self.instance.label
        body = "; ".join(f"{lab(i)}: " + ",".join(lab(j) for j in r)
                         for i, r in enumerate(self.prefs))
        return f"Profile({body})"


def index_to_digits(inst: Instance, index: int) -> tuple[int, ...]:
    base = inst.num_rankings
    out = []
    for _ in range(inst.num_agents):
        index, d = divmod(index, base)
        out.append(d)
    return tuple(reversed(out))


def digits_to_index(inst: Instance, digits: Sequence[int]) -> int:
    base = inst.num_rankings
    index = 0
    for d in digits:
        index = index * base + d
    return index


def enumerate_profiles(inst: Instance, start: int = 0,
                       stop: int | None = None) -> Iterator[Profile]:
    """Profiles with index in ``[start, stop)``, in canonical order."""
    stop = inst.num_profiles if stop is None else min(stop, inst.num_profiles)
    if start >= stop:
        return
    digits = list(index_to_digits(inst, start))
    base = inst.num_rankings
    for _ in range(start, stop):
        yield Profile.from_digits(inst, digits)
        k = len(digits) - 1
        while k >= 0:
            digits[k] += 1
            if digits[k] < base:
                break
            digits[k] = 0
            k -= 1


@dataclass(frozen=True)
class Submatching:
    """Disjoint unordered pairs plus (one-sided only) singletons."""

    pairs: frozenset = frozenset()
    singles: frozenset = frozenset()

    def __post_init__(self):
        pairs = frozenset(tuple(sorted(p)) for p in self.pairs)
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "singles", frozenset(self.singles))
        seen = set(self.singles)
        for a, b in pairs:
            if a == b or a in seen or b in seen:
                raise MatchingError(f"agent listed twice in submatching {sorted(pairs)}")
            seen.update((a, b))

    @property
    def matched(self) -> frozenset:
        return frozenset(itertools.chain(self.singles, *self.pairs))

    def extend(self, pairs=(), singles=()) -> "Submatching":
        return Submatching(self.pairs | {tuple(sorted(p)) for p in pairs},
                           self.singles | frozenset(singles))

    def remaining(self, inst: Instance) -> list[int]:
        done = self.matched
        return [i for i in inst.agents if i not in done]

    def encode(self, inst: Instance) -> str:
        """Canonical text key, e.g. ``"m1-w3,m2-w1"`` or ``"1-2,3"``."""
        lab = inst.label
        items = [(a, f"{lab(a)}-{lab(b)}") for a, b in self.pairs]
        items += [(a, lab(a)) for a in self.singles]
        return ",".join(s for _, s in sorted(items))

    @classmethod
    def decode(cls, inst: Instance, key: str) -> "Submatching":
        pairs, singles = [], []
        for tok in filter(None, (t.strip() for t in key.split(","))):
            if "-" in tok:
                a, b = tok.split("-")
                pairs.append((inst.parse_agent(a), inst.parse_agent(b)))
            else:
                singles.append(inst.parse_agent(tok))
        return cls(frozenset(pairs), frozenset(singles))

    def __len__(self):
        return len(self.pairs) + len(self.singles)


EMPTY = Submatching()


@dataclass(frozen=True)
class Matching:
    """A total matching stored as an involution ``partner``."""

    instance: Instance
    partner: tuple

    def __post_init__(self):
        inst, mu = self.instance, self.partner
        size, n, two = inst.num_agents, inst.n, inst.two
        if len(mu) != size:
            raise MatchingError(f"matching must list {size} agents")
        for i, j in enumerate(mu):
            if not 0 <= j < size or mu[j] != i:
                raise MatchingError(f"not an involution at agent {inst.label(i)}")
            if two and (i < n) == (j < n):
                raise MatchingError(
                    f"{inst.label(i)} matched on its own side")

    @classmethod
    def from_pairs(cls, inst: Instance, pairs: Iterable, singles: Iterable = ()) -> "Matching":
        mu = list(range(inst.num_agents))
        seen = set()
        for a, b in pairs:
            if a in seen or b in seen:
                raise MatchingError("agent appears in two pairs")
            seen.update((a, b))
            mu[a], mu[b] = b, a
        return cls(inst, tuple(mu))

    @classmethod
    def parse(cls, inst: Instance, text: str) -> "Matching":
        """Parse ``"m1-w3,m2-w1,m3-w2"`` (or ``"1-2,3"``)."""
        sub = Submatching.decode(inst, text)
        return cls.from_pairs(inst, sub.pairs, sub.singles)

    def __call__(self, i: int) -> int:
        return self.partner[i]

    def pairs(self) -> list[tuple[int, int]]:
        return [(i, j) for i, j in enumerate(self.partner) if i < j]

    def singles(self) -> list[int]:
        return [i for i, j in enumerate(self.partner) if i == j]

    def as_submatching(self) -> Submatching:
        return Submatching(frozenset(self.pairs()), frozenset(self.singles()))

    def __str__(self):
        lab = self.instance.label
        items = [f"({lab(a)},{lab(b)})" for a, b in self.pairs()]
        items += [f"({lab(a)})" for a in self.singles()]
        return "{" + ",".join(items) + "}"


@dataclass(frozen=True)
class Symmetry:
    """An order-2 bijection swapping men and women."""

    instance: Instance
    sigma: tuple = field(default=())

    def __post_init__(self):
        inst, s = self.instance, self.sigma
        if not inst.two:
            raise ValueError("symmetries live on two-sided instances")
        if sorted(s) != list(inst.agents):
            raise ValueError("sigma must be a permutation of the agents")
        for i, j in enumerate(s):
            if s[j] != i or (i < inst.n) == (j < inst.n):
                raise ValueError("sigma must be an order-2 man<->woman swap")

    @classmethod
    def canonical(cls, inst: Instance) -> "Symmetry":
        n = inst.n
        return cls(inst, tuple(list(range(n, 2 * n)) + list(range(n))))

    @classmethod
    def from_pairs(cls, inst: Instance, pairs: Iterable) -> "Symmetry":
        return cls(inst, Matching.from_pairs(inst, pairs).partner)

    def __call__(self, i: int) -> int:
        return self.sigma[i]

    def image(self, agents: Iterable[int]) -> frozenset:
        return frozenset(self.sigma[i] for i in agents)

    def as_matching(self) -> Matching:
        return Matching(self.instance, self.sigma)

    def couple(self, k: int) -> tuple[int, int]:
        """The ``k``-th (0-based) sigma pair as ``(man, woman)``."""
        return k, self.sigma[k]


def all_symmetries(inst: Instance) -> list[Symmetry]:
    return [Symmetry(inst, m.partner) for m in enumerate_matchings(inst)]


def _check_same_instance(sigma: Symmetry, inst: Instance):
    if sigma.instance != inst:
        raise ValueError(f"symmetry is on {sigma.instance}, object on {inst}")


def reflect_matching(sigma: Symmetry, mu: Matching) -> Matching:
    """``sigma * mu``: ``(sigma(m), sigma(w))`` paired iff ``(m, w)`` is."""
    _check_same_instance(sigma, mu.instance)
    s = sigma.sigma
    out = [0] * len(s)
    for i, j in enumerate(mu.partner):
        out[s[i]] = s[j]
    return Matching(mu.instance, tuple(out))


def reflect_profile(sigma: Symmetry, p: Profile) -> Profile:
    """``sigma(p)``: agent ``sigma(i)`` ranks ``sigma(j)`` where ``i`` ranks ``j``."""
    _check_same_instance(sigma, p.instance)
    s = sigma.sigma
    prefs = [None] * len(s)
    for i, r in enumerate(p.prefs):
        prefs[s[i]] = tuple(s[j] for j in r)
    return Profile(p.instance, prefs)


def is_symmetric_profile(sigma: Symmetry, p: Profile) -> bool:
    return reflect_profile(sigma, p) == p


@lru_cache(maxsize=None)
def enumerate_matchings(inst: Instance) -> tuple[Matching, ...]:
    """Every matching of ``inst`` once, sorted by partner tuple."""
    if inst.two:
        n = inst.n
        out = [Matching.from_pairs(inst, [(i, n + w) for i, w in enumerate(perm)])
               for perm in itertools.permutations(range(n))]
    else:
        out = [Matching(inst, tuple(mu)) for mu in _involutions(inst.n)]
    return tuple(sorted(out, key=lambda m: m.partner))


def _involutions(n: int) -> Iterator[list[int]]:
    def rec(mu, free):
        if not free:
            yield list(mu)
            return
        i, rest = free[0], free[1:]
        mu[i] = i
        yield from rec(mu, rest)
        for k, j in enumerate(rest):
            mu[i], mu[j] = j, i
            yield from rec(mu, rest[:k] + rest[k + 1:])
            mu[j] = j
        mu[i] = i
    yield from rec(list(range(n)), list(range(n)))


@lru_cache(maxsize=None)
def matching_index(inst: Instance) -> dict:
    """``partner tuple -> position`` in :func:`enumerate_matchings`."""
    return {m.partner: k for k, m in enumerate(enumerate_matchings(inst))}


def pareto_dominates(p: Profile, nu: Matching, eta: Matching) -> bool:
    """True iff everyone weakly prefers ``nu`` to ``eta`` and someone strictly."""
    strict = False
    for i in p.instance.agents:
        a, b = p.rank(i, nu(i)), p.rank(i, eta(i))
        if a > b:
            return False
        strict |= a < b
    return strict


def is_efficient(p: Profile, mu: Matching) -> bool:
    return not any(pareto_dominates(p, nu, mu)
                   for nu in enumerate_matchings(p.instance))


def efficient_matchings(p: Profile) -> list[Matching]:
    return [m for m in enumerate_matchings(p.instance) if is_efficient(p, m)]


# --- array views used by the exhaustive checkers -------------------------

@lru_cache(maxsize=None)
def partner_array(inst: Instance) -> np.ndarray:
    """``(num_matchings, num_agents)`` partner table."""
    return np.array([m.partner for m in enumerate_matchings(inst)], dtype=np.int16)


@lru_cache(maxsize=None)
def rank_lookup(inst: Instance) -> np.ndarray:
    """``[agent, ranking, matching]`` -> rank of the agent's partner."""
    part = partner_array(inst)
    A, R, M = inst.num_agents, inst.num_rankings, part.shape[0]
    out = np.empty((A, R, M), dtype=np.int8)
    for i in range(A):
        vecs = np.array(_rank_vectors(inst, i), dtype=np.int16)
        out[i] = vecs[:, part[:, i]]
    return out


def profile_digits_array(inst: Instance, indices: np.ndarray | None = None) -> np.ndarray:
    """``(len, num_agents)`` rank-vector digits for profile indices."""
    if indices is None:
        indices = np.arange(inst.num_profiles, dtype=np.int64)
    idx = np.asarray(indices, dtype=np.int64)
    out = np.empty((idx.size, inst.num_agents), dtype=np.int16)
    base = inst.num_rankings
    rest = idx.copy()
    for k in range(inst.num_agents - 1, -1, -1):
        rest, out[:, k] = np.divmod(rest, base)
    return out


def digits_array_to_index(inst: Instance, digits: np.ndarray) -> np.ndarray:
    base = inst.num_rankings
    idx = np.zeros(digits.shape[0], dtype=np.int64)
    for k in range(inst.num_agents):
        idx = idx * base + digits[:, k]
    return idx


# --- JSON -----------------------------------------------------------------

def profile_from_json(data) -> Profile:
    """Build a profile from the documented JSON object (1-based indices)."""
    if isinstance(data, str):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as e:
            raise ProfileError(f"line {e.lineno}, column {e.colno}: {e.msg}") from None
    if not isinstance(data, dict):
        raise ProfileError("profile must be a JSON object")
    kind, n = data.get("kind"), data.get("n")
    if kind not in (ONE_SIDED, TWO_SIDED):
        raise ProfileError(f"kind: expected 'one_sided' or 'two_sided', got {kind!r}")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ProfileError(f"n: expected a positive integer, got {n!r}")
    inst = Instance(kind, n)
    groups = [("men", 0), ("women", n)] if inst.two else [("agents", 0)]
    prefs = []
    for key, offset in groups:
        rows = data.get(key)
        if not isinstance(rows, list) or len(rows) != n:
            raise ProfileError(f"{key}: expected a list of {n} rankings")
        partner_offset = (n - offset) if inst.two else 0
        for a, row in enumerate(rows):
            where = f"{key}[{a}]"
            if not isinstance(row, list) or len(row) != n:
                raise ProfileError(f"{where}: expected a ranking of length {n}")
            seen = {}
            for pos, x in enumerate(row):
                if not isinstance(x, int) or isinstance(x, bool) or not 1 <= x <= n:
                    raise ProfileError(f"{where}[{pos}]: {x!r} is not an index in 1..{n}")
                if x in seen:
                    raise ProfileError(
                        f"{where}[{pos}]: {x} already listed at position {seen[x]}")
                seen[x] = pos
            prefs.append(tuple(x - 1 + partner_offset for x in row))
    return Profile(inst, prefs)


def profile_to_json(p: Profile) -> dict:
    inst = p.instance
    n = inst.n
    if inst.two:
        return {"kind": TWO_SIDED, "n": n,
                "men": [[j - n + 1 for j in p.prefs[i]] for i in inst.men],
                "women": [[j + 1 for j in p.prefs[i]] for i in inst.women]}
    return {"kind": ONE_SIDED, "n": n,
            "agents": [[j + 1 for j in r] for r in p.prefs]}


def load_profile(path) -> Profile:
    with open(path) as fh:
        text = fh.read()
    return profile_from_json(text)


def two_sided_profile(men: Sequence[Sequence[int]], women: Sequence[Sequence[int]]) -> Profile:
    """Shorthand with 1-based partner indices, as in the JSON format."""
    return profile_from_json({"kind": TWO_SIDED, "n": len(men),
                              "men": [list(r) for r in men],
                              "women": [list(r) for r in women]})


def one_sided_profile(agents: Sequence[Sequence[int]]) -> Profile:
    return profile_from_json({"kind": ONE_SIDED, "n": len(agents),
                              "agents": [list(r) for r in agents]})
