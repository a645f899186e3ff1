"""Two-couple mechanisms as upward-closed families of agent sets.

With couples ``(m1, w1), (m2, w2)`` there are only two matchings, the
diagonal ``nu = {(m1,w1),(m2,w2)}`` and the cross ``mu = {(m1,w2),(m2,w1)}``.
A profile collapses to the set ``S`` of agents preferring their ``nu``
partner, and a mechanism to the family of sets sent to ``nu``. We store that
family as a 16-bit truth table: bit ``S`` is set iff ``f(S) = nu``, where
``S`` is a bitmask over agent ids ``m1=0, m2=1, w1=2, w2=3``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import Instance, Matching, Profile, Symmetry

PAIR = Instance.two_sided(2)
FULL = 0b1111
M1, M2, W1, W2 = 0, 1, 2, 3
LABELS = ("m1", "m2", "w1", "w2")
NU = Matching.from_pairs(PAIR, [(M1, W1), (M2, W2)])
MU = Matching.from_pairs(PAIR, [(M1, W2), (M2, W1)])


def _mask(agents: Iterable) -> int:
    out = 0
    for a in agents:
        if isinstance(a, str):
            a = LABELS.index(a)
        out |= 1 << a
    return out


def _members(mask: int) -> tuple[int, ...]:
    return tuple(a for a in range(4) if mask >> a & 1)


def _image(perm: Sequence[int], mask: int) -> int:
    return _mask(perm[a] for a in _members(mask))


@dataclass(frozen=True)
class FourAgentMechanism:
    """A two-couple mechanism given by its truth table over preference sets."""

    table: int

    @classmethod
    def from_generators(cls, generators: Iterable[Iterable]) -> "FourAgentMechanism":
        gens = [_mask(g) for g in generators]
        table = 0
        for s in range(16):
            if any(s & g == g for g in gens):
                table |= 1 << s
        return cls(table)

    def chooses_nu(self, s: int) -> bool:
        return bool(self.table >> s & 1)

    @property
    def family(self) -> list[int]:
        """The sets mapped to ``nu`` (as bitmasks)."""
        return [s for s in range(16) if self.chooses_nu(s)]

    @property
    def generators(self) -> tuple[tuple[int, ...], ...]:
        """Minimal members of the family, sorted by size then agents."""
        fam = self.family
        mins = [s for s in fam if not any(t != s and t & s == t for t in fam)]
        return tuple(sorted((_members(s) for s in mins), key=lambda g: (len(g), g)))

    def is_efficient(self) -> bool:
        return self.chooses_nu(FULL) and not self.chooses_nu(0)

    def is_monotone(self) -> bool:
        return all(self.chooses_nu(s | 1 << a) for s in self.family for a in range(4))

    def is_symmetric(self, sigma: Symmetry) -> bool:
        perm = sigma.sigma
        return all(self.chooses_nu(_image(perm, s)) == self.chooses_nu(s)
                   for s in range(16))

    def is_anonymous(self) -> bool:
        """Outcome depends only on how many agents prefer ``nu``."""
        return all(self.chooses_nu(s) == self.chooses_nu(_image(p, s))
                   for p in itertools.permutations(range(4)) for s in range(16))

    def relabel(self, perm: Sequence[int]) -> "FourAgentMechanism":
        """The same rule after renaming agent ``a`` to ``perm[a]``.

        ``perm`` must keep men among men. If it swaps the two matchings the
        preference sets are complemented and the outcome flipped.
        """
        perm = tuple(perm)
        if sorted(perm[:2]) != [M1, M2]:
            raise ValueError("relabeling must keep men among men")
        keeps = perm[W1] - 2 == perm[M1]
        table = 0
        for s in range(16):
            if keeps:
                if self.chooses_nu(s):
                    table |= 1 << _image(perm, s)
            elif not self.chooses_nu(s):
                table |= 1 << _image(perm, FULL ^ s)
        return FourAgentMechanism(table)

    def __call__(self, p: Profile) -> Matching:
        return evaluate_four(self, p)

    @property
    def instance(self) -> Instance:
        return PAIR

    def __str__(self):
        gens = ",".join("{" + ",".join(LABELS[a] for a in g) + "}"
                        for g in self.generators)
        return "{" + gens + "}"


def profile_to_set(p: Profile) -> frozenset:
    """Agents who prefer their diagonal partner to their cross partner."""
    if p.instance != PAIR:
        raise ValueError("profile_to_set needs a two-couple profile")
    return frozenset(i for i in range(4) if p.prefers(i, NU(i), MU(i)))


def evaluate_four(f: FourAgentMechanism, p: Profile) -> Matching:
    return NU if f.chooses_nu(_mask(profile_to_set(p))) else MU


@dataclass(frozen=True)
class FourAgentRule:
    """A two-couple rule placed on four agents of a larger instance.

    ``agents`` gives the actual ids standing in for ``(m1, m2, w1, w2)``;
    the rule's ``nu`` pairs ``agents[0]-agents[2]`` and ``agents[1]-agents[3]``.
    """

    mechanism: FourAgentMechanism
    agents: tuple

    def pairs(self, p: Profile) -> list[tuple[int, int]]:
        a = self.agents
        nu = {a[0]: a[2], a[1]: a[3], a[2]: a[0], a[3]: a[1]}
        mu = {a[0]: a[3], a[1]: a[2], a[2]: a[1], a[3]: a[0]}
        s = 0
        for k, i in enumerate(a):
            if p.prefers(i, nu[i], mu[i]):
                s |= 1 << k
        if self.mechanism.chooses_nu(s):
            return [(a[0], a[2]), (a[1], a[3])]
        return [(a[0], a[3]), (a[1], a[2])]

    def reflect(self, sigma: Sequence[int]) -> "FourAgentRule":
        """Image under an agent map that swaps sides (e.g. a symmetry)."""
        a = self.agents
        img = tuple(sigma[x] for x in (a[2], a[3], a[0], a[1]))
        # positions swap roles (m_a <-> w_a, m_b <-> w_b), so the table follows
        swap = (W1, W2, M1, M2)
        table = 0
        for s in self.mechanism.family:
            table |= 1 << _image(swap, s)
        return FourAgentRule(FourAgentMechanism(table), img)


def enumerate_valid_four(sigma: Symmetry | None = None) -> frozenset:
    """Brute force over all 2**16 two-couple mechanisms.

    Keeps those that are monotone (strategy-proof), efficient and symmetric
    under ``sigma``.
    """
    if sigma is None:
        sigma = Symmetry.canonical(PAIR)
    t = np.arange(1 << 16, dtype=np.uint32)
    bit = [(t >> s) & 1 for s in range(16)]
    ok = (bit[FULL] == 1) & (bit[0] == 0)
    for s in range(16):
        for a in range(4):
            if not s >> a & 1:
                ok &= bit[s] <= bit[s | 1 << a]
    perm = sigma.sigma
    for s in range(16):
        ok &= bit[s] == bit[_image(perm, s)]
    return frozenset(FourAgentMechanism(int(x)) for x in np.flatnonzero(ok))


_PAIRS_D = [
    [("m1", "w1")],
    [("m2", "w2")],
    [("m1", "w2"), ("m2", "w1")],
    [("m1", "m2"), ("w1", "w2")],
]


def _base_catalog() -> list[tuple[str, FourAgentMechanism]]:
    out = []
    for x in range(1, 5):
        gens = [c for c in itertools.combinations(range(4), x)]
        out.append((f"a{x}", FourAgentMechanism.from_generators(gens)))
    out.append(("b", FourAgentMechanism.from_generators(
        [("m1", "w1", "w2"), ("m1", "w1", "m2"), ("m2", "w2")])))
    out.append(("c", FourAgentMechanism.from_generators(
        [("m1", "w1", "w2"), ("m1", "w1", "m2")])))
    for k in range(1, 1 << len(_PAIRS_D)):
        gens = [g for j, grp in enumerate(_PAIRS_D) if k >> j & 1 for g in grp]
        name = "d" + "".join(str(j + 1) for j in range(len(_PAIRS_D)) if k >> j & 1)
        out.append((name, FourAgentMechanism.from_generators(gens)))
    out.append(("e", FourAgentMechanism.from_generators([("m1",), ("w1",), ("m2", "w2")])))
    out.append(("f", FourAgentMechanism.from_generators([("m1",), ("w1",)])))
    return out


COUPLE_SWAP = (M2, M1, W2, W1)
CROSS = (M1, M2, W2, W1)


def catalog_entries(sigma: Symmetry | None = None) -> list[tuple[str, FourAgentMechanism]]:
    """Named catalog cases plus their couple-swapped renamings (not deduplicated).

    Entries are expressed relative to ``sigma``: for the crossed symmetry the
    women are renamed so that ``sigma`` pairs ``m_i`` with "its" ``w_i``.
    """
    base = _base_catalog()
    out = base + [(name + "'", m.relabel(COUPLE_SWAP)) for name, m in base]
    if sigma is not None and sigma.sigma[M1] == W2:
        out = [(name, m.relabel(CROSS)) for name, m in out]
    return out


def catalog_lemma4(sigma: Symmetry | None = None) -> frozenset:
    return frozenset(m for _, m in catalog_entries(sigma))


def catalog_names(sigma: Symmetry | None = None) -> dict:
    """Mechanism -> sorted list of the catalog names producing it."""
    names: dict = {}
    for name, m in catalog_entries(sigma):
        names.setdefault(m, []).append(name)
    return {m: sorted(v) for m, v in names.items()}


def named_mechanism(name: str) -> FourAgentMechanism:
    """Look up a catalog case by name (``a2``, ``f``, ``d5'`` ...).

    Aliases: ``mbd`` (matched-by-default, case f), ``ubd``
    (unmatched-by-default, generators ``{{m1,w1}}``), ``quotaX`` (case aX),
    ``unanimity`` (case a4).
    """
    aliases = {"mbd": "f", "ubd": "d1", "unanimity": "a4"}
    name = aliases.get(name, name)
    if name.startswith("quota"):
        name = "a" + name[5:]
    for n, m in catalog_entries():
        if n == name:
            return m
    raise KeyError(f"no catalog mechanism named {name!r}")


# Figure-style rendering: rows by set size, men's side left of the axis.
_ROWS = [
    [[()]],
    [[("m1",), ("m2",)], [("w2",), ("w1",)]],
    [[("m1", "m2"), ("m1", "w2")], [("m1", "w1"), ("m2", "w2")], [("m2", "w1"), ("w1", "w2")]],
    [[("m1", "m2", "w2"), ("m1", "m2", "w1")], [("m1", "w1", "w2"), ("m2", "w1", "w2")]],
    [[("m1", "m2", "w1", "w2")]],
]


def render_lattice(f: FourAgentMechanism) -> str:
    """Text lattice of all 16 sets; members of the ``nu`` family are starred."""
    def cell(s):
        mark = "*" if f.chooses_nu(_mask(s)) else " "
        return f"{mark}{{{','.join(s)}}}"

    lines = []
    for row in reversed(_ROWS):
        if len(row) == 1:
            text = "  ".join(cell(s) for s in row[0])
            lines.append(text.center(64))
        elif len(row) == 2:
            left = "  ".join(cell(s) for s in row[0])
            right = "  ".join(cell(s) for s in row[1])
            lines.append(f"{left:>30} ¦ {right:<30}")
        else:
            left = "  ".join(cell(s) for s in row[0])
            mid = " ".join(cell(s) for s in row[1])
            right = "  ".join(cell(s) for s in row[2])
            lines.append(f"{left:>24} {mid:^14} {right:<24}")
    return "\n".join(lines)
