"""Permutations of [0, n), cycle structure, and transformation families.

A permutation is stored as its mapping array; applying it to a sequence
gives out[i] = seq[mapping[i]].  Families are ordered, and the order is
semantically meaningful: it is the search order of the threshold-scan
decoder and the tie-break order of the argmax decoders.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np


class FamilyError(ValueError):
    """A transformation family violates a structural requirement."""


@dataclass(frozen=True)
class Permutation:
    mapping: tuple[int, ...]

    def __post_init__(self):
        n = len(self.mapping)
        if n < 1:
            raise ValueError("permutation must act on at least one point")
        seen = [False] * n
        for v in self.mapping:
            if not isinstance(v, int) or not (0 <= v < n) or seen[v]:
                raise ValueError(f"mapping {self.mapping!r} is not a bijection on [0, {n})")
            seen[v] = True

    @property
    def n(self) -> int:
        return len(self.mapping)

    def __call__(self, i: int) -> int:
        return self.mapping[i]

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    @classmethod
    def from_iterable(cls, values) -> "Permutation":
        return cls(tuple(int(v) for v in values))


def apply_permutation(perm: Permutation, values) -> np.ndarray:
    """Transformed copy of a sequence: out[i] = values[perm(i)]."""
    arr = np.asarray(values)
    if arr.shape[0] != perm.n:
        raise ValueError("sequence length does not match permutation size")
    return arr[np.asarray(perm.mapping)]


def compose(a: Permutation, b: Permutation) -> Permutation:
    """(a o b)(i) = a(b(i))."""
    if a.n != b.n:
        raise ValueError("size mismatch in composition")
    return Permutation(tuple(a.mapping[b.mapping[i]] for i in range(a.n)))


def inverse(a: Permutation) -> Permutation:
    inv = [0] * a.n
    for i, v in enumerate(a.mapping):
        inv[v] = i
    return Permutation(tuple(inv))


@dataclass(frozen=True)
class CycleDecomposition:
    """Disjoint cycle cover; cycles start at their smallest element and are
    listed by increasing start."""

    cycles: tuple[tuple[int, ...], ...]
    num_cycles: int
    fixed_points: frozenset[int]
    is_derangement: bool


def cycle_decomposition(a: Permutation) -> CycleDecomposition:
    n = a.n
    seen = [False] * n
    cycles = []
    for start in range(n):
        if seen[start]:
            continue
        cur = start
        cyc = []
        while not seen[cur]:
            seen[cur] = True
            cyc.append(cur)
            cur = a.mapping[cur]
        cycles.append(tuple(cyc))
    fixed = frozenset(c[0] for c in cycles if len(c) == 1)
    return CycleDecomposition(
        cycles=tuple(cycles),
        num_cycles=len(cycles),
        fixed_points=fixed,
        is_derangement=not fixed,
    )


def cyclic_shift(n: int, k: int) -> Permutation:
    """Shift by k: i -> (i + k) mod n."""
    if n < 1:
        raise ValueError("n must be positive")
    if not (0 <= k < n):
        raise ValueError(f"shift k={k} outside [0, {n})")
    return Permutation(tuple((i + k) % n for i in range(n)))


@dataclass(frozen=True)
class TransformationFamily:
    """Ordered set of distinct permutations on a common ground set."""

    members: tuple[Permutation, ...]
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.members:
            raise FamilyError("family must be nonempty")
        n = self.members[0].n
        if any(m.n != n for m in self.members):
            raise FamilyError("family members act on different ground sets")
        index = {}
        for i, m in enumerate(self.members):
            if m.mapping in index:
                raise FamilyError(f"duplicate member at positions {index[m.mapping]} and {i}")
            index[m.mapping] = i
        object.__setattr__(self, "_index", index)

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def n(self) -> int:
        return self.members[0].n

    @property
    def contains_identity(self) -> bool:
        return tuple(range(self.n)) in self._index

    def index_of(self, perm: Permutation) -> int | None:
        return self._index.get(perm.mapping)

    def to_json(self) -> str:
        return json.dumps([list(m.mapping) for m in self.members])

    @classmethod
    def from_json(cls, text: str) -> "TransformationFamily":
        rows = json.loads(text)
        return cls(tuple(Permutation.from_iterable(row) for row in rows))


def cyclic_family(n: int) -> TransformationFamily:
    """All n cyclic shifts, ordered by shift amount."""
    return TransformationFamily(tuple(cyclic_shift(n, k) for k in range(n)))


def cyclic_subgroup_family(n: int, step: int) -> TransformationFamily:
    """Shifts by multiples of step (step must divide n): a closed subgroup."""
    if n % step != 0:
        raise FamilyError(f"step {step} does not divide n={n}")
    return TransformationFamily(tuple(cyclic_shift(n, j * step) for j in range(n // step)))


@dataclass(frozen=True)
class FamilyValidationReport:
    closure_ok: bool
    commutativity_ok: bool
    identity_ok: bool
    inverses_ok: bool
    closure_witness: tuple[int, int] | None
    commutativity_witness: tuple[int, int] | None
    inverse_witness: int | None

    @property
    def passed(self) -> bool:
        return (
            self.closure_ok
            and self.commutativity_ok
            and self.identity_ok
            and self.inverses_ok
        )


def validate_family(f: TransformationFamily) -> FamilyValidationReport:
    """Check closure, commutativity, identity and inverse presence.

    Violations are reported with a witness pair of member indices rather
    than raised.
    """
    closure_ok = commutativity_ok = inverses_ok = True
    closure_witness = commutativity_witness = inverse_witness = None
    for i, a in enumerate(f.members):
        if inverses_ok and f.index_of(inverse(a)) is None:
            inverses_ok = False
            inverse_witness = i
        for j, b in enumerate(f.members):
            ab = compose(a, b)
            if closure_ok and f.index_of(ab) is None:
                closure_ok = False
                closure_witness = (i, j)
            if commutativity_ok and j > i and ab.mapping != compose(b, a).mapping:
                commutativity_ok = False
                commutativity_witness = (i, j)
    return FamilyValidationReport(
        closure_ok=closure_ok,
        commutativity_ok=commutativity_ok,
        identity_ok=f.contains_identity,
        inverses_ok=inverses_ok,
        closure_witness=closure_witness,
        commutativity_witness=commutativity_witness,
        inverse_witness=inverse_witness,
    )


def worst_case_transform(f: TransformationFamily) -> Permutation:
    """Non-identity member with the most fixed points; ties go to family order."""
    ident = tuple(range(f.n))
    best = None
    best_count = -1
    for m in f.members:
        if m.mapping == ident:
            continue
        count = sum(1 for i, v in enumerate(m.mapping) if i == v)
        if count > best_count:
            best, best_count = m, count
    if best is None:
        raise FamilyError("family contains no non-identity member")
    return best


_COLORING_MAX_PASSES = 64


def derangement_coloring(a: Permutation) -> tuple[frozenset[int], frozenset[int], frozenset[int]]:
    """Partition [0, n) into three classes, no class containing both i and a(i).

    Cycles are 2-colored alternately, odd cycles closing with the third
    color; classes are then rebalanced by recoloring vertices whose two
    neighbors permit it, until every class has at least floor(n/3)
    elements.
    """
    dec = cycle_decomposition(a)
    if not dec.is_derangement:
        raise ValueError("permutation has fixed points; coloring requires a derangement")
    n = a.n
    color = [0] * n
    for cyc in dec.cycles:
        for pos, v in enumerate(cyc):
            color[v] = pos % 2
        if len(cyc) % 2 == 1:
            color[cyc[-1]] = 2
    inv = inverse(a)
    target = n // 3
    counts = [color.count(c) for c in range(3)]
    for _ in range(_COLORING_MAX_PASSES):
        short = min(range(3), key=lambda c: counts[c])
        if counts[short] >= target:
            break
        moved = False
        for v in range(n):
            src = color[v]
            if counts[src] <= target or src == short:
                continue
            if color[a.mapping[v]] != short and color[inv.mapping[v]] != short:
                color[v] = short
                counts[src] -= 1
                counts[short] += 1
                moved = True
                if counts[short] >= target:
                    break
        if not moved:
            raise RuntimeError("coloring rebalance stalled")  # unreachable for tested sizes
    classes = tuple(frozenset(i for i in range(n) if color[i] == c) for c in range(3))
    for i in range(n):
        assert color[i] != color[a.mapping[i]]
    return classes


def random_derangement(n: int, rng: np.random.Generator) -> Permutation:
    """Uniform-ish derangement by rejection sampling."""
    if n < 2:
        raise ValueError("no derangement exists for n < 2")
    while True:
        perm = rng.permutation(n)
        if not np.any(perm == np.arange(n)):
            return Permutation(tuple(int(v) for v in perm))
