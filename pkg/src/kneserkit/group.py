"""Grid groups Z/N1 x ... x Z/Nd, dense subsets, characters, arcs and Bohr sets.

Elements are addressed by their row-major linear index. All set data is a
read-only boolean mask of length N; every operation returns a new value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, reduce
from typing import Iterable, Sequence

import numpy as np


class GroupMismatchError(ValueError):
    """Operands live in different groups."""


class EmptySetError(ValueError):
    """An operation that needs a non-empty set got an empty one."""


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True)
class GridGroup:
    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        if not dims:
            raise ValueError("a grid group needs at least one modulus")
        if any(n < 2 for n in dims):
            raise ValueError(f"every modulus must be >= 2, got {list(dims)}")
        object.__setattr__(self, "dims", dims)

    @property
    def rank(self) -> int:
        return len(self.dims)

    @cached_property
    def total_size(self) -> int:
        return math.prod(self.dims)

    @property
    def size(self) -> int:
        return self.total_size

    @cached_property
    def exponent(self) -> int:
        return reduce(_lcm, self.dims, 1)

    @cached_property
    def has_proper_subgroups(self) -> bool:
        # A finite abelian group has no subgroup strictly between 0 and G iff |G| is prime.
        return not _is_prime(self.total_size)

    @cached_property
    def coords(self) -> np.ndarray:
        """Coordinate table of shape (d, N); column x holds the tuple of element x."""
        grids = np.indices(self.dims, dtype=np.int64)
        out = grids.reshape(self.rank, -1)
        out.setflags(write=False)
        return out

    def coord(self, x: int) -> tuple[int, ...]:
        return tuple(int(c) for c in np.unravel_index(int(x) % self.total_size, self.dims))

    def index(self, coord: Sequence[int]) -> int:
        if len(coord) != self.rank:
            raise ValueError(f"expected {self.rank} coordinates, got {len(coord)}")
        c = tuple(int(v) % n for v, n in zip(coord, self.dims))
        return int(np.ravel_multi_index(c, self.dims))

    def add(self, x: int, y: int) -> int:
        return self.index([a + b for a, b in zip(self.coord(x), self.coord(y))])

    def neg(self, x: int) -> int:
        return self.index([-a for a in self.coord(x)])

    def sub(self, x: int, y: int) -> int:
        return self.add(x, self.neg(y))

    def elements(self) -> range:
        return range(self.total_size)

    def __str__(self) -> str:
        return " x ".join(f"Z/{n}" for n in self.dims)


def make_group(dims: Iterable[int] | int) -> GridGroup:
    if isinstance(dims, (int, np.integer)):
        dims = [int(dims)]
    return GridGroup(tuple(dims))


def _check_same(*sets: "GroupSet") -> GridGroup:
    g = sets[0].group
    for s in sets[1:]:
        if s.group != g:
            raise GroupMismatchError(f"sets live in {g} and {s.group}")
    return g


@dataclass(frozen=True, eq=False)
class GroupSet:
    """A subset of a GridGroup stored as a dense read-only membership mask."""

    group: GridGroup
    mask: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=bool).reshape(-1)
        if m.shape[0] != self.group.total_size:
            raise ValueError(f"mask has {m.shape[0]} entries, group has {self.group.total_size}")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    # constructors

    @classmethod
    def from_indices(cls, group: GridGroup, indices: Iterable[int]) -> "GroupSet":
        mask = np.zeros(group.total_size, dtype=bool)
        idx = np.fromiter((int(i) for i in indices), dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= group.total_size):
            raise ValueError("index out of range for the group")
        mask[idx] = True
        return cls(group, mask)

    @classmethod
    def empty(cls, group: GridGroup) -> "GroupSet":
        return cls(group, np.zeros(group.total_size, dtype=bool))

    @classmethod
    def full(cls, group: GridGroup) -> "GroupSet":
        return cls(group, np.ones(group.total_size, dtype=bool))

    @classmethod
    def interval(cls, group: GridGroup, start: int, length: int) -> "GroupSet":
        """{start, ..., start+length-1} in a cyclic group Z/N."""
        if group.rank != 1:
            raise ValueError("intervals are only defined on cyclic groups")
        n = group.total_size
        if not 0 <= length <= n:
            raise ValueError(f"interval length {length} outside [0, {n}]")
        return cls.from_indices(group, (np.arange(length) + start) % n)

    # basic data

    @cached_property
    def cardinality(self) -> int:
        return int(np.count_nonzero(self.mask))

    def __len__(self) -> int:
        return self.cardinality

    @property
    def measure(self) -> Fraction:
        return Fraction(self.cardinality, self.group.total_size)

    @cached_property
    def indices(self) -> np.ndarray:
        out = np.flatnonzero(self.mask)
        out.setflags(write=False)
        return out

    def members(self) -> list[int]:
        return [int(i) for i in self.indices]

    def __contains__(self, x: int) -> bool:
        return bool(self.mask[int(x)])

    def is_empty(self) -> bool:
        return self.cardinality == 0

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GroupSet):
            return NotImplemented
        return self.group == other.group and np.array_equal(self.mask, other.mask)

    def __hash__(self) -> int:
        return hash((self.group, np.packbits(self.mask).tobytes()))

    def __repr__(self) -> str:
        return f"GroupSet({self.group}, |A|={self.cardinality})"

    def grid(self) -> np.ndarray:
        return self.mask.reshape(self.group.dims)

    # set algebra

    def union(self, other: "GroupSet") -> "GroupSet":
        _check_same(self, other)
        return GroupSet(self.group, self.mask | other.mask)

    def intersection(self, other: "GroupSet") -> "GroupSet":
        _check_same(self, other)
        return GroupSet(self.group, self.mask & other.mask)

    def difference(self, other: "GroupSet") -> "GroupSet":
        _check_same(self, other)
        return GroupSet(self.group, self.mask & ~other.mask)

    def symmetric_difference(self, other: "GroupSet") -> "GroupSet":
        _check_same(self, other)
        return GroupSet(self.group, self.mask ^ other.mask)

    def complement(self) -> "GroupSet":
        return GroupSet(self.group, ~self.mask)

    __or__ = union
    __and__ = intersection
    __sub__ = difference
    __xor__ = symmetric_difference

    def __invert__(self) -> "GroupSet":
        return self.complement()

    def translate(self, x: int) -> "GroupSet":
        """x + A."""
        g = self.group
        shift = g.coord(x)
        moved = np.roll(self.grid(), shift, axis=tuple(range(g.rank)))
        return GroupSet(g, moved)

    def reflect(self) -> "GroupSet":
        """-A."""
        g = self.group
        axes = tuple(range(g.rank))
        flipped = np.roll(np.flip(self.grid(), axis=axes), 1, axis=axes)
        return GroupSet(g, flipped)

    def symmetric_difference(self, other: "GroupSet") -> "GroupSet":
        _check_same(self, other)
        return GroupSet(self.group, self.mask ^ other.mask)

    def symm_diff_measure(self, other: "GroupSet") -> Fraction:
        _check_same(self, other)
        return Fraction(int(np.count_nonzero(self.mask ^ other.mask)), self.group.total_size)

    def issubset(self, other: "GroupSet") -> bool:
        _check_same(self, other)
        return not np.any(self.mask & ~other.mask)


def union(a: GroupSet, b: GroupSet) -> GroupSet:
    return a.union(b)


def intersection(a: GroupSet, b: GroupSet) -> GroupSet:
    return a.intersection(b)


def complement(a: GroupSet) -> GroupSet:
    return a.complement()


def translate(a: GroupSet, x: int) -> GroupSet:
    return a.translate(x)


def reflect(a: GroupSet) -> GroupSet:
    return a.reflect()


def symm_diff_measure(a: GroupSet, b: GroupSet) -> Fraction:
    return a.symm_diff_measure(b)


def character_order(group: GridGroup, freq: Sequence[int]) -> int:
    if len(freq) != group.rank:
        raise ValueError(f"frequency needs {group.rank} components, got {len(freq)}")
    order = 1
    for xi, n in zip(freq, group.dims):
        order = _lcm(order, n // math.gcd(int(xi) % n, n))
    return order


@dataclass(frozen=True)
class Character:
    """x -> sum_i freq_i * x_i / N_i mod 1, evaluated exactly on the order-L circle."""

    group: GridGroup
    freq: tuple[int, ...]

    def __post_init__(self):
        if len(self.freq) != self.group.rank:
            raise ValueError(f"frequency needs {self.group.rank} components, got {len(self.freq)}")
        object.__setattr__(
            self, "freq", tuple(int(xi) % n for xi, n in zip(self.freq, self.group.dims))
        )

    @cached_property
    def order(self) -> int:
        return character_order(self.group, self.freq)

    def is_zero(self) -> bool:
        return self.order == 1

    @cached_property
    def _weights(self) -> tuple[int, ...]:
        # freq_i * L / N_i is an integer because N_i / gcd(freq_i, N_i) divides L.
        L = self.order
        return tuple(xi * L // n for xi, n in zip(self.freq, self.group.dims))

    @cached_property
    def values(self) -> np.ndarray:
        """phi(x) * L mod L for every element x, as int64."""
        L = self.order
        w = np.array(self._weights, dtype=np.int64) % L
        out = np.asarray((w @ self.group.coords) % L, dtype=np.int64)
        out.setflags(write=False)
        return out

    def __call__(self, x: int) -> int:
        """phi(x) * L, an integer in [0, L)."""
        return int(sum(w * c for w, c in zip(self._weights, self.group.coord(x))) % self.order)

    def phase(self, x: int) -> Fraction:
        return Fraction(self(x), self.order)

    def __neg__(self) -> "Character":
        return Character(self.group, tuple(-xi for xi in self.freq))

    def __mul__(self, m: int) -> "Character":
        return Character(self.group, tuple(int(m) * xi for xi in self.freq))

    __rmul__ = __mul__

    def canonical(self) -> "Character":
        """Representative of {xi, -xi}: the lexicographically smaller reduced vector."""
        neg = -self
        return self if self.freq <= neg.freq else neg

    def same_class(self, other: "Character") -> bool:
        return self.group == other.group and self.canonical().freq == other.canonical().freq

    def preimage_point(self, value: int) -> int:
        """Smallest element x with phi(x)*L == value mod L."""
        hits = np.flatnonzero(self.values == int(value) % self.order)
        if hits.size == 0:
            raise ValueError(f"value {value} not attained")
        return int(hits[0])


@dataclass(frozen=True)
class Arc:
    """{start, ..., start+length-1} mod circle_size."""

    circle_size: int
    start: int
    length: int

    def __post_init__(self):
        L = int(self.circle_size)
        if L < 1:
            raise ValueError("circle size must be positive")
        if not 1 <= int(self.length) <= L:
            raise ValueError(f"arc length {self.length} outside [1, {L}]")
        object.__setattr__(self, "circle_size", L)
        object.__setattr__(self, "start", int(self.start) % L)
        object.__setattr__(self, "length", int(self.length))

    @property
    def measure(self) -> Fraction:
        return Fraction(self.length, self.circle_size)

    def residues(self) -> np.ndarray:
        return (np.arange(self.length, dtype=np.int64) + self.start) % self.circle_size

    def indicator(self) -> np.ndarray:
        out = np.zeros(self.circle_size, dtype=bool)
        out[self.residues()] = True
        return out

    def __contains__(self, value: int) -> bool:
        return (int(value) - self.start) % self.circle_size < self.length

    def shift(self, s: int) -> "Arc":
        return Arc(self.circle_size, self.start + int(s), self.length)

    def dilate(self, k: int) -> "Arc":
        """k-fold sum I + ... + I, capped at the full circle."""
        return Arc(self.circle_size, k * self.start, min(self.circle_size, k * (self.length - 1) + 1))

    def __add__(self, other: "Arc") -> "Arc":
        if other.circle_size != self.circle_size:
            raise ValueError("arcs on different circles")
        return Arc(
            self.circle_size,
            self.start + other.start,
            min(self.circle_size, self.length + other.length - 1),
        )

    def symm_diff(self, other: "Arc") -> int:
        return int(np.count_nonzero(self.indicator() ^ other.indicator()))


@dataclass(frozen=True)
class BohrDescription:
    character: Character
    arc: Arc

    def __post_init__(self):
        if self.arc.circle_size != self.character.order:
            raise ValueError(
                f"arc lives on Z/{self.arc.circle_size} but the character has order {self.character.order}"
            )

    @property
    def measure(self) -> Fraction:
        return self.arc.measure

    def materialize(self) -> GroupSet:
        return bohr_set(self)


def bohr_set(desc: BohrDescription) -> GroupSet:
    chi, arc = desc.character, desc.arc
    if arc.circle_size != chi.order:
        raise ValueError("arc circle size must equal the character order")
    if chi.is_zero() and arc.length != arc.circle_size:
        raise ValueError("the zero character admits no proper arc")
    return GroupSet(chi.group, arc.indicator()[chi.values])


def bohr(group: GridGroup, freq: Sequence[int] | int, start: int, length: int) -> GroupSet:
    """Shorthand: materialize Bohr(freq, [start, start+length)) on the order-L circle."""
    if isinstance(freq, (int, np.integer)):
        freq = (int(freq),)
    chi = Character(group, tuple(freq))
    return bohr_set(BohrDescription(chi, Arc(chi.order, start, length)))
