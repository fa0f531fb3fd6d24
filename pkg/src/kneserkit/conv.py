"""Exact integer convolution of indicators and the sumsets built from it."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from . import _ntt
from .group import EmptySetError, GridGroup, GroupSet, _check_same

DIRECT_LIMIT = 2048


def as_fraction(t) -> Fraction:
    """Exact rational from an int, Fraction, decimal string or float (via its repr)."""
    if isinstance(t, Fraction):
        return t
    if isinstance(t, float):
        return Fraction(repr(t))
    return Fraction(t)


@dataclass(frozen=True, eq=False)
class ConvolutionProfile:
    """counts[x] = #{(a, b) in A x B : a + b = x}."""

    group: GridGroup
    counts: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64).reshape(-1).copy()
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ConvolutionProfile):
            return NotImplemented
        return self.group == other.group and np.array_equal(self.counts, other.counts)

    @cached_property
    def mass(self) -> int:
        return int(self.counts.sum())

    @property
    def max(self) -> int:
        return int(self.counts.max())

    @cached_property
    def support(self) -> GroupSet:
        return GroupSet(self.group, self.counts > 0)

    def normalized(self, x: int) -> Fraction:
        """1_A * 1_B(x) with Haar normalisation."""
        return Fraction(int(self.counts[x]), self.group.total_size)

    def level_set(self, t) -> GroupSet:
        """{x : counts(x)/N >= t}."""
        k = math.ceil(as_fraction(t) * self.group.total_size)
        return GroupSet(self.group, self.counts >= k)

    def capped_sum(self, k: int) -> int:
        """sum_x min(counts(x), k)."""
        return int(np.minimum(self.counts, k).sum())


def _direct(a: GroupSet, b: GroupSet) -> np.ndarray:
    g = a.group
    if a.cardinality > b.cardinality:
        a, b = b, a
    grid = b.grid().astype(np.int64)
    axes = tuple(range(g.rank))
    acc = np.zeros(g.dims, dtype=np.int64)
    for x in a.indices:
        acc += np.roll(grid, g.coord(x), axis=axes)
    return acc.reshape(-1)


def _transform(a: GroupSet, b: GroupSet) -> np.ndarray:
    bound = min(a.cardinality, b.cardinality)
    out = _ntt.cyclic_convolve(a.grid().astype(np.int64), b.grid().astype(np.int64), bound)
    return out.reshape(-1)


def convolve(a: GroupSet, b: GroupSet, method: str = "auto") -> ConvolutionProfile:
    g = _check_same(a, b)
    if method == "auto":
        method = "direct" if g.total_size <= DIRECT_LIMIT else "ntt"
    if method == "direct":
        counts = _direct(a, b)
    elif method == "ntt":
        counts = _transform(a, b)
    else:
        raise ValueError(f"unknown convolution method {method!r}")
    return ConvolutionProfile(g, counts)


def sumset(a: GroupSet, b: GroupSet) -> GroupSet:
    _check_same(a, b)
    if a.is_empty() or b.is_empty():
        raise EmptySetError("sumset of an empty set")
    return convolve(a, b).support


def partial_sumset(a: GroupSet, b: GroupSet, t, profile: ConvolutionProfile | None = None) -> GroupSet:
    """{x : 1_A * 1_B(x) >= t} for a threshold 0 < t <= 1."""
    t = as_fraction(t)
    if not 0 < t <= 1:
        raise ValueError(f"threshold must lie in (0, 1], got {t}")
    if profile is None:
        profile = convolve(a, b)
    return profile.level_set(t)


def iterated_sumset(c: GroupSet, k: int) -> GroupSet:
    if k < 1:
        raise ValueError("k must be at least 1")
    if c.is_empty():
        raise EmptySetError("iterated sumset of an empty set")
    out = c
    for _ in range(k - 1):
        out = sumset(out, c)
    return out


def difference_profile(a: GroupSet) -> ConvolutionProfile:
    """1_A * 1_{-A}; its value at x is |A intersect (x + A)|."""
    if a.is_empty():
        raise EmptySetError("difference profile of an empty set")
    return convolve(a, a.reflect())
