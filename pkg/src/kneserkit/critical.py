"""Critical pairs and the set manipulations that preserve them.

A pair (A, B) is treated as critical at threshold delta when
``mu(A +_delta B) - mu(A) - mu(B)`` is at most a caller-supplied tolerance.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .conv import as_fraction, convolve, difference_profile, partial_sumset, sumset
from .group import EmptySetError, GroupSet, _check_same

log = logging.getLogger(__name__)


class NotCriticalError(ValueError):
    """The pair does not meet the criticality tolerance a routine requires."""


@dataclass(frozen=True)
class CriticalityReport:
    muA: Fraction
    muB: Fraction
    delta: Fraction
    mu_partial: Fraction

    @property
    def margin(self) -> Fraction:
        return min(self.muA, self.muB, 1 - self.muA - self.muB)

    @property
    def defect(self) -> Fraction:
        return self.mu_partial - self.muA - self.muB

    @property
    def degenerate(self) -> bool:
        return self.margin <= 0

    def to_json(self) -> dict:
        return {
            "muA": str(self.muA),
            "muB": str(self.muB),
            "delta": str(self.delta),
            "mu_partial": str(self.mu_partial),
            "margin": str(self.margin),
            "defect": str(self.defect),
            "degenerate": self.degenerate,
        }


def criticality(a: GroupSet, b: GroupSet, delta) -> CriticalityReport:
    _check_same(a, b)
    if a.is_empty() or b.is_empty():
        raise EmptySetError("criticality of an empty set")
    delta = as_fraction(delta)
    part = partial_sumset(a, b, delta)
    return CriticalityReport(a.measure, b.measure, delta, part.measure)


def find_shift_with_intersection(a: GroupSet, target: int) -> tuple[int, int]:
    """Shift x with |A cap (x+A)| as close to target as the grid allows.

    Ties go to the smallest linear index. Returns (x, achieved size).
    """
    n = a.group.total_size
    size = a.cardinality
    if a.is_empty():
        raise EmptySetError("shift search on an empty set")
    if not (size * size <= target * n and target <= size):
        raise ValueError(f"target {target} outside [|A|^2/N, |A|] = [{size * size / n:.3f}, {size}]")
    overlap = difference_profile(a).counts
    score = np.abs(overlap - target)
    if target < size and n > 1:
        # the zero shift never shrinks anything
        score[0] = np.iinfo(np.int64).max
    x = int(np.argmin(score))
    return x, int(overlap[x])


@dataclass(frozen=True)
class ShrinkStep:
    step: int
    size: int
    shift: int
    defect: Fraction


@dataclass(frozen=True)
class ShrinkResult:
    C: GroupSet
    success: bool
    steps: tuple[ShrinkStep, ...]
    report: CriticalityReport
    cap: Fraction
    reason: str = ""

    def log_rows(self) -> list[dict]:
        return [
            {"step": s.step, "size": s.size, "shift": s.shift, "defect": float(s.defect)} for s in self.steps
        ]


def shrink_to_small(
    a: GroupSet,
    b: GroupSet,
    delta_target,
    tolerance,
    *,
    delta=None,
    cap_factor: int = 10,
) -> ShrinkResult:
    """Replace B by a small C with (A, C) still critical, via C <- C cap (x + C).

    Each step asks for an intersection of size max(|C|^2/N, |C| - cN/2, delta_target*N),
    where c is the margin of the original pair. The actual defect of (A, C) is
    tracked; the run stops early, returning the last good C, when it exceeds
    ``cap_factor * tolerance``.
    """
    g = _check_same(a, b)
    n = g.total_size
    delta_target = as_fraction(delta_target)
    tolerance = as_fraction(tolerance)
    delta = Fraction(1, n) if delta is None else as_fraction(delta)
    start = criticality(a, b, delta)
    if start.defect > tolerance:
        raise NotCriticalError(f"initial defect {float(start.defect):.4g} exceeds tolerance {float(tolerance):.4g}")
    cap = cap_factor * max(tolerance, Fraction(1, n))
    steps = [ShrinkStep(0, b.cardinality, 0, start.defect)]
    if b.measure <= delta_target:
        return ShrinkResult(b, True, tuple(steps), start, cap)

    c_margin = start.margin
    floor_size = math.floor(delta_target * n)
    C, report = b, start
    reason = ""
    k = 0
    while C.measure > delta_target:
        k += 1
        size = C.cardinality
        target = max(-(-size * size // n), size - math.floor(c_margin * n / 2), floor_size)
        target = min(target, size)
        x, _ = find_shift_with_intersection(C, target)
        nxt = C & C.translate(x)
        if nxt.is_empty() or nxt.cardinality >= size:
            reason = f"no progress at step {k}"
            break
        rep = criticality(a, nxt, delta)
        steps.append(ShrinkStep(k, nxt.cardinality, x, rep.defect))
        log.debug("shrink step %d: |C|=%d shift=%d defect=%s", k, nxt.cardinality, x, rep.defect)
        if rep.defect > cap:
            reason = f"defect {float(rep.defect):.4g} exceeded cap {float(cap):.4g} at step {k}"
            break
        C, report = nxt, rep
    success = C.measure <= delta_target and not reason
    return ShrinkResult(C, success, tuple(steps), report, cap, reason)


def delta_schedule(n: int, tolerance) -> list[Fraction]:
    """{2^j / N} capped at the tolerance (always containing 1/N)."""
    tolerance = as_fraction(tolerance)
    cap = min(tolerance, 1)
    out = [Fraction(1, n)]
    k = 2
    while Fraction(k, n) <= cap:
        out.append(Fraction(k, n))
        k *= 2
    return out


class AlmostSumsetError(NotCriticalError):
    pass


def almost_sumset(a: GroupSet, b: GroupSet, tolerance) -> tuple[GroupSet, Fraction]:
    """A +_delta B for the largest scheduled delta with mu(A +_delta B) <= mu(A) + mu(B) + tolerance."""
    g = _check_same(a, b)
    if a.is_empty() or b.is_empty():
        raise EmptySetError("almost sumset of an empty set")
    tolerance = as_fraction(tolerance)
    profile = convolve(a, b)
    bound = a.measure + b.measure + tolerance
    for delta in reversed(delta_schedule(g.total_size, tolerance)):
        part = profile.level_set(delta)
        if part.measure <= bound:
            return part, delta
    raise AlmostSumsetError(
        f"no scheduled delta keeps the partial sumset within {float(tolerance):.4g} of mu(A)+mu(B)"
    )


def approximate_by_translates(
    a: GroupSet, b: GroupSet, delta, m: int, seed: int
) -> tuple[list[int], Fraction]:
    """Sample m^2 points of B uniformly (with replacement); compare A + X with A +_delta B."""
    _check_same(a, b)
    if m < 2:
        raise ValueError("m must be at least 2")
    if b.is_empty() or a.is_empty():
        raise EmptySetError("translates of an empty set")
    rng = np.random.default_rng(seed)
    picks = rng.choice(b.indices, size=m * m, replace=True)
    xs = sorted({int(x) for x in picks})
    X = GroupSet.from_indices(a.group, xs)
    approx = sumset(a, X)
    target = partial_sumset(a, b, delta)
    return xs, approx.symm_diff_measure(target)
