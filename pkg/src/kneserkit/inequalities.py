"""Exact verifiers for the Kneser, Pollard/Ruzsa and partial-sumset bounds.

Discrete conventions used throughout (counts are integers, N = |G|):

* Kneser on a grid is checked in its Cauchy-Davenport form
  ``|A+B| >= min(|A|+|B|-1, N)``.
* The functional bound ``int min(1_A*1_B, t) >= t min(mu(A)+mu(B)-t, 1)``
  with ``t = k/N`` is exactly Pollard's ``sum_x min(c(x), k) >= k min(|A|+|B|-k, N)``,
  so no correction term is needed there.
* The partial-sumset bound gets a grid slack of ``2/N``.

Every report carries ``caveat=True`` when the group has proper subgroups: there
the bounds can fail and a violation is expected behaviour, not a bug.
"""

from __future__ import annotations

import enum
import itertools
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .conv import ConvolutionProfile, as_fraction, convolve
from .group import EmptySetError, GridGroup, GroupSet, _check_same


class ConnectednessWarning(UserWarning):
    """The ambient group has proper subgroups, so Kneser-type bounds may fail."""


@dataclass(frozen=True)
class BoundReport:
    law: str
    lhs: Fraction
    rhs: Fraction
    caveat: bool = False
    details: dict = field(default_factory=dict, compare=False)

    @property
    def defect(self) -> Fraction:
        return self.lhs - self.rhs

    @property
    def holds(self) -> bool:
        return self.defect >= 0

    def to_json(self) -> dict:
        out = {
            "law": self.law,
            "lhs": str(self.lhs),
            "rhs": str(self.rhs),
            "defect": str(self.defect),
            "holds": self.holds,
            "caveat": self.caveat,
        }
        if self.details:
            out["details"] = {k: _jsonable(v) for k, v in self.details.items()}
        return out


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, enum.Enum):
        return v.value
    return v


def _caveat(group: GridGroup) -> bool:
    if group.has_proper_subgroups:
        warnings.warn(
            f"{group} has proper subgroups; Kneser-type bounds need not hold",
            ConnectednessWarning,
            stacklevel=3,
        )
        return True
    return False


def _nonempty(*sets: GroupSet) -> None:
    for s in sets:
        if s.is_empty():
            raise EmptySetError("operand is empty")


def check_kneser(a: GroupSet, b: GroupSet, profile: ConvolutionProfile | None = None) -> BoundReport:
    g = _check_same(a, b)
    _nonempty(a, b)
    n = g.total_size
    if profile is None:
        profile = convolve(a, b)
    size = int(np.count_nonzero(profile.counts))
    bound = min(a.cardinality + b.cardinality - 1, n)
    return BoundReport(
        "kneser",
        Fraction(size, n),
        Fraction(bound, n),
        caveat=_caveat(g),
        details={"sumset_size": size, "bound_size": bound},
    )


def ruzsa_functional(a: GroupSet, b: GroupSet, t, profile: ConvolutionProfile | None = None) -> BoundReport:
    """int min(1_A*1_B, t) dmu  versus  t * min(mu(A)+mu(B)-t, 1)."""
    g = _check_same(a, b)
    n = g.total_size
    t = as_fraction(t)
    k = t * n
    if k.denominator != 1:
        raise ValueError(f"t must have denominator N={n}, got {t}")
    k = int(k)
    if not 0 <= k <= min(a.cardinality, b.cardinality):
        raise ValueError(f"t={t} outside [0, min(mu(A), mu(B))]")
    if profile is None:
        profile = convolve(a, b)
    capped = profile.capped_sum(k)
    lhs = Fraction(capped, n * n)
    rhs = t * min(a.measure + b.measure - t, Fraction(1))
    return BoundReport("ruzsa", lhs, rhs, caveat=_caveat(g), details={"k": k, "capped_sum": capped})


def sqrt_upper(x: Fraction) -> Fraction:
    """A rational s >= sqrt(x), within a couple of ulps of the float square root."""
    s = math.sqrt(float(x))
    while Fraction(s) * Fraction(s) < x:
        s = math.nextafter(s, math.inf)
    return Fraction(s)


def check_partial_bound(a: GroupSet, b: GroupSet, eps, profile: ConvolutionProfile | None = None) -> BoundReport:
    """mu(A +_eps B) >= min(mu(A)+mu(B), 1) - 2 sqrt(eps) - 2/N."""
    g = _check_same(a, b)
    n = g.total_size
    eps = as_fraction(eps)
    lo = min(a.measure, b.measure)
    if not 0 < eps < lo * lo:
        raise ValueError(f"eps={eps} outside (0, min(mu(A), mu(B))^2)")
    if profile is None:
        profile = convolve(a, b)
    part = profile.level_set(eps)
    lhs = part.measure
    rhs = min(a.measure + b.measure, Fraction(1)) - 2 * sqrt_upper(eps) - Fraction(2, n)
    return BoundReport("partial", lhs, rhs, caveat=_caveat(g), details={"partial_size": part.cardinality})


def _submod_terms(c1, c2, c_cap, c_cup, k):
    left = np.minimum(c1, k) + np.minimum(c2, k)
    right = np.minimum(c_cap, k) + np.minimum(c_cup, k)
    return left, right


def submodularity_defect(a1: GroupSet, a2: GroupSet, b: GroupSet, t) -> BoundReport:
    """Pointwise min(c_{A1,B}, tN) + min(c_{A2,B}, tN) >= same for A1 cap A2 and A1 cup A2.

    The report's lhs is the smallest pointwise defect (in units of the
    normalised convolution) against rhs 0; the integrated sides go to details.
    """
    g = _check_same(a1, a2, b)
    n = g.total_size
    kq = as_fraction(t) * n
    q, k = kq.denominator, kq.numerator
    c = [q * convolve(s, b).counts for s in (a1, a2, a1 & a2, a1 | a2)]
    left, right = _submod_terms(*c, k)
    pointwise = left - right
    min_pointwise = Fraction(int(pointwise.min()), q * n)
    integrated = Fraction(int(left.sum()) - int(right.sum()), q * n * n)
    return BoundReport(
        "submod",
        min_pointwise,
        Fraction(0),
        details={
            "integrated_lhs": Fraction(int(left.sum()), q * n * n),
            "integrated_rhs": Fraction(int(right.sum()), q * n * n),
            "integrated_defect": integrated,
        },
    )


def exhaustive_submodularity(n: int) -> dict:
    """Check the pointwise submodularity bound for every (A1, A2, B) in Z/n and every t = k/n.

    Uses a table of convolution counts over all subset pairs, built with ``convolve``.
    """
    from .group import make_group

    g = make_group([n])
    subsets = [
        GroupSet(g, np.array([(s >> i) & 1 for i in range(n)], dtype=bool)) for s in range(1 << n)
    ]
    m = 1 << n
    table = np.zeros((m, m, n), dtype=np.int64)
    for i, j in itertools.product(range(m), repeat=2):
        if i <= j:
            table[i, j] = table[j, i] = convolve(subsets[i], subsets[j]).counts
    idx = np.arange(m)
    a1, a2 = np.meshgrid(idx, idx, indexing="ij")
    cap, cup = a1 & a2, a1 | a2
    violations = 0
    worst = None
    checked = 0
    for bi in range(m):
        tb = table[:, bi, :]
        c1, c2, c3, c4 = tb[a1], tb[a2], tb[cap], tb[cup]
        for k in range(1, n + 1):
            left, right = _submod_terms(c1, c2, c3, c4, k)
            d = (left - right).min(axis=-1)
            checked += d.size
            bad = int(np.count_nonzero(d < 0))
            violations += bad
            low = int(d.min())
            worst = low if worst is None else min(worst, low)
    return {"n": n, "triples_times_t": checked, "violations": violations, "min_pointwise_defect": worst}


class EqualityCase(str, enum.Enum):
    MEASURE_ZERO = "measure-zero-case"
    PARALLEL_BOHR = "parallel-bohr-case"
    FULL_MEASURE = "full-measure-case"
    NON_EXTREMAL = "non-extremal"


def classify_equality(a: GroupSet, b: GroupSet) -> EqualityCase:
    """Which case of the equality classification a pair falls into.

    A pair counts as extremal when its Kneser defect lies in [0, 1/N]; the
    parallel-Bohr case requires both residuals of the best spectral fit to be
    at most 2/L.
    """
    from .inverse import fit_parallel_pair

    _nonempty(a, b)
    n = a.group.total_size
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConnectednessWarning)
        rep = check_kneser(a, b)
    if not 0 <= rep.defect <= Fraction(1, n):
        return EqualityCase.NON_EXTREMAL
    if min(a.cardinality, b.cardinality) <= 1:
        return EqualityCase.MEASURE_ZERO
    if a.measure + b.measure >= 1:
        return EqualityCase.FULL_MEASURE
    fit = fit_parallel_pair(a, b)
    if fit is not None:
        tol = Fraction(2, fit.character.order)
        if fit.residual_a <= tol and fit.residual_b <= tol:
            return EqualityCase.PARALLEL_BOHR
    return EqualityCase.NON_EXTREMAL
