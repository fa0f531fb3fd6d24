"""Recovering parallel Bohr structure from a near-critical pair.

Pipeline (``recover_bohr_pair``):

    shrink B to a small critical companion C
    -> C_2 = almost sumset of (C, C); C_k must grow by near-constant increments
    -> strongest nonzero Fourier class of C_2
    -> centre C, push it forward along the character, read off tau and m
    -> divide the character by m
    -> fit an arc for C, then transfer the structure to A and from A to B

Set measures and residuals are exact rationals. Floating point only appears in
spectrum magnitudes and in the phase used for centring.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

import numpy as np

from .conv import as_fraction
from .critical import (
    NotCriticalError,
    almost_sumset,
    criticality,
    shrink_to_small,
)
from .group import (
    Arc,
    BohrDescription,
    Character,
    EmptySetError,
    GridGroup,
    GroupSet,
    bohr_set,
)

log = logging.getLogger(__name__)

WEAK_RATIO = 0.5
_TIE_RTOL = 1e-9


# spectrum


@dataclass(frozen=True)
class SpectrumEntry:
    freq: tuple[int, ...]
    magnitude: float
    weak: bool = False


class Spectrum:
    """|hat 1_A(xi)| for every frequency xi, indexed like group elements."""

    def __init__(self, group: GridGroup, coefficients: np.ndarray, cardinality: int):
        self.group = group
        self.coefficients = coefficients.reshape(-1)
        self.magnitudes = np.abs(self.coefficients) / group.total_size
        self.magnitudes.setflags(write=False)
        self.cardinality = cardinality

    def __len__(self) -> int:
        return self.group.total_size

    def __getitem__(self, i: int) -> SpectrumEntry:
        return SpectrumEntry(self.group.coord(i), float(self.magnitudes[i]))

    def __iter__(self) -> Iterator[SpectrumEntry]:
        for i in range(len(self)):
            yield self[i]

    def entries(self) -> list[SpectrumEntry]:
        return list(self)

    def magnitude(self, freq) -> float:
        if isinstance(freq, (int, np.integer)):
            freq = (int(freq),)
        return float(self.magnitudes[self.group.index(freq)])

    def plancherel_sum(self) -> float:
        return float(np.sum(self.magnitudes**2))

    def top_classes(self, k: int) -> list[Character]:
        """The k strongest nonzero frequency classes {xi, -xi}, strongest first."""
        order = np.argsort(-self.magnitudes, kind="stable")
        seen: list[Character] = []
        keys = set()
        for i in order:
            if i == 0:
                continue
            chi = Character(self.group, self.group.coord(int(i))).canonical()
            if chi.freq in keys:
                continue
            keys.add(chi.freq)
            seen.append(chi)
            if len(seen) == k:
                break
        return seen


def spectrum(a: GroupSet) -> Spectrum:
    coeffs = np.fft.fftn(a.grid().astype(np.float64))
    return Spectrum(a.group, coeffs, a.cardinality)


class DetectionError(RuntimeError):
    pass


def detect_character(c2: GroupSet, spec: Spectrum | None = None) -> SpectrumEntry:
    """Strongest nonzero frequency class; ties by smaller order, then smaller representative."""
    if c2.is_empty():
        raise EmptySetError("character detection on an empty set")
    if spec is None:
        spec = spectrum(c2)
    mags = spec.magnitudes.copy()
    mags[0] = -1.0
    best = float(mags.max())
    if best <= 1e-12:
        raise DetectionError("all nonzero Fourier coefficients vanish")
    tied = np.flatnonzero(mags >= best * (1 - _TIE_RTOL))
    g = c2.group
    chars = [Character(g, g.coord(int(i))).canonical() for i in tied]
    chi = min(chars, key=lambda c: (c.order, c.freq))
    weak = best < WEAK_RATIO * float(c2.measure)
    return SpectrumEntry(chi.freq, best, weak)


# pushforward densities


@dataclass(frozen=True, eq=False)
class DensityFunction:
    """f(alpha) = numer[alpha] / denom on the circle Z/L."""

    circle_size: int
    numer: np.ndarray = field(repr=False)
    denom: int
    window: int = 0

    def __post_init__(self):
        v = np.asarray(self.numer, dtype=np.int64).copy()
        if v.shape != (self.circle_size,):
            raise ValueError("density needs one value per class")
        v.setflags(write=False)
        object.__setattr__(self, "numer", v)

    @classmethod
    def from_values(cls, values, window: int = 0) -> "DensityFunction":
        vals = [as_fraction(v) for v in values]
        den = math.lcm(*(v.denominator for v in vals)) if vals else 1
        return cls(len(vals), np.array([int(v * den) for v in vals], dtype=np.int64), den, window)

    @property
    def values(self) -> list[Fraction]:
        return [Fraction(int(v), self.denom) for v in self.numer]

    def as_float(self) -> np.ndarray:
        return self.numer / self.denom

    @property
    def mass(self) -> Fraction:
        """(1/L) sum_alpha f(alpha)."""
        return Fraction(int(self.numer.sum()), self.denom * self.circle_size)


def default_window(order: int) -> int:
    return math.ceil(order / 256)


def _box_sum(c: np.ndarray, w: int) -> np.ndarray:
    L = c.size
    w = min(w, L)
    h = w // 2
    cs = np.concatenate(([0], np.cumsum(np.concatenate((c, c)))))
    starts = (np.arange(L) - h) % L
    return cs[starts + w] - cs[starts]


def _fiber_counts(a: GroupSet, chi: Character) -> np.ndarray:
    return np.bincount(chi.values[a.indices], minlength=chi.order).astype(np.int64)


def pushforward(a: GroupSet, chi: Character, window: int = 0) -> DensityFunction:
    """Fiber density of A along chi, box-averaged over `window` classes when window > 1."""
    if chi.is_zero():
        raise ValueError("pushforward along the zero character")
    if a.group != chi.group:
        raise ValueError("set and character live in different groups")
    if window < 0:
        raise ValueError("window must be nonnegative")
    L = chi.order
    fiber = a.group.total_size // L
    counts = _fiber_counts(a, chi)
    if window > 1:
        w = min(window, L)
        return DensityFunction(L, _box_sum(counts, w), fiber * w, w)
    return DensityFunction(L, counts, fiber, window)


def estimate_sup(f: DensityFunction, theta=0.05) -> Fraction:
    """Smallest level t with at least (1-theta) of the mass of f sitting at values <= t."""
    total = int(f.numer.sum())
    if total <= 0:
        raise ValueError("density has zero mass")
    theta = as_fraction(theta)
    if not 0 <= theta < 1:
        raise ValueError("theta must lie in [0, 1)")
    vals = np.sort(f.numer)
    cum = np.cumsum(vals)
    need = (1 - theta) * total
    # cum is integer; first index with cum >= need
    i = int(np.searchsorted(cum, math.ceil(need), side="left"))
    return Fraction(int(vals[min(i, vals.size - 1)]), f.denom)


# arc fitting


@dataclass(frozen=True)
class ArcFit:
    arc: Arc
    residual: Fraction


def _round_half_up(x: Fraction) -> int:
    return math.floor(x + Fraction(1, 2))


def _window_sums(v: np.ndarray, length: int) -> np.ndarray:
    L = v.size
    cs = np.concatenate(([0], np.cumsum(np.concatenate((v, v[:length])))))
    return cs[length : length + L] - cs[:L]


def fit_arc(f: DensityFunction, target_mass, level) -> ArcFit:
    """Arc of length round(target_mass * L / level) capturing the most f-mass.

    Residual is int |f - level * 1_arc| dmu, exact.
    """
    target_mass = as_fraction(target_mass)
    level = as_fraction(level)
    if not 0 < target_mass <= 1:
        raise ValueError("target mass must lie in (0, 1]")
    if level <= 0:
        raise ValueError("level must be positive")
    L = f.circle_size
    length = _round_half_up(target_mass * L / level)
    if length > L:
        raise ValueError(f"arc length {length} exceeds circle size {L}")
    length = max(length, 1)
    sums = _window_sums(f.numer, length)
    start = int(np.argmax(sums))
    arc = Arc(L, start, length)
    p, q = level.numerator, level.denominator
    ind = arc.indicator()
    diff = np.abs(f.numer * q - p * f.denom * ind.astype(np.int64))
    residual = Fraction(int(diff.sum()), f.denom * q * L)
    return ArcFit(arc, residual)


def multiplicity_scores(f: DensityFunction, m_max: int = 16) -> dict[int, Fraction]:
    """Arc-fit residual of f against (1/m) * 1_arc for each feasible m."""
    mass = f.mass
    out = {}
    for m in range(1, m_max + 1):
        length = _round_half_up(mass * f.circle_size * m)
        if not 1 <= length <= f.circle_size:
            continue
        out[m] = fit_arc(f, mass, Fraction(1, m)).residual
    return out


def estimate_multiplicity(f: DensityFunction, tau, m_max: int = 16) -> int:
    tau = as_fraction(tau)
    if not 0 < tau <= 1:
        raise ValueError("tau must lie in (0, 1]")
    if m_max < 1:
        raise ValueError("m_max must be at least 1")
    scores = multiplicity_scores(f, m_max)
    naive = max(1, round(1 / float(tau)))
    if not scores:
        log.info("no feasible multiplicity; falling back to round(1/tau)=%d", naive)
        return min(naive, m_max)
    m = min(scores, key=lambda k: (scores[k], abs(Fraction(1, k) - tau)))
    log.info("multiplicity m=%d (round(1/tau)=%d)", m, naive)
    return m


# characters


class QuotientError(ValueError):
    def __init__(self, message: str, modulus: int):
        super().__init__(message)
        self.modulus = modulus


def quotient_solutions(chi: Character, m: int) -> list[Character]:
    """All chi' with m * chi' == chi, sorted by (order, frequency)."""
    if m < 1:
        raise ValueError("m must be positive")
    per_axis = []
    for xi, n in zip(chi.freq, chi.group.dims):
        g = math.gcd(m, n)
        if xi % g:
            raise QuotientError(f"{m} * xi' = {xi} has no solution mod {n}", n)
        n_red = n // g
        base = (xi // g) * pow(m // g, -1, n_red) % n_red if n_red > 1 else 0
        per_axis.append([base + j * n_red for j in range(g)])
    sols = [Character(chi.group, tuple(c)) for c in itertools.product(*per_axis)]
    return sorted(sols, key=lambda c: (c.order, c.freq))


def quotient_character(chi: Character, m: int) -> Character:
    if m == 1:
        return chi
    return quotient_solutions(chi, m)[0]


# structure transfer


def best_arc_for_set(a: GroupSet, chi: Character, length_hint: int | None = None) -> ArcFit:
    """Arc I minimising |A symmetric-difference Bohr(chi, I)|, searched around length_hint."""
    L = chi.order
    fiber = a.group.total_size // L
    counts = _fiber_counts(a, chi)
    size = a.cardinality
    if length_hint is None:
        length_hint = _round_half_up(Fraction(size, fiber))
    hint = min(max(length_hint, 1), L)
    radius = max(3, hint // 2)
    lengths = sorted(range(max(1, hint - radius), min(L, hint + radius) + 1), key=lambda k: (abs(k - hint), k))
    best = None
    for length in lengths:
        sums = _window_sums(counts, length)
        s = int(np.argmax(sums))
        sd = size + length * fiber - 2 * int(sums[s])
        if best is None or sd < best[0]:
            best = (sd, s, length)
    sd, s, length = best
    return ArcFit(Arc(L, s, length), Fraction(sd, a.group.total_size))


def transfer_structure(a: GroupSet, chi: Character, arc_b: Arc, tolerance, *, delta=None) -> ArcFit:
    """Given a partner Bohr(chi, arc_b) critical with A, find A's arc.

    The residual of the returned fit is mu(A symmetric-difference Bohr(chi, I)).
    """
    partner = bohr_set(BohrDescription(chi, arc_b))
    delta = Fraction(1, a.group.total_size) if delta is None else as_fraction(delta)
    rep = criticality(a, partner, delta)
    if rep.defect > as_fraction(tolerance):
        raise NotCriticalError(
            f"(A, Bohr) defect {float(rep.defect):.4g} exceeds tolerance {float(as_fraction(tolerance)):.4g}"
        )
    return best_arc_for_set(a, chi)


@dataclass(frozen=True)
class PairFit:
    character: Character
    arc_a: Arc
    arc_b: Arc
    residual_a: Fraction
    residual_b: Fraction


def fit_parallel_pair(a: GroupSet, b: GroupSet, candidates: int = 8) -> PairFit | None:
    """Best parallel Bohr approximation over the strongest spectral classes of A and B."""
    chars: dict[tuple, Character] = {}
    for s in (a, b):
        if s.is_empty() or s.cardinality == s.group.total_size:
            continue
        for chi in spectrum(s).top_classes(candidates):
            chars.setdefault(chi.freq, chi)
    best = None
    for chi in chars.values():
        fa = best_arc_for_set(a, chi)
        fb = best_arc_for_set(b, chi)
        key = (max(fa.residual, fb.residual), fa.residual + fb.residual, chi.order, chi.freq)
        if best is None or key < best[0]:
            best = (key, PairFit(chi, fa.arc, fb.arc, fa.residual, fb.residual))
    return None if best is None else best[1]


# end-to-end recovery


class RecoveryError(RuntimeError):
    def __init__(self, stage: str, message: str, diagnostics: dict | None = None):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class RecoveryConfig:
    tolerance: Fraction = Fraction(3, 100)
    eps: Fraction = Fraction(1, 20)
    delta_target: Fraction = Fraction(1, 20)
    theta: Fraction = Fraction(1, 20)
    window: int | None = None
    m_max: int = 16
    K_steps: int = 8
    growth_tol: float = 0.25
    # relative: almost sumsets may exceed mu(X) + mu(Y) by this fraction of it
    sumset_tolerance: Fraction = Fraction(1, 5)
    tau_tolerance: float = 0.15
    cap_factor: int = 10

    def to_json(self) -> dict:
        return {k: (str(v) if isinstance(v, Fraction) else v) for k, v in self.__dict__.items()}


@dataclass(frozen=True)
class RecoveryResult:
    character: Character
    arcI: Arc
    arcJ: Arc
    tau: float
    m: int
    detected_freq: tuple[int, ...]
    residualA: Fraction
    residualB: Fraction
    success: bool
    diagnostics: dict = field(default_factory=dict, compare=False)

    def to_json(self) -> dict:
        return {
            "schema": "kneserkit.recovery/1",
            "freq": list(self.character.freq),
            "order": self.character.order,
            "arcI": {"start": self.arcI.start, "length": self.arcI.length},
            "arcJ": {"start": self.arcJ.start, "length": self.arcJ.length},
            "tau": self.tau,
            "m": self.m,
            "detected_freq": list(self.detected_freq),
            "residualA": str(self.residualA),
            "residualB": str(self.residualB),
            "residualA_float": float(self.residualA),
            "residualB_float": float(self.residualB),
            "success": self.success,
            "diagnostics": self.diagnostics,
        }


def centering_shift(c: GroupSet, chi: Character) -> int:
    """An element y with C + y having circular mean phase (along chi) at 0."""
    L = chi.order
    phases = chi.values[c.indices].astype(np.float64) * (2 * math.pi / L)
    z = np.exp(1j * phases).sum()
    s = int(round(math.atan2(z.imag, z.real) * L / (2 * math.pi))) % L
    return chi.preimage_point(-s)


def recover_bohr_pair(a: GroupSet, b: GroupSet, delta, config: RecoveryConfig | None = None) -> RecoveryResult:
    cfg = config or RecoveryConfig()
    delta = as_fraction(delta)
    tol = as_fraction(cfg.tolerance)
    eps = as_fraction(cfg.eps)
    diag: dict = {"config": cfg.to_json(), "delta": str(delta)}

    def fail(stage, msg):
        raise RecoveryError(stage, msg, diag)

    try:
        rep = criticality(a, b, delta)
    except EmptySetError as e:
        fail("precondition", str(e))
    diag["criticality"] = rep.to_json()
    if rep.defect > tol:
        fail("precondition", f"criticality defect {float(rep.defect):.4g} exceeds tolerance {float(tol):.4g}")
    if rep.margin < eps:
        fail("precondition", f"margin {float(rep.margin):.4g} below eps {float(eps):.4g}")

    shrink = shrink_to_small(a, b, cfg.delta_target, tol, delta=delta, cap_factor=cfg.cap_factor)
    diag["shrink"] = {"steps": shrink.log_rows(), "success": shrink.success, "reason": shrink.reason}
    if not shrink.success:
        fail("shrink", shrink.reason or "could not reach the target measure")
    c = shrink.C

    # one tolerance for C_2 and every C_k: it also caps the threshold, so
    # letting it grow with k would trim C_k harder at each step
    stol = as_fraction(cfg.sumset_tolerance) * 2 * c.measure
    try:
        c2, d2 = almost_sumset(c, c, stol)
    except NotCriticalError as e:
        fail("almost-sumset", str(e))
    diag["C2"] = {"mu": float(c2.measure), "delta": str(d2), "tolerance": str(stol)}
    mus = [c.measure, c2.measure]
    ck = c2
    for k in range(3, cfg.K_steps + 1):
        if k * c.measure > Fraction(1, 2):
            break
        try:
            ck, _ = almost_sumset(ck, c, stol)
        except NotCriticalError as e:
            fail("growth", f"C_{k}: {e}")
        mus.append(ck.measure)
    steps = [float(y - x) for x, y in zip(mus, mus[1:])]
    mean_step = sum(steps) / len(steps)
    spread = max(abs(d - mean_step) for d in steps)
    diag["growth"] = {"mu": [float(v) for v in mus], "steps": steps}
    if mean_step <= 0 or spread > cfg.growth_tol * mean_step:
        fail("growth", f"increments {['%.4f' % d for d in steps]} are not linear within {cfg.growth_tol}")

    try:
        det = detect_character(c2)
    except DetectionError as e:
        fail("detect", str(e))
    chi = Character(a.group, det.freq)
    diag["detect"] = {"freq": list(det.freq), "magnitude": det.magnitude, "weak": det.weak}

    window = default_window(chi.order) if cfg.window is None else cfg.window

    def estimate(source: GroupSet):
        y = centering_shift(source, chi)
        f = pushforward(source.translate(y), chi, window)
        tau = estimate_sup(f, cfg.theta)
        scores = multiplicity_scores(f, cfg.m_max)
        m = estimate_multiplicity(f, tau, cfg.m_max)
        return y, tau, m, scores

    # C itself first; its almost-doubling C_2 has the same fiber picture with
    # the holes that repeated intersections punch into C filled in
    for name, source in (("C", c), ("C2", c2)):
        y, tau, m, scores = estimate(source)
        diag["multiplicity"] = {
            "source": name,
            "center_shift": y,
            "window": window,
            "tau": float(tau),
            "m": m,
            "round_inv_tau": max(1, round(1 / float(tau))),
            "scores": {str(k): float(v) for k, v in scores.items()},
        }
        if abs(float(tau) - 1 / m) <= cfg.tau_tolerance:
            break
        log.info("tau=%.3f inconsistent with m=%d on %s", float(tau), m, name)
    else:
        fail("multiplicity", f"tau={float(tau):.3f} inconsistent with m={m}")

    try:
        sols = quotient_solutions(chi, m)
    except QuotientError as e:
        fail("quotient", f"{e} (modulus {e.modulus})")
    # among admissible quotients keep the one that explains C best
    fits = []
    for cand in sols:
        cand = cand.canonical()
        fits.append((best_arc_for_set(c, cand).residual, cand.order, cand.freq, cand))
    fits.sort(key=lambda t: t[:3])
    chi_q = fits[0][3]
    fc = fit_arc(pushforward(c, chi_q, 0), c.measure, 1)
    diag["quotient"] = {"freq": list(chi_q.freq), "order": chi_q.order, "candidates": len(sols)}
    diag["arcC"] = {"start": fc.arc.start, "length": fc.arc.length, "residual": float(fc.residual)}

    try:
        fit_a = transfer_structure(a, chi_q, fc.arc, tol, delta=delta)
    except NotCriticalError as e:
        fail("transfer-A", str(e))
    try:
        fit_b = transfer_structure(b, chi_q, fit_a.arc, tol, delta=delta)
    except NotCriticalError as e:
        fail("transfer-B", str(e))

    success = max(fit_a.residual, fit_b.residual) <= eps
    return RecoveryResult(
        character=chi_q,
        arcI=fit_a.arc,
        arcJ=fit_b.arc,
        tau=float(tau),
        m=m,
        detected_freq=tuple(det.freq),
        residualA=fit_a.residual,
        residualB=fit_b.residual,
        success=success,
        diagnostics=diag,
    )
