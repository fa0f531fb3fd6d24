"""Instance generators and the batch experiment runner.

A run writes ``<name>.jsonl`` (one config line, one line per instance, one
summary line, all tagged with the schema version) and ``<name>.csv`` with one
row per instance. Instance ``i`` is generated from seed ``seed + i``, so a run
is reproduced exactly by replaying its config.
"""

from __future__ import annotations

import dataclasses
import json
import math
import time
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .conv import as_fraction, convolve
from .group import Arc, BohrDescription, Character, GridGroup, GroupSet, bohr_set, make_group
from .inequalities import (
    ConnectednessWarning,
    check_kneser,
    check_partial_bound,
    classify_equality,
    ruzsa_functional,
    submodularity_defect,
)
from .inverse import RecoveryConfig, RecoveryError, recover_bohr_pair
from .io import write_csv

SCHEMA = "kneserkit.run/1"
KINDS = ("bohr-noise", "random", "interval", "adversarial-subgroup")
TASKS = ("kneser", "ruzsa", "partial", "submod", "classify", "recover")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    dims: tuple[int, ...]
    rho: float = 0.0
    freq: tuple[int, ...] | None = None
    measure_range: tuple[float, float] = (0.15, 0.3)

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(n) for n in self.dims))
        if self.freq is not None:
            object.__setattr__(self, "freq", tuple(int(v) for v in self.freq))
        object.__setattr__(self, "measure_range", tuple(float(v) for v in self.measure_range))
        if self.kind not in KINDS:
            raise ConfigError(f"unknown generator kind {self.kind!r}; expected one of {KINDS}")
        if not self.dims or any(n < 2 for n in self.dims):
            raise ConfigError(f"bad dims {self.dims}")
        if not 0 <= self.rho <= 0.5:
            raise ConfigError(f"noise fraction {self.rho} outside [0, 0.5]")
        lo, hi = self.measure_range
        if not 0 < lo <= hi <= 1:
            raise ConfigError(f"bad measure range {self.measure_range}")
        if self.kind == "interval" and len(self.dims) != 1:
            raise ConfigError("interval generator needs a cyclic group")
        if self.freq is not None and len(self.freq) != len(self.dims):
            raise ConfigError("freq rank does not match dims")


@dataclass(frozen=True)
class Instance:
    a: GroupSet
    b: GroupSet
    truth: tuple[BohrDescription, BohrDescription] | None = None


def _smallest_prime_factor(n: int) -> int:
    for p in range(2, math.isqrt(n) + 1):
        if n % p == 0:
            return p
    return n


def _flip(s: GroupSet, count: int, rng: np.random.Generator) -> GroupSet:
    if count == 0:
        return s
    mask = s.mask.copy()
    mask[rng.choice(mask.size, size=count, replace=False)] ^= True
    return GroupSet(s.group, mask)


def _bohr_noise(g: GridGroup, spec: GeneratorSpec, rng: np.random.Generator) -> Instance:
    freq = spec.freq or (1,) + (0,) * (g.rank - 1)
    chi = Character(g, freq)
    if chi.is_zero():
        raise ConfigError("bohr-noise needs a nonzero frequency")
    L = chi.order
    lo, hi = spec.measure_range
    descs = []
    for _ in range(2):
        length = min(L, max(1, round(rng.uniform(lo, hi) * L)))
        descs.append(BohrDescription(chi, Arc(L, int(rng.integers(L)), length)))
    flips = round(spec.rho * g.total_size)
    a, b = (_flip(bohr_set(d), flips, rng) for d in descs)
    return Instance(a, b, tuple(descs))


def _random(g: GridGroup, spec: GeneratorSpec, rng: np.random.Generator) -> Instance:
    out = []
    for _ in range(2):
        p = rng.uniform(0.05, 0.6)
        mask = rng.random(g.total_size) < p
        if not mask.any():
            mask[rng.integers(g.total_size)] = True
        out.append(GroupSet(g, mask))
    return Instance(*out)


def _interval(g: GridGroup, spec: GeneratorSpec, rng: np.random.Generator) -> Instance:
    n = g.total_size
    la = int(rng.integers(1, n + 1))
    lb = int(rng.integers(1, n - la + 2))
    sa, sb = int(rng.integers(n)), int(rng.integers(n))
    a, b = GroupSet.interval(g, sa, la), GroupSet.interval(g, sb, lb)
    truth = None
    if n > 1:
        one = Character(g, (1,))
        truth = (BohrDescription(one, Arc(n, sa, la)), BohrDescription(one, Arc(n, sb, lb)))
    return Instance(a, b, truth)


def _adversarial(g: GridGroup, spec: GeneratorSpec, rng: np.random.Generator) -> Instance:
    if not g.has_proper_subgroups:
        raise ConfigError(f"{g} has no proper subgroup to exploit")
    n0 = g.dims[0]
    if g.rank == 1 or n0 > 1 and _smallest_prime_factor(n0) < n0:
        p = _smallest_prime_factor(n0)
    else:
        p = n0
    if p == 1:
        raise ConfigError("first axis is trivial")
    h = GroupSet(g, g.coords[0] % p == 0)
    return Instance(h, h)


_GENERATORS = {
    "bohr-noise": _bohr_noise,
    "random": _random,
    "interval": _interval,
    "adversarial-subgroup": _adversarial,
}


def generate_instance(spec: GeneratorSpec, seed: int) -> Instance:
    g = make_group(spec.dims)
    rng = np.random.default_rng(seed)
    return _GENERATORS[spec.kind](g, spec, rng)


def generate(spec: GeneratorSpec, seed: int) -> tuple[GroupSet, GroupSet]:
    inst = generate_instance(spec, seed)
    return inst.a, inst.b


# experiments


def auto_delta(a: GroupSet, b: GroupSet, rho: float) -> Fraction:
    """A recovery threshold clearing the convolution floor that noise creates.

    rho*N flipped points in A meet a translate of B in about rho*mu(B)*N
    places (and symmetrically), so the floor sits near rho*(mu(A)+mu(B)).
    """
    n = a.group.total_size
    floor = rho * float(a.measure + b.measure)
    level = 1.5 * floor + 4 * math.sqrt(floor / n)
    return Fraction(max(1, math.ceil(level * n)), n)


@dataclass(frozen=True)
class ExperimentConfig:
    dims: tuple[int, ...]
    kind: str = "random"
    task: str = "kneser"
    trials: int = 10
    seed: int = 0
    rho: float = 0.0
    freq: tuple[int, ...] | None = None
    measure_range: tuple[float, float] = (0.15, 0.3)
    eps: str | None = None
    delta: str | None = None
    tolerance: str = "3/100"
    theta: str = "1/20"
    window: int | None = None
    m_max: int = 16
    K_steps: int = 8
    out_dir: str | None = None
    name: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(n) for n in self.dims))
        if self.freq is not None:
            object.__setattr__(self, "freq", tuple(int(v) for v in self.freq))
        object.__setattr__(self, "measure_range", tuple(float(v) for v in self.measure_range))
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}; expected one of {TASKS}")
        if self.trials < 0:
            raise ConfigError("trials must be nonnegative")
        for key in ("eps", "delta", "tolerance", "theta"):
            v = getattr(self, key)
            if v is not None:
                try:
                    as_fraction(v)
                except (ValueError, ZeroDivisionError) as e:
                    raise ConfigError(f"{key}={v!r} is not a number") from e
        self.generator()

    def generator(self) -> GeneratorSpec:
        return GeneratorSpec(self.kind, self.dims, self.rho, self.freq, self.measure_range)

    def recovery(self, a: GroupSet, b: GroupSet) -> tuple[Fraction, RecoveryConfig]:
        base = RecoveryConfig()
        cfg = dataclasses.replace(
            base,
            tolerance=as_fraction(self.tolerance),
            eps=as_fraction(self.eps) if self.eps is not None else base.eps,
            theta=as_fraction(self.theta),
            window=self.window,
            m_max=self.m_max,
            K_steps=self.K_steps,
        )
        return self.resolved_delta(a, b), cfg

    def resolved_delta(self, a: GroupSet, b: GroupSet) -> Fraction:
        if self.delta is not None:
            return as_fraction(self.delta)
        return auto_delta(a, b, self.rho)

    def to_json(self) -> dict:
        d = dataclasses.asdict(self)
        d["dims"] = list(self.dims)
        d["freq"] = None if self.freq is None else list(self.freq)
        d["measure_range"] = list(self.measure_range)
        return d

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(obj) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "dims" not in obj:
            raise ConfigError("config needs dims")
        try:
            return cls(**obj)
        except TypeError as e:
            raise ConfigError(str(e)) from e

    def run_name(self) -> str:
        return self.name or f"{self.task}-{self.kind}-{'x'.join(map(str, self.dims))}-s{self.seed}"


@dataclass
class RunRecord:
    config: ExperimentConfig
    instances: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    wall_clock: float = 0.0
    paths: dict = field(default_factory=dict)

    @property
    def violations(self) -> int:
        return self.summary.get("violations", 0)

    @property
    def exit_code(self) -> int:
        return 2 if self.violations else 0

    def verdicts(self) -> list[tuple]:
        """What must be identical under replay."""
        return [(r["index"], r["verdict"], json.dumps(r["report"], sort_keys=True)) for r in self.instances]


def _law_report(task: str, inst: Instance, rng: np.random.Generator, cfg: ExperimentConfig) -> tuple[str, dict]:
    a, b = inst.a, inst.b
    n = a.group.total_size
    if task == "kneser":
        rep = check_kneser(a, b)
    elif task == "ruzsa":
        prof = convolve(a, b)
        reps = [ruzsa_functional(a, b, Fraction(k, n), prof) for k in range(1, min(a.cardinality, b.cardinality) + 1)]
        rep = min(reps, key=lambda r: r.defect)
    elif task == "partial":
        lo = min(a.cardinality, b.cardinality)
        if lo * lo <= 1:
            return "skipped", {"reason": "no valid eps"}
        eps = as_fraction(cfg.eps) if cfg.eps is not None else Fraction(int(rng.integers(1, lo * lo)), n * n)
        rep = check_partial_bound(a, b, eps)
        rep.details["eps"] = eps
    elif task == "submod":
        a2 = GroupSet(a.group, rng.random(n) < 0.5)
        t = Fraction(int(rng.integers(1, n + 1)), n)
        rep = submodularity_defect(a, a2, b, t)
        rep.details["t"] = t
    else:
        raise AssertionError(task)
    return ("hold" if rep.holds else "violation"), rep.to_json()


def run_instance(cfg: ExperimentConfig, index: int) -> dict:
    seed = cfg.seed + index
    inst = generate_instance(cfg.generator(), seed)
    rng = np.random.default_rng([seed, 1])
    row = {"type": "instance", "index": index, "seed": seed}
    try:
        if cfg.task == "classify":
            case = classify_equality(inst.a, inst.b)
            row["verdict"], row["report"] = "hold", {"case": case.value}
        elif cfg.task == "recover":
            delta, rcfg = cfg.recovery(inst.a, inst.b)
            res = recover_bohr_pair(inst.a, inst.b, delta, rcfg)
            report = res.to_json()
            report.pop("diagnostics")
            if inst.truth is not None:
                truth = inst.truth[0].character
                report["class_correct"] = truth.same_class(res.character)
            report["delta"] = str(delta)
            row["verdict"] = "success" if res.success else "violation"
            row["report"] = report
        else:
            row["verdict"], row["report"] = _law_report(cfg.task, inst, rng, cfg)
    except RecoveryError as e:
        row["verdict"], row["report"] = "error", {"stage": e.stage, "message": str(e)}
    except ValueError as e:
        row["verdict"], row["report"] = "error", {"stage": cfg.task, "message": str(e)}
    return row


def _summarize(cfg: ExperimentConfig, rows: list[dict]) -> dict:
    counts: dict[str, int] = {}
    for r in rows:
        counts[r["verdict"]] = counts.get(r["verdict"], 0) + 1
    summary = {
        "type": "summary",
        "trials": len(rows),
        "verdicts": counts,
        "violations": counts.get("violation", 0) + (counts.get("error", 0) if cfg.task == "recover" else 0),
        "errors": counts.get("error", 0),
    }
    if cfg.task == "recover":
        res = [max(r["report"]["residualA_float"], r["report"]["residualB_float"]) for r in rows if "residualA" in r["report"]]
        if res:
            q = np.quantile(res, [0.0, 0.5, 0.9, 1.0])
            summary["residual_quantiles"] = dict(zip(("min", "median", "p90", "max"), map(float, q)))
        wrong = sum(1 for r in rows if r["report"].get("class_correct") is False)
        summary["misidentified"] = wrong
    elif cfg.task in ("kneser", "ruzsa", "partial", "submod"):
        defects = [Fraction(r["report"]["defect"]) for r in rows if "defect" in r["report"]]
        if defects:
            summary["min_defect"] = str(min(defects))
        summary["caveat"] = any(r["report"].get("caveat") for r in rows)
    elif cfg.task == "classify":
        cases: dict[str, int] = {}
        for r in rows:
            c = r["report"].get("case", "error")
            cases[c] = cases.get(c, 0) + 1
        summary["cases"] = cases
    return summary


_CSV_COLUMNS = {
    "recover": ("index", "seed", "verdict", "freq", "m", "tau", "residualA", "residualB", "class_correct", "stage"),
    "classify": ("index", "seed", "verdict", "case"),
}
_LAW_COLUMNS = ("index", "seed", "verdict", "lhs", "rhs", "defect", "caveat")


def _csv_row(columns, row: dict) -> list:
    out = []
    for c in columns:
        if c in row:
            v = row[c]
        else:
            v = row["report"].get(c, "")
        if isinstance(v, list):
            v = " ".join(map(str, v))
        out.append(v)
    return out


def run_experiment(config: ExperimentConfig, write: bool = True) -> RunRecord:
    start = time.perf_counter()
    rec = RunRecord(config)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConnectednessWarning)
        rec.instances = [run_instance(config, i) for i in range(config.trials)]
    rec.summary = _summarize(config, rec.instances)
    rec.wall_clock = time.perf_counter() - start
    rec.summary["wall_clock"] = rec.wall_clock
    if write and config.out_dir is not None:
        out = Path(config.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        name = config.run_name()
        jl, table = out / f"{name}.jsonl", out / f"{name}.csv"
        # append-only: a rerun adds a new config/instances/summary block
        with open(jl, "a") as fh:
            fh.write(json.dumps({"schema": SCHEMA, "type": "config", "config": config.to_json()}) + "\n")
            for r in rec.instances:
                fh.write(json.dumps({"schema": SCHEMA, **r}) + "\n")
            fh.write(json.dumps({"schema": SCHEMA, **rec.summary}) + "\n")
        cols = _CSV_COLUMNS.get(config.task, _LAW_COLUMNS)
        write_csv(cols, (_csv_row(cols, r) for r in rec.instances), table)
        rec.paths = {"jsonl": str(jl), "csv": str(table)}
    return rec


def load_run(path: str | Path) -> tuple[dict, list[dict], dict]:
    """(config, instance rows, summary) of the last run block in a JSON-lines file."""
    lines = [json.loads(s) for s in Path(path).read_text().splitlines() if s.strip()]
    starts = [i for i, l in enumerate(lines) if l["type"] == "config"]
    if not starts:
        raise ValueError(f"{path}: no config record")
    lines = lines[starts[-1] :]
    cfg = lines[0]["config"]
    rows = [l for l in lines if l["type"] == "instance"]
    summary = next(l for l in lines if l["type"] == "summary")
    return cfg, rows, summary
