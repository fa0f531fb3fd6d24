"""Command line interface: ``kneserkit <command> [options]``.

Exit codes: 0 success / all hold, 2 some violation or failed recovery, 3 bad configuration or input.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import warnings
from fractions import Fraction
from pathlib import Path

from . import __version__
from .conv import as_fraction, convolve
from .critical import NotCriticalError, approximate_by_translates, shrink_to_small
from .group import EmptySetError, GroupMismatchError
from .harness import (
    KINDS,
    ConfigError,
    ExperimentConfig,
    GeneratorSpec,
    auto_delta,
    generate_instance,
    run_experiment,
)
from .inequalities import ConnectednessWarning
from .inverse import RecoveryConfig, RecoveryError, pushforward, recover_bohr_pair, spectrum
from .io import FormatError, bohr_to_json, csv_text, read_set, set_to_json, write_csv, write_json

OUT_ENV = "KNESERKIT_OUT"
EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.replace("x", ",").split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _frac(text: str) -> Fraction:
    try:
        return as_fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected a number or p/q, got {text!r}") from None


def _out_dir(args) -> Path:
    return Path(args.out or os.environ.get(OUT_ENV) or "kneserkit-out")


def _emit(args, obj: dict, header=None, rows=None) -> None:
    """JSON to stdout, or the CSV table when --format csv and a table exists."""
    if args.format == "csv" and header is not None:
        sys.stdout.write(csv_text(header, rows))
    else:
        print(json.dumps(obj, indent=2))


def cmd_gen(args) -> int:
    spec = GeneratorSpec(args.kind, args.dims, args.rho, args.freq, tuple(args.measures))
    inst = generate_instance(spec, args.seed)
    out = _out_dir(args)
    paths = {"A": str(out / "A.json"), "B": str(out / "B.json")}
    write_json(set_to_json(inst.a), paths["A"])
    write_json(set_to_json(inst.b), paths["B"])
    if inst.truth is not None:
        paths["truth"] = str(out / "truth.json")
        write_json({"A": bohr_to_json(inst.truth[0]), "B": bohr_to_json(inst.truth[1])}, paths["truth"])
    _emit(args, {"paths": paths, "muA": str(inst.a.measure), "muB": str(inst.b.measure)})
    return EXIT_OK


def cmd_conv(args) -> int:
    a, b = read_set(args.a), read_set(args.b)
    prof = convolve(a, b, args.method)
    rows = [(x, int(c)) for x, c in enumerate(prof.counts)]
    out = _out_dir(args)
    write_csv(("x", "count"), rows, out / "conv.csv")
    summary = {"mass": prof.mass, "max": prof.max, "support_size": prof.support.cardinality, "csv": str(out / "conv.csv")}
    _emit(args, summary, ("x", "count"), rows)
    return EXIT_OK


def cmd_check(args) -> int:
    cfg = ExperimentConfig(
        dims=args.dims,
        kind=args.kind,
        task=args.law,
        trials=args.trials,
        seed=args.seed,
        rho=args.rho,
        eps=args.eps,
        out_dir=str(_out_dir(args)),
    )
    rec = run_experiment(cfg)
    for row in rec.instances:
        if args.format == "json":
            print(json.dumps(row))
    if args.format == "csv":
        sys.stdout.write(Path(rec.paths["csv"]).read_text())
    print(json.dumps(rec.summary), file=sys.stderr)
    return rec.exit_code


def cmd_shrink(args) -> int:
    a, b = read_set(args.a), read_set(args.b)
    res = shrink_to_small(a, b, args.delta_target, args.tolerance, delta=args.delta, cap_factor=args.cap_factor)
    out = _out_dir(args)
    header = ("step", "size", "defect")
    rows = [(s.step, s.size, str(s.defect)) for s in res.steps]
    write_csv(header, rows, out / "shrink.csv")
    write_json(set_to_json(res.C), out / "C.json")
    _emit(
        args,
        {"success": res.success, "reason": res.reason, "size": res.C.cardinality, "steps": res.log_rows(),
         "csv": str(out / "shrink.csv"), "set": str(out / "C.json")},
        header,
        rows,
    )
    return EXIT_OK if res.success else EXIT_VIOLATION


def cmd_translates(args) -> int:
    a, b = read_set(args.a), read_set(args.b)
    xs, resid = approximate_by_translates(a, b, args.delta, args.m, args.seed)
    _emit(args, {"translates": xs, "count": len(xs), "symm_diff": str(resid), "symm_diff_float": float(resid)},
          ("x",), ((x,) for x in xs))
    return EXIT_OK


def cmd_recover(args) -> int:
    a, b = read_set(args.a), read_set(args.b)
    defaults = RecoveryConfig()
    cfg = RecoveryConfig(
        tolerance=args.tolerance if args.tolerance is not None else defaults.tolerance,
        eps=args.eps if args.eps is not None else defaults.eps,
        window=args.window,
        m_max=args.mmax,
        K_steps=args.kcheck,
    )
    if not 0 <= args.rho <= 0.5:
        raise ConfigError(f"--rho {args.rho} outside [0, 0.5]")
    delta = args.delta if args.delta is not None else auto_delta(a, b, args.rho)
    out = _out_dir(args)
    try:
        res = recover_bohr_pair(a, b, delta, cfg)
    except RecoveryError as e:
        doc = {"schema": "kneserkit.recovery/1", "success": False, "stage": e.stage, "message": str(e),
               "diagnostics": json.loads(json.dumps(e.diagnostics, default=str))}
        print(write_json(doc, out / "recovery.json"))
        return EXIT_VIOLATION
    doc = res.to_json()
    write_json(doc, out / "recovery.json")
    if args.dump_spectrum:
        spec = spectrum(b)
        write_csv(("index", "freq", "magnitude"),
                  ((i, " ".join(map(str, a.group.coord(i))), float(m)) for i, m in enumerate(spec.magnitudes)),
                  out / "spectrum.csv")
    if args.dump_density:
        f = pushforward(a, res.character, res.diagnostics["multiplicity"]["window"])
        write_csv(("alpha", "density"), ((i, float(v)) for i, v in enumerate(f.as_float())), out / "density.csv")
    header = ("freq", "m", "tau", "residualA", "residualB", "success")
    rows = [(" ".join(map(str, res.character.freq)), res.m, res.tau, doc["residualA"], doc["residualB"], res.success)]
    _emit(args, doc, header, rows)
    return EXIT_OK if res.success else EXIT_VIOLATION


def cmd_run(args) -> int:
    try:
        obj = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {args.config}: {e}") from e
    if args.seed_given:
        obj["seed"] = args.seed
    obj.setdefault("out_dir", str(_out_dir(args)))
    rec = run_experiment(ExperimentConfig.from_json(obj))
    _emit(args, {"summary": rec.summary, "paths": rec.paths})
    return rec.exit_code


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    def d(value):
        return argparse.SUPPRESS if suppress else value

    parser.add_argument("--seed", type=int, default=d(None), help="RNG seed (default 0)")
    parser.add_argument("--out", default=d(None), help=f"output directory (default ${OUT_ENV} or ./kneserkit-out)")
    parser.add_argument("--format", choices=("json", "csv"), default=d("json"))
    parser.add_argument("-v", "--verbose", action="store_true", default=d(False))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="kneserkit", description="Sumset inequalities and Bohr-set recovery on finite grid groups.")
    p.add_argument("--version", action="version", version=__version__)
    _global_flags(p, suppress=False)
    # repeated on each subcommand so the flags may follow it; suppressed
    # defaults keep a value given before the subcommand
    common = _Parser(add_help=False)
    _global_flags(common, suppress=True)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def pair(sp):
        sp.add_argument("a", help="JSON set file for A")
        sp.add_argument("b", help="JSON set file for B")

    sp = sub.add_parser("gen", parents=[common], help="generate an instance pair")
    sp.add_argument("--kind", choices=KINDS, default="bohr-noise")
    sp.add_argument("--dims", type=_ints, required=True)
    sp.add_argument("--rho", type=float, default=0.0)
    sp.add_argument("--freq", type=_ints, default=None)
    sp.add_argument("--measures", type=float, nargs=2, default=(0.15, 0.3), metavar=("LO", "HI"))
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("conv", parents=[common], help="exact convolution counts of two sets")
    pair(sp)
    sp.add_argument("--method", choices=("auto", "direct", "ntt"), default="auto")
    sp.set_defaults(func=cmd_conv)

    sp = sub.add_parser("check", parents=[common], help="check an inequality on generated instances")
    sp.add_argument("--law", choices=("kneser", "ruzsa", "partial", "submod", "classify"), required=True)
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--dims", type=_ints, required=True)
    sp.add_argument("--kind", choices=KINDS, default="random")
    sp.add_argument("--rho", type=float, default=0.0)
    sp.add_argument("--eps", default=None, help="fixed eps for --law partial (default: random valid eps)")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("shrink", parents=[common], help="shrink B while keeping (A, B) critical")
    pair(sp)
    sp.add_argument("--delta-target", type=_frac, default=Fraction(1, 20))
    sp.add_argument("--tolerance", type=_frac, default=Fraction(3, 100))
    sp.add_argument("--delta", type=_frac, default=None)
    sp.add_argument("--cap-factor", type=int, default=10)
    sp.set_defaults(func=cmd_shrink)

    sp = sub.add_parser("translates", parents=[common], help="approximate A +_delta B by A + X")
    pair(sp)
    sp.add_argument("--delta", type=_frac, required=True)
    sp.add_argument("--m", type=int, default=4)
    sp.set_defaults(func=cmd_translates)

    sp = sub.add_parser("recover", parents=[common], help="recover parallel Bohr structure")
    pair(sp)
    sp.add_argument("--delta", type=_frac, default=None, help="threshold (default: chosen from --rho)")
    sp.add_argument("--rho", type=float, default=0.0, help="expected noise fraction, used to pick delta")
    sp.add_argument("--eps", type=_frac, default=None)
    sp.add_argument("--tolerance", type=_frac, default=None)
    sp.add_argument("--window", type=int, default=None)
    sp.add_argument("--mmax", type=int, default=16)
    sp.add_argument("--kcheck", type=int, default=8)
    sp.add_argument("--dump-spectrum", action="store_true")
    sp.add_argument("--dump-density", action="store_true")
    sp.set_defaults(func=cmd_recover)

    sp = sub.add_parser("run", parents=[common], help="run an experiment from a JSON config")
    sp.add_argument("config")
    sp.set_defaults(func=cmd_run)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    args.seed_given = args.seed is not None
    if args.seed is None:
        args.seed = 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConnectednessWarning)
            return args.func(args)
    except (ConfigError, FormatError, GroupMismatchError, EmptySetError, NotCriticalError, OSError) as e:
        print(f"kneserkit: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as e:
        print(f"kneserkit: invalid input: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
