"""Walk through the multiplicity path on an interval seen through a 3-fold character.

An interval C of measure about 0.05 in Z/6001 is pushed forward under xi = 3.
The image density sits near 1/3 on three arcs, so the top level estimates
1/m with m = 3; dividing the frequency by 3 gives back xi' = 1, under which C
is a single arc again.

    python3 scripts/multiplicity_demo.py --density results/multiplicity_density.csv
"""

from __future__ import annotations

import argparse
import json

from kneserkit.group import Character, GroupSet, bohr, make_group
from kneserkit.inverse import (
    default_window,
    estimate_multiplicity,
    estimate_sup,
    fit_arc,
    multiplicity_scores,
    pushforward,
    quotient_character,
)
from kneserkit.io import write_csv


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=6001)
    ap.add_argument("--measure", type=float, default=0.05)
    ap.add_argument("--freq", type=int, default=3)
    ap.add_argument("--window", type=int, default=None)
    ap.add_argument("--density", default=None, help="optional CSV path for the smoothed density")
    args = ap.parse_args()

    g = make_group([args.n])
    c = GroupSet.interval(g, 0, round(args.measure * args.n))
    chi = Character(g, (args.freq,))
    window = default_window(chi.order) if args.window is None else args.window
    f = pushforward(c, chi, window)
    tau = estimate_sup(f)
    scores = multiplicity_scores(f, 16)
    m = estimate_multiplicity(f, tau)
    q = quotient_character(chi, m)
    fit = fit_arc(pushforward(c, q, 0), c.measure, 1)
    recovered = bohr(g, q.freq, fit.arc.start, fit.arc.length)
    report = {
        "n": args.n,
        "size": c.cardinality,
        "freq": args.freq,
        "window": window,
        "tau": str(tau),
        "tau_float": float(tau),
        "round_inv_tau": round(1 / tau),
        "scores": {k: float(v) for k, v in sorted(scores.items())[:6]},
        "m": m,
        "quotient_freq": list(q.freq),
        "arc": {"start": fit.arc.start, "length": fit.arc.length},
        "symm_diff": str(recovered.symm_diff_measure(c)),
    }
    print(json.dumps(report, indent=2))
    if args.density:
        write_csv(("alpha", "density"), ((i, float(v)) for i, v in enumerate(f.as_float())), args.density)


if __name__ == "__main__":
    main()
