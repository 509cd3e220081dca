#!/usr/bin/env python3
"""Regression rate experiment: risk versus sample size on a curve target.

Trains networks along the theoretical architecture schedule, records per-run
losses and Monte Carlo risks to CSV, and prints the fitted rate slope.
"""

import argparse
import json

from relukit.ermlab import RegressionConfig, rate_experiment
from relukit.targets import sine_curve_target


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="erm_rates.csv")
    ap.add_argument("--summary", default="erm_rates.json")
    ap.add_argument("--sigma", type=float, default=0.1)
    ap.add_argument("--s", type=float, default=1.0)
    ap.add_argument("--n-grid", default="128,256,512,1024,2048,4096")
    ap.add_argument("--trials", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cfg = RegressionConfig(
        target=sine_curve_target(s=args.s),
        d=1,
        sigma=args.sigma,
        n_grid=tuple(int(t) for t in args.n_grid.split(",")),
        trials=args.trials,
        seed=args.seed,
    )
    rep = rate_experiment(cfg, csv_path=args.out)
    with open(args.summary, "w") as fh:
        json.dump(rep.to_json(), fh, indent=2, sort_keys=True)
    for n, risk in zip(rep.n_grid, rep.mean_risk):
        print(f"n={n}: mean risk {risk:.3e}")
    print(f"slope {rep.slope:.3f}, theory {rep.exponent:.3f}, "
          f"band [{rep.band[0]:.3f}, {rep.band[1]:.3f}], "
          f"{'PASS' if rep.passed() else 'FAIL'}")
    print(f"suboptimal training runs: {rep.suboptimal_runs}/{len(rep.rows)}")
    print(f"wrote {args.out} and {args.summary}")


if __name__ == "__main__":
    main()
