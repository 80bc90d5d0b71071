#!/usr/bin/env python3
"""Fit the coupling margin constant c from observed maximum drifts."""

import argparse

from rggcoupling.experiments import calibrate_margin_c


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=400)
    ap.add_argument("--p", type=float, default=0.05)
    ap.add_argument("--d-list", default="2048,8192")
    ap.add_argument("--trials", type=int, default=10, help="runs per dimension")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    d_list = [int(x) for x in args.d_list.split(",")]
    c = calibrate_margin_c(args.seed, args.n, args.p, d_list, args.trials, args.workers)
    print(f"margin_c={c!r}")


if __name__ == "__main__":
    main()
