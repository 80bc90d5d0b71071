#!/usr/bin/env python3
"""Fragile and disagreement fractions of the coupling against dimension."""

import argparse
from pathlib import Path

from rggcoupling.experiments import run_scaling


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=300)
    ap.add_argument("--p", type=float, default=0.05)
    ap.add_argument("--d-list", default="1024,4096,16384")
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--margin-c", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="scaling.csv")
    args = ap.parse_args()

    d_list = [int(x) for x in args.d_list.split(",")]
    table = run_scaling(args.seed, args.n, args.p, d_list, args.trials, args.margin_c, args.workers)
    Path(args.out).write_text(table.to_csv())
    print(table.to_csv(), end="")
    print(f"slope={table.slope:.4f}")


if __name__ == "__main__":
    main()
