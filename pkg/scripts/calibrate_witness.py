#!/usr/bin/env python3
"""Fit the witness-test constants for one (n, p, d) and append them to a calibration CSV."""

import argparse
from pathlib import Path

from rggcoupling.robust_test import (
    calibrate_witness,
    read_calibration,
    write_calibration,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=300)
    ap.add_argument("--p", type=float, default=0.1)
    ap.add_argument("--d", type=int, default=8)
    ap.add_argument("--epsilon", type=float, default=0.05)
    ap.add_argument("--adversary", default="clique")
    ap.add_argument("--samples", type=int, default=50, help="samples per hypothesis")
    ap.add_argument("--iters", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="calibration.csv")
    args = ap.parse_args()

    cal = calibrate_witness(args.seed, args.n, args.p, args.d, args.epsilon, args.adversary,
                            args.samples, args.samples, args.iters, args.workers)
    out = Path(args.out)
    rows = read_calibration(out) if out.exists() else []
    rows = [r for r in rows if (r.n, r.p, r.d) != (cal.n, cal.p, cal.d)] + [cal]
    write_calibration(rows, out)
    print(f"C2={cal.fitted_C2:.4g} C_B={cal.fitted_CB:.4g} C'={cal.fitted_Cprime:.4g} threshold={cal.threshold:.6g}")


if __name__ == "__main__":
    main()
