#!/usr/bin/env python3
"""Fitted constants for the flip-map magnitude bounds and the multi-round schedule.

Prints, per dimension, the smallest C with |psi| <= C log n / d and
|kappa| <= C sqrt(log n / d) on draws from the coordinate law, and the
schedule lengths produced by a given recursion constant.
"""

import argparse
import math

import numpy as np

from rggcoupling.errors import DomainError, NumericalError
from rggcoupling.flip_map import kappa, psi
from rggcoupling.recursive_rep import build_schedule
from rggcoupling.sphere_law import law_for, sample_coordinate
from rggcoupling.streams import stream


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--p", type=float, default=0.1)
    ap.add_argument("--d-list", default="64,256,1024,4096")
    ap.add_argument("--samples", type=int, default=20000)
    ap.add_argument("--schedule-C", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    ln = math.log(args.n)
    print("d,C_psi,C_kappa,schedule_T,schedule_lengths")
    for d in (int(x) for x in args.d_list.split(",")):
        law = law_for(d, args.p)
        x = sample_coordinate(stream(args.seed, "fit-constants", d), law, args.samples)
        c_psi = float(np.max(np.abs(psi(law, x)))) * d / ln
        c_kap = float(np.max(np.abs(kappa(law, x)))) * math.sqrt(d / ln)
        try:
            sched = build_schedule(law, args.n, C=args.schedule_C)
            lengths = " ".join(f"{v:.3g}" for v in sched.lengths)
            T = sched.T
        except (DomainError, NumericalError) as exc:  # schedule may not shrink at small d
            lengths, T = f"n/a ({exc})", 0
        print(f"{d},{c_psi:.4f},{c_kap:.4f},{T},{lengths}")


if __name__ == "__main__":
    main()
