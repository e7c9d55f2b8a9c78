#!/usr/bin/env python3
"""Grid-search calibration of the correlation weight constants.

The correlation condition needs a weight tau with bounded moments that
dominates every shifted-product average of the majorant.  Theory guarantees
such constants exist but not their values, so this script searches the
(c_tau, a_tau) grid for the smallest pair that keeps the max ratio of
left side to bound at or below 1 on a held-out tuple set, and reports the
moment cost of each candidate.

Usage: python scripts/calibrate_tau.py [--n 10007] [--m 2] [--tuples 200]
"""

import argparse
import sys

import numpy as np

sys.path.insert(0, "src")

from znkit import MajorantParams, build_majorant, verify_correlation
from znkit.core import substream


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--n", type=int, default=10007)
    parser.add_argument("--m", type=int, default=2)
    parser.add_argument("--tuples", type=int, default=200)
    parser.add_argument("--w", type=int, default=2)
    parser.add_argument("--theta", type=float, default=0.25)
    parser.add_argument("--epsilon", type=float, default=0.25)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    params = MajorantParams(
        k=3, N=args.n, w=args.w, R_exponent=args.theta, epsilon_k=args.epsilon
    )
    nu = build_majorant(params)

    rng = substream(args.seed, "calibration_tuples")
    tuples = []
    while len(tuples) < args.tuples:
        t = rng.integers(0, args.n, size=args.m).tolist()
        if len(set(t)) == args.m:
            tuples.append(t)

    print(f"majorant N={args.n} w={args.w} theta={args.theta} "
          f"window={params.window}; {len(tuples)} held-out tuples")
    print(f"{'c_tau':>6} {'a_tau':>6} {'max_ratio':>10} {'E(tau)':>10} {'E(tau^4)':>12}")
    best = None
    for c_tau in (1.0, 2.0, 4.0, 8.0):
        for a_tau in (1.0, float(args.m), 2.0 * args.m):
            report = verify_correlation(
                nu, args.m, tuples, q_list=(1, 4), c_tau=c_tau, a_tau=a_tau
            )
            ratio = report.estimate.value
            e1 = report.moments[1.0]
            e4 = report.moments[4.0]
            print(f"{c_tau:6.1f} {a_tau:6.1f} {ratio:10.4f} {e1:10.3g} {e4:12.3g}")
            if ratio <= 1.0 and (best is None or (c_tau, a_tau) < best):
                best = (c_tau, a_tau)
    if best is None:
        print("no candidate on the grid dominates every tuple")
        return 1
    print(f"smallest passing pair: c_tau={best[0]}, a_tau={best[1]} "
          f"(shipped defaults: c_tau=4, a_tau=2m)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
