#!/usr/bin/env python3
"""Sweep channel loss and tabulate the closed-form operating curve to CSV.

For each loss value the balance threshold is solved, then the selection
yield, post-selected error, information advantage, and a secure-fraction
estimate per sifted event are computed by quadrature — no Monte Carlo.
The secure-fraction model matches `cvqkd scan` and the pipeline's key
arithmetic: yield x (1 - f_ec x h(post_err)) x advantage, floored at zero.

Example:
    python3 scripts/loss_scan.py --steps 41 --out loss_scan.csv
"""

from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from cvqkd.postselect import (
    InfoParams,
    binary_mutual_info,
    eve_info,
    selection_stats,
    solve_threshold,
)


def main() -> int:
    parser = argparse.ArgumentParser(
        description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter
    )
    parser.add_argument("--alpha", type=float, default=0.6, help="modulation amplitude")
    parser.add_argument("--excess-noise", type=float, default=0.0)
    parser.add_argument("--loss-min", type=float, default=0.0)
    parser.add_argument("--loss-max", type=float, default=0.8)
    parser.add_argument("--steps", type=int, default=33)
    parser.add_argument(
        "--f-ec", type=float, default=1.2,
        help="assumed correction disclosure as a multiple of the Shannon limit",
    )
    parser.add_argument("--out", default="-", help="output CSV path, '-' for stdout")
    args = parser.parse_args()

    if args.steps < 1:
        parser.error("--steps must be >= 1")
    if not 0.0 <= args.loss_min <= args.loss_max < 1.0:
        parser.error("need 0 <= loss-min <= loss-max < 1")

    handle = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    try:
        writer = csv.writer(handle)
        writer.writerow(
            ["loss", "eta", "threshold", "threshold_over_alpha", "yield",
             "post_error", "tap_info", "advantage", "secure_fraction"]
        )
        for loss in np.linspace(args.loss_min, args.loss_max, args.steps):
            eta = 1.0 - float(loss)
            info = InfoParams(
                alpha=args.alpha, eta=eta, sigma2=0.5 + args.excess_noise
            )
            threshold = solve_threshold(info)
            stats = selection_stats(info, threshold)
            entropy_cost = 1.0 - binary_mutual_info(stats.post_error)
            secure = (
                stats.yield_fraction
                * max(0.0, 1.0 - args.f_ec * entropy_cost)
                * max(0.0, stats.advantage)
            )
            writer.writerow(
                [f"{loss:.4f}", f"{eta:.4f}", f"{threshold:.6f}",
                 f"{threshold / args.alpha:.6f}", f"{stats.yield_fraction:.6f}",
                 f"{stats.post_error:.6f}", f"{eve_info(info):.6f}",
                 f"{stats.advantage:.6f}", f"{secure:.6f}"]
            )
    finally:
        if handle is not sys.stdout:
            handle.close()

    if args.out != "-":
        print(f"wrote {args.steps} rows to {args.out}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
