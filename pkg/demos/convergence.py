"""Exact edge probability against the two-term asymptotic as m grows.

Exact values come from urban renewal, which stays accurate where the
LU solve of K loses digits.

    python demos/convergence.py [--alpha -0.5] [--B 1.0]
"""

import argparse
import math

from aztec2p.lattice import DiamondSpec
from aztec2p.mesoscopic import edge_at, integrals_I, rho_asymptotic
from aztec2p.sampler import edge_probabilities, edge_probability


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--alpha", type=float, default=-0.5)
    ap.add_argument("--B", type=float, default=1.0)
    ap.add_argument("--m", type=int, nargs="+", default=[4, 9, 16, 36, 64, 100])
    args = ap.parse_args()
    bundle = integrals_I(args.alpha, args.B, 0, 0)
    print(f"{'m':>5} {'rho_exact':>12} {'rho_asym':>12} {'err':>10} {'err*m/log m':>12}")
    for m in args.m:
        spec = DiamondSpec.from_scaling(m, args.B)
        x, y = edge_at(m, args.B, args.alpha, 0, 0, "a")
        exact = edge_probability(spec, x, y, edge_probabilities(spec))
        asym = rho_asymptotic(x, y, m, args.B, args.alpha, bundle)
        err = abs(exact - asym)
        print(f"{m:5d} {exact:12.8f} {asym:12.8f} {err:10.2e} {err * m / math.log(m):12.4f}")


if __name__ == "__main__":
    main()
