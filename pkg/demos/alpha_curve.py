"""Print I0/(4 pi) + psi across alpha for each vertex class.

The curve passes through the real/imaginary saddle boundary at
alpha = -1/sqrt(2) without a visible kink.

    python demos/alpha_curve.py [--B 1.0]
"""

import argparse

import numpy as np

from aztec2p.mesoscopic import ALPHA_CRIT, integrals_all

EPS = [(0, 0), (0, 1), (1, 0), (1, 1)]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--B", type=float, default=1.0)
    args = ap.parse_args()
    grid = np.concatenate([np.linspace(-2.5, -0.1, 13), [ALPHA_CRIT]])
    print(f"{'alpha':>9}  regime  " + "  ".join(f"eps={e1}{e2}".rjust(12) for e1, e2 in EPS))
    for alpha in sorted(grid):
        b = integrals_all(float(alpha), args.B)
        regime = "real" if alpha < ALPHA_CRIT else ("crit" if alpha == ALPHA_CRIT else "imag")
        print(f"{alpha:9.4f}  {regime:6}  " + "  ".join(f"{b[e].combined:12.8f}" for e in EPS))


if __name__ == "__main__":
    main()
