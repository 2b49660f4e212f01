"""Inverse Kasteleyn entries and one-point correlations for the two-periodic
Aztec diamond, by direct linear algebra, an exact contour-integral formula
and a mesoscopic asymptotic formula.

Set AZTEC2P_THREADS before the first import to cap BLAS/OpenMP threads.
"""

import os

_threads = os.environ.get("AZTEC2P_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

from .lattice import DiamondSpec, EdgeRef  # noqa: E402

__all__ = ["DiamondSpec", "EdgeRef"]
__version__ = "0.1.0"
