"""Finite-size ground truth: the Kasteleyn matrix, its determinant and
selected inverse entries by sparse LU, plus a brute-force matching
enumerator used to certify the linear algebra at n = 4."""

from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .lattice import (
    Diamond,
    DiamondSpec,
    EdgeRef,
    classify_vertex,
    VertexClass,
    kasteleyn_entry,
    enumerate_edges,
)

MAX_DIRECT_M = 64


class SingularMatrixError(ArithmeticError):
    pass


class TooLargeError(ValueError):
    pass


def build_kasteleyn(spec: DiamondSpec):
    """Sparse K_a with rows indexed by black and columns by white vertices."""
    d = Diamond(spec)
    rows, cols, vals = [], [], []
    for edge, _ in enumerate_edges(spec):
        rows.append(d.black_index[edge.black])
        cols.append(d.white_index[edge.white])
        vals.append(kasteleyn_entry(edge.white, edge.black, spec.a))
    N = len(d.whites)
    K = sp.csc_matrix((np.asarray(vals, dtype=complex), (rows, cols)), shape=(N, N))
    return K


class KasteleynSystem:
    """K_a for one (m, a) with a reusable LU factorization."""

    def __init__(self, spec: DiamondSpec):
        if spec.m > MAX_DIRECT_M:
            raise TooLargeError(f"direct solves are capped at m <= {MAX_DIRECT_M}")
        self.spec = spec
        self.diamond = Diamond(spec)
        self.K = build_kasteleyn(spec)
        self._lu = None
        self._columns = {}
        self._inv_norm = None

    @property
    def lu(self):
        if self._lu is None:
            try:
                self._lu = spla.splu(self.K, permc_spec="COLAMD")
            except RuntimeError as exc:  # SuperLU reports exact singularity this way
                raise SingularMatrixError(str(exc)) from exc
        return self._lu

    def log_abs_det(self):
        u = self.lu.U.diagonal()
        if np.any(u == 0):
            raise SingularMatrixError("zero pivot")
        return float(np.sum(np.log(np.abs(u))))

    def inverse_norm_estimate(self):
        """Estimate of ||K^-1||_1.  It grows exponentially in m: the frozen
        corners make K badly conditioned, so forward errors of direct solves
        can be far larger than their residuals."""
        if self._inv_norm is None:
            op = spla.LinearOperator(self.K.shape, matvec=self.solve, rmatvec=lambda b: self.lu.solve(
                np.asarray(b, dtype=complex), trans="H"), dtype=complex)
            self._inv_norm = float(spla.onenormest(op))
        return self._inv_norm

    def solve(self, b):
        return self.lu.solve(np.asarray(b, dtype=complex))

    def inverse_column(self, y):
        """Column of K^-1 for black vertex y, indexed by white vertices."""
        j = self.diamond.black_index[tuple(y)]
        col = self._columns.get(j)
        if col is None:
            rhs = np.zeros(self.K.shape[0], dtype=complex)
            rhs[j] = 1.0
            col = self.solve(rhs)
            self._columns[j] = col
        return col

    def inverse_entry(self, x, y):
        return complex(self.inverse_column(y)[self.diamond.white_index[tuple(x)]])

    def rho(self, x, y):
        val = kasteleyn_entry(x, y, self.spec.a) * self.inverse_entry(x, y)
        if abs(val.imag) > 1e-10:
            raise ArithmeticError(f"one-point correlation has imaginary part {val.imag:.3e}")
        return val.real


def partition_function(spec: DiamondSpec, log=False):
    """|det K_a|, or its natural log when log=True."""
    la = KasteleynSystem(spec).log_abs_det()
    return la if log else math.exp(la)


def inverse_entries(spec: DiamondSpec, pairs, system: KasteleynSystem | None = None):
    """K_a^-1(x, y) for each (white, black) pair; one solve per black column."""
    sysm = system or KasteleynSystem(spec)
    for x, y in pairs:
        if classify_vertex(x, spec.n) not in (VertexClass.W0, VertexClass.W1):
            raise ValueError(f"{x} is not a white vertex of the diamond")
        if classify_vertex(y, spec.n) not in (VertexClass.B0, VertexClass.B1):
            raise ValueError(f"{y} is not a black vertex of the diamond")
    return [sysm.inverse_entry(x, y) for x, y in pairs]


def correlation_one_point(spec: DiamondSpec, edge: EdgeRef, system: KasteleynSystem | None = None):
    sysm = system or KasteleynSystem(spec)
    return sysm.rho(edge.white, edge.black)


def enumerate_matchings(spec: DiamondSpec):
    """All perfect matchings of the n = 4 diamond as tuples of edge indices.

    Branches on the lowest-index uncovered white vertex.
    """
    if spec.m != 1:
        raise TooLargeError("enumeration is only provided for m = 1")
    d = Diamond(spec)
    edges = enumerate_edges(spec)
    by_white = [[] for _ in d.whites]
    for k, (e, _) in enumerate(edges):
        by_white[d.white_index[e.white]].append((k, d.black_index[e.black]))
    used = [False] * len(d.blacks)
    chosen = []
    out = []

    def rec(i):
        if i == len(by_white):
            out.append(tuple(chosen))
            return
        for k, b in by_white[i]:
            if not used[b]:
                used[b] = True
                chosen.append(k)
                rec(i + 1)
                chosen.pop()
                used[b] = False

    rec(0)
    return edges, out


def brute_force_Z(spec: DiamondSpec):
    """Weighted sum over all perfect matchings (m = 1 only)."""
    edges, matchings = enumerate_matchings(spec)
    w = np.array([wt for _, wt in edges])
    return float(sum(np.prod(w[list(mt)]) for mt in matchings))
