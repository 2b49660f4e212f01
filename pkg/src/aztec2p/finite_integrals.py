"""Exact finite-n double contour integrals for K_a^{-1}.

K_a^{-1} = (whole-plane inverse) - (I00 - I10 - I01 + I11), each I_jk a
double integral over circles |omega1| = r, |omega2| = 1/r with
sqrt(2c) < r < 1.  The integrand factor V is available in two algebraically
equivalent forms (``V_y`` built from the y-rational functions and ``V_z``
built from the simplified z-polynomials); the pair is a consistency check.
"""

from __future__ import annotations

import numpy as np

from .lattice import DiamondSpec, vertex_eps, is_white, is_black, ParityError
from .special_fn import G, t_fn, sqrt_shifted, log_H_tilde

N_START = 64
N_MAX = 2 ** 12  # dense N x N grids; larger N needs several GB


class QuadratureNotConvergedError(ArithmeticError):
    pass


# ---------------------------------------------------------------------------
# rational building blocks


def f_ab(a, b, u, v):
    p = 2 * a * a * u * v + 2 * b * b * u * v
    q = a * b * (u * u - 1) * (v * v - 1)
    return (p - q) * (p + q)


def _y00(g1, g2, a, b, u, v):
    u2, v2 = u * u, v * v
    f = f_ab(a, b, u, v)
    A2, B2 = a * a, b * b
    if (g1, g2) == (0, 0):
        num = (
            2 * a**7 * u2 * v2
            - a**5 * B2 * (1 + u2 * u2 + u2 * v2 - u2 * u2 * v2 + v2 * v2 - u2 * v2 * v2)
            - a**3 * B2 * B2 * (1 + 3 * u2 + 3 * v2 + 2 * u2 * v2 + u2 * u2 * v2 + u2 * v2 * v2 - u2 * u2 * v2 * v2)
            - a * B2**3 * (1 + v2 + u2 + 3 * u2 * v2)
        )
        return num / (4 * (A2 + B2) ** 2 * f)
    if (g1, g2) == (0, 1):
        return a * (B2 + A2 * u2) * (2 * A2 * v2 + B2 * (1 + v2 - u2 + u2 * v2)) / (4 * (A2 + B2) * f)
    if (g1, g2) == (1, 0):
        # mirror image of the (0, 1) entry under u <-> v
        return a * (B2 + A2 * v2) * (2 * A2 * u2 + B2 * (1 + u2 - v2 + u2 * v2)) / (4 * (A2 + B2) * f)
    return a * (2 * A2 * u2 * v2 + B2 * (-1 + v2 + u2 + u2 * v2)) / (4 * f)


def y_fn(g1, g2, e1, e2, a, b, u, v):
    """y^{e1 e2}_{g1 g2}(a, b, u, v)."""
    if (e1, e2) == (0, 0):
        return _y00(g1, g2, a, b, u, v)
    if (e1, e2) == (0, 1):
        return _y00(g1, g2, b, a, u, 1 / v) / (v * v)
    if (e1, e2) == (1, 0):
        return _y00(g1, g2, b, a, 1 / u, v) / (u * u)
    # the divisor that keeps y^{11} consistent with the z-form is u^2 v^2
    return _y00(g1, g2, a, b, 1 / u, 1 / v) / (u * u * v * v)


def _z00(g1, g2, a, u, v):
    u2, v2 = u * u, v * v
    A2 = a * a
    if (g1, g2) == (0, 0):
        poly = (
            2 * A2**3 * u2 * v2
            - A2 * A2 * (1 + u2 * u2 + u2 * v2 - u2 * u2 * v2 + v2 * v2 - u2 * v2 * v2)
            - A2 * (1 + 3 * u2 + 3 * v2 + 2 * u2 * v2 + u2 * u2 * v2 + u2 * v2 * v2 - u2 * u2 * v2 * v2)
            - (1 + v2 + u2 + 3 * u2 * v2)
        )
        return a * poly / (4 * (A2 + 1) ** 2)
    if (g1, g2) == (0, 1):
        return a / (4 * (A2 + 1)) * (1 + A2 * u2) * (2 * A2 * v2 + 1 + v2 - u2 + u2 * v2)
    if (g1, g2) == (1, 0):
        return a / (4 * (A2 + 1)) * (1 + A2 * v2) * (2 * A2 * u2 + 1 + u2 - v2 + u2 * v2)
    return a / 4 * (2 * A2 * u2 * v2 - 1 + v2 + u2 + u2 * v2)


def z_fn(g1, g2, e1, e2, a, u, v):
    """z^{e1 e2}_{g1 g2}(a, u, v)."""
    if (e1, e2) == (0, 0):
        return _z00(g1, g2, a, u, v)
    if (e1, e2) == (0, 1):
        return a**3 * _z00(g1, g2, 1 / a, u, 1 / v)
    if (e1, e2) == (1, 0):
        return a**3 * _z00(g1, g2, 1 / a, 1 / u, v)
    return _z00(g1, g2, a, 1 / u, 1 / v)


# ---------------------------------------------------------------------------
# the V factor


def _prod_sqrt(w, c):
    return sqrt_shifted(w, c) * sqrt_shifted(1 / w, c)


def _Q(g1, g2, e1, e2, a, w1, w2):
    c = a / (a * a + 1)
    iw2 = 1 / w2
    u, v = G(w1, c), G(iw2, c)
    x = u * v / (_prod_sqrt(w1, c) * _prod_sqrt(iw2, c)) * y_fn(g1, g2, e1, e2, a, 1.0, u, v) * (1 - w1 * w1 * iw2 * iw2)
    sgn = (-1) ** (e1 + e2 + e1 * e2 + g1 * (1 + e2) + g2 * (1 + e1))
    return sgn * t_fn(w1, c) ** g1 * t_fn(iw2, c) ** g2 * u**e1 * v**e2 * x


def V_y(j, k, e1, e2, a, w1, w2):
    """V^{jk}_{e1 e2} from its definition, keeping the omega2 -> -omega2 term."""
    w1 = np.asarray(w1, dtype=complex)
    w2 = np.asarray(w2, dtype=complex)
    tot = 0
    for g1 in (0, 1):
        for g2 in (0, 1):
            s = (-1) ** (g2 * j + g1 * k)
            tot = tot + s * (_Q(g1, g2, e1, e2, a, w1, w2) + (-1) ** (e2 + 1) * _Q(g1, g2, e1, e2, a, w1, -w2))
    return 0.5 * tot


def V_z(j, k, e1, e2, a, w1, w2):
    """V^{jk}_{e1 e2} through the z-polynomials."""
    c = a / (a * a + 1)
    w1 = np.asarray(w1, dtype=complex)
    w2 = np.asarray(w2, dtype=complex)
    iw2 = 1 / w2
    u, v = G(w1, c), G(iw2, c)
    pref = (-1) ** (e1 + e2 + e1 * e2) * u ** (3 * e1 - 1) * v ** (3 * e2 - 1)
    pref = pref / (4 * (1 + a * a) ** 2 * _prod_sqrt(w1, c) * _prod_sqrt(w2, c))
    t1, t2 = t_fn(w1, c), t_fn(iw2, c)
    tot = 0
    for g1 in (0, 1):
        for g2 in (0, 1):
            s = (-1) ** (g1 * (1 + e2 + k) + g2 * (1 + e1 + j))
            tot = tot + s * t1**g1 * t2**g2 * z_fn(g1, g2, e1, e2, a, u, v)
    return pref * tot


# ---------------------------------------------------------------------------
# exponential part


def _h_indices(j, k, x, y, n):
    x1, x2 = x
    y1, y2 = y
    top = (x1 + 1, x2) if k == 0 else (x1 + 1, 2 * n - x2)
    bot = (y1, y2 + 1) if j == 0 else (2 * n - y1, y2 + 1)
    return top, bot


def log_h(j, k, x, y, spec: DiamondSpec, w1, w2):
    """log h_{jk}(omega1, omega2) for white x and black y."""
    top, bot = _h_indices(j, k, x, y, spec.n)
    return log_H_tilde(*top, w1, spec.m, spec.c) - log_H_tilde(*bot, w2, spec.m, spec.c)


def h_jk(j, k, x, y, spec: DiamondSpec, w1, w2):
    return np.exp(log_h(j, k, x, y, spec, w1, w2))


# ---------------------------------------------------------------------------
# the double integrals


def default_radius(spec: DiamondSpec):
    return (np.sqrt(2 * spec.c) + 1) / 2


def _check_pair(x, y):
    if not is_white(x):
        raise ParityError(f"{x} is not white")
    if not is_black(y):
        raise ParityError(f"{y} is not black")


def _I_grid(j, k, x, y, spec, N, r, vform):
    e1, e2 = vertex_eps(x), vertex_eps(y)
    th = 2 * np.pi * (np.arange(N) + 0.5) / N
    w1 = (r * np.exp(1j * th))[:, None]
    w2 = (np.exp(1j * th) / r)[None, :]
    V = vform(j, k, e1, e2, spec.a, w1, w2)
    lg = log_h(j, k, x, y, spec, w1, w2)
    integrand = w2 * V * np.exp(lg) / (w2 - w1)
    return 1j ** ((y[0] - x[0]) % 4) * integrand.mean()


def I_jk(j, k, x, y, spec: DiamondSpec, r=None, tol=1e-13, vform=None, n_max=N_MAX):
    """I^{jk}(a, x, y) by the tensor trapezoid rule, doubling N until stable.

    The integrand is analytic on an annulus around both circles so the rule
    converges geometrically; convergence is judged on the change between
    successive N, relative to max(1, |value|).
    """
    _check_pair(x, y)
    r = default_radius(spec) if r is None else r
    vform = vform or V_z
    prev = _I_grid(j, k, x, y, spec, N_START, r, vform)
    N = N_START
    while N < n_max:
        N *= 2
        cur = _I_grid(j, k, x, y, spec, N, r, vform)
        if abs(cur - prev) <= tol * max(1.0, abs(cur)):
            return complex(cur)
        prev = cur
    raise QuadratureNotConvergedError(f"I_{j}{k} not converged at N = {n_max}")


# ---------------------------------------------------------------------------
# separable evaluation
#
# V is a finite sum of products A(omega1) B(omega2): each z-polynomial is a
# Laurent polynomial in u^2 and v^2 of degree at most 2 either way.  With
# 1/(omega2 - omega1) = sum_n omega1^n omega2^(-n-1) on |omega1| < |omega2|,
# every double integral collapses to a sum of products of Laurent
# coefficients, which one FFT per factor delivers.


_LAURENT_M = 8
_LAURENT_DEG = 2


def laurent_table(g1, g2, e1, e2, a):
    """C[p + 2, q + 2] with z^{e1 e2}_{g1 g2}(u, v) = sum C[p, q] u^(2p) v^(2q)."""
    M = _LAURENT_M
    roots = np.exp(2j * np.pi * np.arange(M) / M)
    U = roots[:, None]
    Vv = roots[None, :]
    vals = z_fn(g1, g2, e1, e2, a, np.sqrt(U), np.sqrt(Vv))
    coef = np.fft.fft2(vals) / (M * M)  # coef[p, q] multiplies U^p V^q, indices mod M
    d = _LAURENT_DEG
    idx = [(p % M) for p in range(-d, d + 1)]
    C = coef[np.ix_(idx, idx)]
    return C


class SeparableEvaluator:
    """Fast I^{jk} for one DiamondSpec; nodes double until the result settles."""

    def __init__(self, spec: DiamondSpec, r=None, tol=1e-10, n_start=256, n_max=2 ** 18):
        self.spec = spec
        self.r = default_radius(spec) if r is None else r
        self.tol = tol
        self.n_start = n_start
        self.n_max = n_max
        self._tables = {}
        self.last_error = float("nan")

    def _table(self, e1, e2):
        key = (e1, e2)
        if key not in self._tables:
            self._tables[key] = {
                (g1, g2): laurent_table(g1, g2, e1, e2, self.spec.a) for g1 in (0, 1) for g2 in (0, 1)
            }
        return self._tables[key]

    def _all_jk(self, x, y, N):
        sp_ = self.spec
        a, c, r = sp_.a, sp_.c, self.r
        e1, e2 = vertex_eps(x), vertex_eps(y)
        th = 2 * np.pi * np.arange(N) / N + np.pi / N
        w1 = r * np.exp(1j * th)
        w2 = np.exp(1j * th) / r
        u, v = G(w1, c), G(1 / w2, c)
        t1, t2 = t_fn(w1, c), t_fn(1 / w2, c)
        P1 = (-1) ** (e1 + e2 + e1 * e2) * u ** (3 * e1 - 1) / (4 * (1 + a * a) ** 2 * _prod_sqrt(w1, c))
        P2 = v ** (3 * e2 - 1) / _prod_sqrt(w2, c)
        d = _LAURENT_DEG
        half = N // 2
        damp = r ** (2.0 * np.arange(half))
        # A-side sequences indexed by (k, g1, p), B-side by (j, g2, q)
        Aseq = np.empty((2, 2, 2 * d + 1, half), dtype=complex)
        Bseq = np.empty((2, 2, 2 * d + 1, half), dtype=complex)
        for kk in (0, 1):
            top, _ = _h_indices(0, kk, x, y, sp_.n)
            ft = P1 * np.exp(log_H_tilde(*top, w1, sp_.m, c))
            for g1 in (0, 1):
                for ip, p in enumerate(range(-d, d + 1)):
                    Aseq[kk, g1, ip] = np.fft.ifft(ft * t1**g1 * u ** (2 * p))[:half] * damp
        for jj in (0, 1):
            _, bot = _h_indices(jj, 0, x, y, sp_.n)
            fb = P2 * np.exp(-log_H_tilde(*bot, w2, sp_.m, c))
            for g2 in (0, 1):
                for iq, q in enumerate(range(-d, d + 1)):
                    Bseq[jj, g2, iq] = np.fft.fft(fb * t2**g2 * v ** (2 * q))[:half] / N
        Mx = np.einsum("kgpn,jhqn->kgpjhq", Aseq, Bseq)
        tab = self._table(e1, e2)
        phase = 1j ** ((y[0] - x[0]) % 4)
        out = {}
        for j in (0, 1):
            for k in (0, 1):
                tot = 0j
                for g1 in (0, 1):
                    for g2 in (0, 1):
                        sg = (-1) ** (g1 * (1 + e2 + k) + g2 * (1 + e1 + j))
                        tot += sg * np.sum(tab[(g1, g2)] * Mx[k, g1, :, j, g2, :])
                out[(j, k)] = phase * tot
        return out

    def integrals(self, x, y):
        """Dict (j, k) -> I^{jk}(a, x, y)."""
        _check_pair(x, y)
        N = self.n_start
        prev = self._all_jk(x, y, N)
        while N < self.n_max:
            N *= 2
            cur = self._all_jk(x, y, N)
            err = max(abs(cur[key] - prev[key]) for key in cur)
            if err <= self.tol * max(1.0, max(abs(val) for val in cur.values())):
                self.last_error = float(err)
                return cur
            prev = cur
        raise QuadratureNotConvergedError(f"separable route not converged at N = {self.n_max}")

    def correction(self, x, y):
        I = self.integrals(x, y)
        return I[(0, 0)] - I[(1, 0)] - I[(0, 1)] + I[(1, 1)]


def correction_sum(x, y, spec: DiamondSpec, **kw):
    """I00 - I10 - I01 + I11."""
    return sum(
        (-1) ** (j + k) * I_jk(j, k, x, y, spec, **kw) for j in (0, 1) for k in (0, 1)
    )


def kinv_contour(x, y, spec: DiamondSpec, plane=None, evaluator=None):
    """K_a^{-1}(x, y) = plane(x, y) - (I00 - I10 - I01 + I11).

    ``plane`` defaults to the real-integral whole-plane inverse; the
    correction uses the separable route.
    """
    if plane is None:
        from .whole_plane import kinv_whole_plane

        plane = kinv_whole_plane(x, y, spec.a)
    ev = evaluator or SeparableEvaluator(spec)
    return plane - ev.correction(x, y)
