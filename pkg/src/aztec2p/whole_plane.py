"""The translation-invariant inverse on the infinite two-periodic lattice.

Two independent evaluations are provided.  ``kinv_torus`` applies the
periodic trapezoid rule to the double integral over the unit torus.
``kinv_whole_plane`` folds a pair onto the (w0, b1) class with the
eight-way symmetry, then integrates along the real cut [z1, z2] with
Gauss-Jacobi style weights at both square-root endpoints.

The near-uniform coefficients s0, s1, s2 and c0, c1, c2 are the a -> 1
expansion data of these values; ``elliptic_validation`` checks the
incomplete elliptic integral estimate used to derive them.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .lattice import ParityError, lattice_coords, vertex_eps

R_PLUS = -3.0 + 2.0 * math.sqrt(2.0)
R_MINUS = -3.0 - 2.0 * math.sqrt(2.0)
QUAD_EPSABS = 1e-13
QUAD_EPSREL = 1e-12
QUAD_LIMIT = 400
QUAD_ACCEPT = 1e-9


class OutOfDomainError(ValueError):
    pass


class QuadratureError(ArithmeticError):
    pass


def _quad(f, lo, hi, **kw):
    # QUADPACK flags roundoff when the tight tolerance is out of reach; the
    # returned error estimate is checked against a looser bound instead
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(f, lo, hi, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT, **kw)
    if not np.isfinite(val) or err > QUAD_ACCEPT * max(1.0, abs(val)):
        raise QuadratureError(f"quadrature on [{lo}, {hi}] returned {val} +- {err}")
    return val, err


# ---------------------------------------------------------------------------
# torus route


def offsets(x, y):
    """(eps1, eps2, u, v) with x in W_eps1 and y = b + 2u e1 + 2v e2.

    b is the B_eps2 vertex in the fundamental domain of x.
    """
    e1, e2 = vertex_eps(x), vertex_eps(y)
    w0 = x if e1 == 0 else (x[0], x[1] - 2)
    b = (w0[0] + 1, w0[1] + 1) if e2 == 1 else (w0[0] - 1, w0[1] + 1)
    p, q = lattice_coords(b, y)
    if p % 2 or q % 2:
        raise ParityError(f"{x}, {y} is not a white/black pair")
    return e1, e2, p // 2, q // 2


def char_poly(z, w, a):
    """P_a(z, w), the determinant of the 2x2 symbol."""
    return -2.0 - 2.0 * a * a - a / w - a * w - a / z - a * z


def symbol_inverse_entry(e1, e2, z, w, a):
    """Entry (e1, e2) of the inverse 2x2 symbol."""
    num = {
        (0, 0): 1j * (a + w),
        (0, 1): -(a + z),
        (1, 0): -(a + 1.0 / z),
        (1, 1): 1j * (a + 1.0 / w),
    }[(e1, e2)]
    return num / char_poly(z, w, a)


def _torus_mean(e1, e2, u, v, a, N):
    th = 2 * np.pi * (np.arange(N) + 0.5) / N
    z = np.exp(1j * th)[:, None]
    w = np.exp(1j * th)[None, :]
    # phases from the half-node offset cancel in the mean of z^u w^v f
    return complex(np.mean(symbol_inverse_entry(e1, e2, z, w, a) * z**u * w**v))


def kinv_torus(x, y, a, tol=1e-13, n_start=64, n_max=2**13):
    """Whole-plane inverse by the trapezoid rule on the unit torus.

    The integrand is analytic on an annulus of width set by the nearest
    zero of P_a, so the node count doubles until two passes agree.
    """
    if not 0.0 < a < 1.0:
        raise OutOfDomainError("the torus integral needs 0 < a < 1")
    e1, e2, u, v = offsets(x, y)
    N = n_start
    prev = _torus_mean(e1, e2, u, v, a, N)
    while N < n_max:
        N *= 2
        cur = _torus_mean(e1, e2, u, v, a, N)
        if abs(cur - prev) <= tol:
            return cur
        prev = cur
    raise QuadratureError(f"torus trapezoid not converged at N = {n_max}")


# ---------------------------------------------------------------------------
# real-integral route


def cut_endpoints(a):
    """(z1, z2): the branch cut of the single-contour integrand in [-1, 0]."""
    s = a + 1.0 / a
    z1 = -(s - 1.0) + math.sqrt((s - 1.0) ** 2 - 1.0)
    z2 = -(s + 1.0) + math.sqrt((s + 1.0) ** 2 - 1.0)
    return z1, z2


def quartic(a, z):
    """4z^2 - (2(a + 1/a) z + z^2 + 1)^2, positive on (z1, z2)."""
    A = 2.0 * (a + 1.0 / a) * z + z * z + 1.0
    return 4.0 * z * z - A * A


def _quartic_cofactor(a, z):
    """quartic(a, z) / ((z - z1)(z2 - z)), smooth and positive on [z1, z2]."""
    z1, z2 = cut_endpoints(a)
    return (z - 1.0 / z1) * (z - 1.0 / z2)


def theta_a(a, z):
    """theta_a(z), of unit modulus on [z1, z2]."""
    A = 2.0 * (a + 1.0 / a) * z + z * z + 1.0
    q = np.maximum(quartic(a, z), 0.0)
    return (1j * np.sqrt(q) - A) / (2.0 * z)


def _cos_theta(a, z):
    """Re theta_a(z) = -(2(a+1/a)z + z^2 + 1)/(2z), clipped to [-1, 1]."""
    A = 2.0 * (a + 1.0 / a) * z + z * z + 1.0
    return np.clip(-A / (2.0 * z), -1.0, 1.0)


def g_uv(a, z, u, v):
    """g^{(u,v)}(a, z) = z^u (theta^v + theta^-v)/2 = z^u cos(v arg theta)."""
    return z**u * np.cos(abs(v) * np.arccos(_cos_theta(a, z)))


@dataclass(frozen=True)
class CanonicalPair:
    """How a white/black pair folds onto K11(u, v) = K(w0, b1 + 2u e1 + 2v e2)."""

    u: int
    v: int
    factor: complex
    branch: str  # "u+v>=0" or "u+v<0"


def canonicalize(x, y):
    e1, e2, p, q = offsets(x, y)
    if (e1, e2) == (0, 1):
        u, v, f = p, abs(q), 1.0 + 0j
    elif (e1, e2) == (1, 0):
        u, v, f = -p, abs(q), 1.0 + 0j
    elif (e1, e2) == (0, 0):
        u, v, f = q, abs(p), -1j
    else:
        u, v, f = -q, abs(p), -1j
    return CanonicalPair(u, v, f, "u+v>=0" if u + v >= 0 else "u+v<0")


def k11_real(a, u, v):
    """K11(u, v) for v >= 0 from the real integral over the cut."""
    if v < 0:
        raise OutOfDomainError("canonical form needs v >= 0")
    if not 0.0 < a < 1.0:
        raise OutOfDomainError("the real-integral form needs 0 < a < 1")
    z1, z2 = cut_endpoints(a)

    if u + v >= 0:
        def num(z):
            return (a + z) * z**u
    else:
        def num(z):
            return (a + 1.0 / z) * z ** (-u)

    def f(z):
        return num(z) * 2.0 * np.cos(v * np.arccos(_cos_theta(a, z))) / np.sqrt(_quartic_cofactor(a, z))

    # the quartic vanishes like a square root at both ends of the cut
    val, _ = _quad(f, z1, z2, weight="alg", wvar=(-0.5, -0.5))
    return val / (2.0 * math.pi * a)


def kinv_whole_plane(x, y, a):
    """Whole-plane inverse via the eight-way fold and the real integral."""
    cp = canonicalize(x, y)
    return cp.factor * k11_real(a, cp.u, cp.v)


def k11_origin_elliptic(a):
    """K11(0, 0) through the complete elliptic integral of modulus 2c."""
    c = a / (a * a + 1.0)
    return (0.25 + (a - 1.0 / a) / (2.0 * math.pi * (a + 1.0 / a)) * special.ellipk(4.0 * c * c)) / a


def k11_origin_expansion(h):
    """Two-term a -> 1 expansion of a K11(0, 0) with a = 1 - h."""
    return 0.25 - h / (2.0 * math.pi) * (-math.log(h) + 2.0 * math.log(2.0))


# ---------------------------------------------------------------------------
# S(a, z) and its near-uniform split


def _r_az(a, z):
    """(a + z)/sqrt(quartic) without the (z - z1)^(-1/2) factor."""
    z1, z2 = cut_endpoints(a)
    return (a + z) / np.sqrt((z2 - z) * _quartic_cofactor(a, z))


def S_az(a, z):
    """int_{z1}^{z} (a + xi)/sqrt(quartic(a, xi)) dxi for z in [z1, z2]."""
    z1, z2 = cut_endpoints(a)
    if not (z1 <= z <= z2):
        raise OutOfDomainError(f"z = {z} outside [{z1}, {z2}]")
    if z == z1:
        return 0.0
    if z == z2:
        def f(x):
            return (a + x) / np.sqrt(_quartic_cofactor(a, x))
        val, _ = _quad(f, z1, z2, weight="alg", wvar=(-0.5, -0.5))
        return val
    val, _ = _quad(lambda x: _r_az(a, x), z1, z, weight="alg", wvar=(-0.5, 0.0))
    return val


def b_fn(z):
    """b(z) = -log(4 sqrt2 (1+z) / (1 - z + sqrt(-1 - 6z - z^2)))/2."""
    return -0.5 * np.log(4.0 * math.sqrt(2.0) * (1.0 + z) / (1.0 - z + np.sqrt(-1.0 - 6.0 * z - z * z)))


def b0_fn(z):
    """Limit of S(a, z) as a -> 1."""
    rt = np.sqrt(-1.0 - 6.0 * z - z * z)
    return 0.5 * (
        -2.0 * np.arctan((4.0 * math.sqrt(2.0) * z + 3.0 * (1.0 + z) * rt) / ((3.0 + z) * (1.0 + 3.0 * z)))
        + np.arcsin((1.0 + z) ** 2 / (4.0 * z))
        + 2.0 * np.arctan(math.sqrt(2.0))
    )


def S_split(h, z):
    """(S, b0 + h log h / 2 + b h, remainder T) at a = 1 - h."""
    S = S_az(1.0 - h, z)
    approx = b0_fn(z) + 0.5 * h * math.log(h) + b_fn(z) * h
    return S, approx, S - approx


# ---------------------------------------------------------------------------
# a = 1 coefficients


def chi(z):
    """Re theta_1(z) on [-1, -3 + 2 sqrt2]."""
    return np.clip(-(z * z + 4.0 * z + 1.0) / (2.0 * z), -1.0, 1.0)


def k_v(z, v):
    """k^{(v)}(z) = cos(v arg theta_1(z)), a Chebyshev polynomial in chi(z)."""
    return np.cos(abs(v) * np.arccos(chi(z)))


def dk_v(z, v):
    """d k^{(v)}/dz = |v| U_{|v|-1}(chi) chi'(z)."""
    v = abs(v)
    if v == 0:
        return np.zeros_like(np.asarray(z, dtype=float))
    dchi = -(z * z - 1.0) / (2.0 * z * z)
    return v * special.eval_chebyu(v - 1, chi(z)) * dchi


def _g1(z, u, v):
    return z**u * k_v(z, v)


def _dg1(z, u, v):
    out = z**u * dk_v(z, v)
    if u:
        out = out + u * z ** (u - 1) * k_v(z, v)
    return out


def _int_r1(f):
    """int_{-1}^{r+} f(z)/sqrt(-1 - 6z - z^2) dz."""
    val, _ = _quad(lambda z: f(z) / np.sqrt(z - R_MINUS), -1.0, R_PLUS, weight="alg", wvar=(0.0, -0.5))
    return val


def _int_b(f):
    """int_{-1}^{r+} f(z) b(z) dz; the log(1+z) part gets a log weight."""
    # b = -log(1+z)/2 + smooth part
    log_part, _ = _quad(lambda z: -0.5 * f(z), -1.0, R_PLUS, weight="alg-loga", wvar=(0.0, 0.0))

    def rest(z):
        return f(z) * (-0.5) * (np.log(4.0 * math.sqrt(2.0)) - np.log(1.0 - z + np.sqrt(max(-1.0 - 6.0 * z - z * z, 0.0))))

    smooth, _ = _quad(rest, -1.0, R_PLUS)
    return log_part + smooth


@lru_cache(maxsize=None)
def s0(u, v):
    uu = u if u >= 0 else -u - 1
    return _int_r1(lambda z: _g1(z, uu, v)) / math.pi


def s1(u, v):
    return (-1) ** ((u + v) % 2) / (2.0 * math.pi)


@lru_cache(maxsize=None)
def s2(u, v):
    """Symmetric form: geometric sum of powers of -z against k^{(v)}."""
    n = abs(u + 1)

    def geom(z):
        return sum((-z) ** i for i in range(n))

    first = _int_r1(lambda z: geom(z) * k_v(z, v)) if n else 0.0
    return (-1) ** (u % 2) / math.pi * (first - math.log(2.0) - _int_b(lambda z: dk_v(z, v)))


@lru_cache(maxsize=None)
def s2_direct(u, v):
    """Case formula in u >= 0 / u < 0, kept as an independent route to s2."""
    if u >= 0:
        return -(R_PLUS**u * math.log(2.0) + _int_b(lambda z: _dg1(z, u, v)) - _int_r1(lambda z: _g1(z, u, v))) / math.pi
    uu = -u - 1
    return (R_PLUS**uu * math.log(2.0) + _int_b(lambda z: _dg1(z, uu, v))) / math.pi


def s_coeffs(u, v):
    return s0(u, v), s1(u, v), s2(u, v)


def _odd_even(p, q):
    if (p + q) % 2 == 0:
        raise ParityError(f"p + q = {p + q} must be odd")
    return (p, q) if p % 2 else (q, p)


@lru_cache(maxsize=None)
def c_coeffs(p, q):
    """(c0, c1, c2) for the lattice vector p e1 + q e2 with p + q odd."""
    p, q = _odd_even(p, q)
    P = (abs(p) - 1) // 2
    v = q // 2
    c0 = _int_r1(lambda z: z**P * k_v(z, v)) / math.pi

    def weight(z):
        return 0.5 * (-z) ** P + sum((-z) ** i for i in range(P))

    inner = _int_r1(lambda z: weight(z) * k_v(z, v)) - math.log(2.0) - _int_b(lambda z: dk_v(z, v))
    c2 = (-1) ** (v % 2) / math.pi * inner
    return c0, 1.0 / (2.0 * math.pi), c2


def c_from_s(p, q):
    """c-coefficients assembled from s-coefficients."""
    p, q = _odd_even(p, q)
    u, v = (p - 1) // 2, q // 2
    sg = (-1) ** (((p - q - 1) // 2) % 2)
    return s0(u, v), sg * s1(u, v), sg * (s2(u, v) - 0.5 * s0(u, v))


def kinv_expansion(x, y, h):
    """c0 (1 + h/2) + zeta (c1 h log h + c2 h), divided by Sigma."""
    from .lattice import sigma, zeta

    p, q = lattice_coords(x, y)
    c0, c1, c2 = c_coeffs(p, q)
    return (c0 * (1.0 + 0.5 * h) + zeta(x, y) * (c1 * h * math.log(h) + c2 * h)) / sigma(x, y)


# ---------------------------------------------------------------------------
# incomplete elliptic integral check


def elliptic_F(lam, k):
    """F(lam, k) = int_0^lam dy / sqrt((1 - k^2 y^2)(1 - y^2)) by quadrature.

    y = sin t removes the endpoint singularity at lam = 1.
    """
    if not (0.0 <= lam <= 1.0) or not (0.0 <= k < 1.0):
        raise OutOfDomainError("need 0 <= lam <= 1 and 0 <= k < 1")
    if lam == 0.0:
        return 0.0
    val, _ = _quad(lambda t: 1.0 / math.sqrt(1.0 - (k * math.sin(t)) ** 2), 0.0, math.asin(lam))
    return val


def lambda_z(h, z):
    a = 1.0 - h
    s = a + 1.0 / a
    arg = 2.0 * z * (s - 1.0) + z * z + 1.0
    if arg < 0:
        raise OutOfDomainError(f"h = {h} too large for z = {z}")
    return math.sqrt(s / 2.0) * math.sqrt(arg) / (1.0 + z)


@dataclass(frozen=True)
class EllipticCheck:
    numeric: float
    asymptotic: float
    carlson: float  # lam log(4/(sqrt(1-lam^2) + sqrt(1-k^2 lam^2)))
    theta_lo: float
    theta_hi: float

    @property
    def theta(self):
        """Relative error of the Carlson estimate, F = carlson + theta F."""
        return (self.numeric - self.carlson) / self.numeric

    @property
    def residual(self):
        return self.numeric - self.asymptotic


def elliptic_validation(h, z):
    if not (-1.0 < z < R_PLUS):
        raise OutOfDomainError(f"z = {z} outside (-1, -3 + 2 sqrt2)")
    a = 1.0 - h
    k = 2.0 * a / (a * a + 1.0)
    lam = lambda_z(h, z)
    if not 0.0 < lam < 1.0:
        raise OutOfDomainError(f"lambda_z = {lam} outside (0, 1)")
    num = elliptic_F(lam, k)
    asym = -math.log(h) + math.log(4.0 * math.sqrt(2.0) * (1.0 + z) / (1.0 - z + math.sqrt(-1.0 - 6.0 * z - z * z)))
    k2l2 = 1.0 - k * k * lam * lam
    carlson = lam * math.log(4.0 / (math.sqrt(1.0 - lam * lam) + math.sqrt(k2l2)))
    top = (2.0 - lam * lam * (1.0 + k * k)) / 4.0
    lo = top * math.log(k2l2) / math.log(k2l2 / 16.0)
    return EllipticCheck(num, asym, carlson, lo, top)
