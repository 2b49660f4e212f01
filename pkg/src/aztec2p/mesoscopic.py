"""Mesoscopic asymptotics: saddle points, descent contours, I0..I4 and psi.

Local variables w, z live near the point i of the finite-size integrals.
With sm(w) = sqrt(1/2 - 2iw) and sp(w) = sqrt(1/2 + 2iw) (principal roots,
cuts on i(-inf, -1/4] and i[1/4, inf)) the two exponents are

    p(w) = -2iw + alpha (sm - sp),     q(w) = -2iw + alpha (sm + sp).

Quadrature rules carry (point, sm, sp, dw) per node, so a node may sit on a
cut with its branch fixed explicitly.  Every contour used for z is the
conjugate reflection of a w contour, and reflection swaps sm and sp.

Two independent routes evaluate the double integrals:

* ``descent``: polylines traced along Im(exponent) = const from the saddles.
  For alpha < -1/sqrt(2) the w contour C0 wraps the upper cut, which is
  parametrized through sigma = sp(w) so the wrap is a straight segment.
  C0 and its reflection cross at +-eta, handled by geometric grading.
* ``separated``: V-shaped contours with vertices at -+i delta, never
  crossing.  In the real regime the (0,0) integral then differs from the
  descent one by the residue term 8 pi I0.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from .lattice import lattice_coords, sigma, vertex_eps, zeta
from .special_fn import sqrt_half

ALPHA_CRIT = -1.0 / math.sqrt(2.0)
CRIT_TOL = 1e-14
LOG_FLOOR = -45.0  # e^-45 ~ 3e-20 relative to the saddle value
GAUSS_ORDER = 10
SPACING = 0.03


class NoRootError(ArithmeticError):
    pass


class TraceDivergedError(ArithmeticError):
    pass


class CutHitNotFoundError(ArithmeticError):
    pass


class NotConvergedError(ArithmeticError):
    pass


class NearCrossingSingularError(ArithmeticError):
    pass


# ---------------------------------------------------------------------------
# exponents


def _roots(w):
    return sqrt_half(w, -1), sqrt_half(w, +1)


def p_alpha(w, alpha):
    sm, sp = _roots(w)
    return -2j * np.asarray(w) + alpha * (sm - sp)


def q_alpha(w, alpha):
    sm, sp = _roots(w)
    return -2j * np.asarray(w) + alpha * (sm + sp)


def dp_alpha(w, alpha):
    sm, sp = _roots(w)
    return -2j - 1j * alpha * (1.0 / sm + 1.0 / sp)


def dq_alpha(w, alpha):
    sm, sp = _roots(w)
    return -2j - 1j * alpha * (1.0 / sm - 1.0 / sp)


def d2p_alpha(w, alpha):
    sm, sp = _roots(w)
    return alpha * (sm**-3 - sp**-3)


def d2q_alpha(w, alpha):
    sm, sp = _roots(w)
    return alpha * (sm**-3 + sp**-3)


def d3p_alpha(w, alpha):
    sm, sp = _roots(w)
    return 3j * alpha * (sm**-5 + sp**-5)


def psi_plus(w):
    sm, sp = _roots(w)
    return 1.0 / sm + 1.0 / sp


def psi_minus(w):
    sm, sp = _roots(w)
    return 1.0 / sm - 1.0 / sp


# ---------------------------------------------------------------------------
# saddle points


def classify(alpha):
    if alpha >= 0:
        raise ValueError("alpha must be negative")
    if abs(alpha - ALPHA_CRIT) <= CRIT_TOL:
        return "critical"
    return "imag" if alpha > ALPHA_CRIT else "real"


def quartic_roots(alpha):
    """Roots of 256 w^4 - 16(alpha^4 + 2 alpha^2 - 2) w^2 + (1 - 2 alpha^2)."""
    W = np.roots([256.0, -16.0 * (alpha**4 + 2 * alpha**2 - 2), 1.0 - 2.0 * alpha**2])
    r = np.sqrt(W.astype(complex))
    return np.concatenate([r, -r])


def _newton(f, df, w, steps=6):
    for _ in range(steps):
        d = df(w)
        if d == 0:
            break
        step = f(w) / d
        w = w - step
        if abs(step) < 1e-17:
            break
    return w


@dataclass(frozen=True)
class SaddleData:
    alpha: float
    eta: complex
    eta_prime: complex
    regime: str
    residual_eta: float
    residual_eta_prime: float


def _dpsi_plus(w):
    sm, sp = _roots(w)
    return 1j * sm**-3 - 1j * sp**-3


def _dpsi_minus(w):
    sm, sp = _roots(w)
    return 1j * sm**-3 + 1j * sp**-3


def solve_saddles(alpha) -> SaddleData:
    """eta with psi+(eta) = -2/alpha, Re, Im >= 0; eta' in i(0, 1/4) with psi-(eta') = 2/alpha."""
    alpha = float(alpha)
    regime = classify(alpha)
    roots = quartic_roots(alpha)

    def pick(f, ok):
        cands = [r for r in roots if ok(r)]
        if not cands:
            raise NoRootError(f"no admissible root at alpha={alpha}")
        return min(cands, key=lambda r: abs(f(r)))

    tol = 1e-9
    if regime == "critical":
        eta = 0j
    else:
        fe = lambda w: psi_plus(w) + 2.0 / alpha
        want_real = regime == "real"
        eta = pick(fe, lambda r: r.real >= -tol and r.imag >= -tol
                   and (abs(r.imag) < 1e-6 if want_real else abs(r.real) < 1e-6))
        # the root lies on an axis; polish along it
        eta = complex(eta.real, 0.0) if want_real else complex(0.0, eta.imag)
        eta = _newton(fe, _dpsi_plus, eta)
    fp = lambda w: psi_minus(w) - 2.0 / alpha
    etp = pick(fp, lambda r: abs(r.real) < 1e-6 and 0 < r.imag < 0.25)
    etp = _newton(fp, _dpsi_minus, complex(0.0, etp.imag))
    res_e = abs(psi_plus(eta) + 2.0 / alpha) if regime != "critical" else abs(psi_plus(0j) - 2 * math.sqrt(2))
    return SaddleData(alpha, complex(eta), complex(etp), regime, float(res_e), float(abs(fp(etp))))


def eta_bisection(alpha):
    """Independent eta by bracketing on the relevant axis (used as a test oracle)."""
    regime = classify(alpha)
    if regime == "critical":
        return 0j
    if regime == "real":
        f = lambda x: float(np.real(psi_plus(x))) + 2.0 / alpha
        return complex(optimize.brentq(f, 0.0, 1e6, xtol=1e-16, rtol=1e-15), 0.0)
    f = lambda t: float(np.real(psi_plus(1j * t))) + 2.0 / alpha
    return complex(0.0, optimize.brentq(f, 0.0, 0.25 - 1e-15, xtol=1e-16, rtol=1e-15))


# ---------------------------------------------------------------------------
# quadrature rules on contours


@dataclass
class Rule:
    """Nodes with explicit branch values: pts, sm, sp and the complex weight dw."""

    pts: np.ndarray
    sm: np.ndarray
    sp: np.ndarray
    dw: np.ndarray

    def reflect(self):
        """Conjugate reflection w -> conj(w); orientation by Re is preserved."""
        return Rule(np.conj(self.pts), np.conj(self.sp), np.conj(self.sm), np.conj(self.dw))

    def mirror(self):
        """Reflection w -> -conj(w) with the orientation reversed."""
        return Rule(-np.conj(self.pts), np.conj(self.sm), np.conj(self.sp), np.conj(self.dw))

    def __add__(self, other):
        return Rule(*(np.concatenate([getattr(self, f), getattr(other, f)]) for f in ("pts", "sm", "sp", "dw")))

    def __len__(self):
        return len(self.pts)


def _gauss(order):
    x, wt = np.polynomial.legendre.leggauss(order)
    return (x + 1.0) / 2.0, wt / 2.0


def tip_distance(w):
    """Distance from w to the nearer branch point +-i/4."""
    w = complex(w)
    return min(abs(w - 0.25j), abs(w + 0.25j))


def decimate(nodes, keep=(), spacing=SPACING):
    """Drop vertices so consecutive chords span about spacing * clip(10 d, 0.01, 20),
    d the distance to the branch points.

    Endpoints and ``keep`` indices survive; returns new nodes and the new
    positions of ``keep``.
    """
    nodes = np.asarray(nodes, dtype=complex)
    keep = set(keep)
    out, pos, last = [0], {}, nodes[0]
    for i in range(1, len(nodes)):
        far = abs(nodes[i] - last) > spacing * min(max(10.0 * tip_distance(last), 0.01), 20.0)
        if i in keep or i == len(nodes) - 1 or far or i + 1 in keep:
            out.append(i)
            last = nodes[i]
    for i in keep:
        pos[i] = out.index(i)
    return nodes[out], [pos[i] for i in sorted(keep)]


def _seg_distance(a, b, c):
    t = np.clip(((c - a) * np.conj(b - a)).real / abs(b - a) ** 2, 0.0, 1.0)
    return abs(a + t * (b - a) - c)


def _admissible_pieces(a, b, specials, min_len):
    """Split [a, b] until each piece is no longer than its distance to any special point."""
    out, stack = [], [(0.0, 1.0)]
    L = abs(b - a)
    while stack:
        lo, hi = stack.pop()
        pa, pb = a + lo * (b - a), a + hi * (b - a)
        d = min((_seg_distance(pa, pb, c) for c in specials), default=np.inf)
        if (hi - lo) * L > d and (hi - lo) * L > min_len:
            mid = 0.5 * (lo + hi)
            stack += [(mid, hi), (lo, mid)]
        else:
            out.append((lo, hi))
    return sorted(out)


TIPS = (0.25j, -0.25j)
TIP_SWITCH = 5e-4


def polyline_rule(nodes, order=GAUSS_ORDER, grade=None, spacing=SPACING, min_len=1e-12, side=None):
    """Gauss rule on a polyline.

    ``grade`` lists vertex indices carrying integrable singularities (contour
    crossings).  Panels are bisected until their length is below their
    distance to those vertices and to the branch points.  ``side`` fixes
    the branch for nodes that land on a cut.
    """
    nodes, grade = decimate(nodes, grade or (), spacing)
    specials = [nodes[i] for i in grade] + list(TIPS)
    u, wt = _gauss(order)
    pts, dws = [], []
    for k in range(len(nodes) - 1):
        a, b = nodes[k], nodes[k + 1]
        for lo, hi in _admissible_pieces(a, b, specials, min_len):
            pts.append(a + (b - a) * (lo + (hi - lo) * u))
            dws.append((b - a) * (hi - lo) * wt)
    pts = np.concatenate(pts)
    sm, sp = sqrt_half(pts, -1, side), sqrt_half(pts, +1, side)
    return Rule(pts, np.asarray(sm), np.asarray(sp), np.concatenate(dws))


def wrap_rule(t_star, order=2 * GAUSS_ORDER, panels=4):
    """Around the upper cut from i t* (right side) to i t* (left side).

    With sigma = sp(w) = i tau, tau from tau* to -tau*, the wrap is
    w = i(1/4 + tau^2/2), dw = i tau dtau and sm = sqrt(1 + tau^2).
    """
    ts = math.sqrt(2.0 * t_star - 0.5)
    u, wt = _gauss(order)
    edges = np.linspace(ts, -ts, panels + 1)
    tau = np.concatenate([lo + (hi - lo) * u for lo, hi in zip(edges[:-1], edges[1:])])
    dtau = np.concatenate([(hi - lo) * wt for lo, hi in zip(edges[:-1], edges[1:])])
    pts = 1j * (0.25 + tau**2 / 2.0)
    return Rule(pts, np.sqrt(1.0 + tau**2 + 0j), 1j * tau + 0j, 1j * tau * dtau)


# ---------------------------------------------------------------------------
# contour tracing


def _tangent(dphi, w):
    d = dphi(w)
    return -np.conj(d) / abs(d)


def trace_descent(phi, dphi, start, direction, floor, h0=1e-3, hmax=0.5, stop=None, max_steps=20000):
    """Polyline along Im phi = Im phi(start) leaving ``start`` along ``direction``.

    Stops once Re phi has dropped by ``floor`` below its start value, or when
    ``stop(w_prev, w_new)`` returns True (the offending node is dropped).
    """
    target = complex(phi(start)).imag
    top = complex(phi(start)).real

    def correct(w):
        for _ in range(4):
            d = dphi(w)
            err = complex(phi(w)).imag - target
            w = w - 1j * np.conj(d) / abs(d) * err / abs(d)
            if abs(err) < 1e-14:
                break
        return w

    h0 = min(h0, 0.1 * tip_distance(start))
    w = correct(start + h0 * direction)
    nodes = [complex(start), complex(w)]
    h = h0
    for _ in range(max_steps):
        h = min(h, 0.25 * tip_distance(w))
        k1 = _tangent(dphi, w)
        k2 = _tangent(dphi, w + 0.5 * h * k1)
        k3 = _tangent(dphi, w + 0.5 * h * k2)
        k4 = _tangent(dphi, w + h * k3)
        wn = correct(w + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0)
        turn = abs(np.angle(_tangent(dphi, wn) / k1))
        rising = complex(phi(wn)).real > complex(phi(w)).real
        if (turn > 0.05 or rising) and h > 1e-9:
            h *= 0.5
            continue
        if rising:
            raise TraceDivergedError(f"descent lost near {w}")
        if stop is not None and stop(w, wn):
            return np.array(nodes)
        nodes.append(complex(wn))
        w = wn
        if complex(phi(w)).real - top < floor:
            return np.array(nodes)
        if turn < 0.01:
            h = min(1.5 * h, hmax * (1.0 + abs(w)))
    raise TraceDivergedError(f"no truncation after {max_steps} steps from {start}")


def _cut_hit(alpha, target):
    """t* > 1/4 with Im p(i t*) = target on the left side of the upper cut."""

    def f(t):
        sp = sqrt_half(1j * t, +1, side="left")
        return float(np.imag(-2j * 1j * t + alpha * (math.sqrt(0.5 + 2 * t) - sp))) - target

    hi = 1.0
    while f(hi) * f(0.25) > 0:
        hi *= 2.0
        if hi > 1e8:
            raise CutHitNotFoundError(f"no cut hit for alpha={alpha}")
    return optimize.brentq(f, 0.25, hi, xtol=1e-15)


@dataclass
class Contour:
    """A contour as polylines plus an optional wrap around the upper cut.

    ``pieces`` are traversed in order, each a (nodes, grade, side) triple;
    the wrap, when present, sits between the first and second pieces.
    """

    pieces: list
    wrap: float | None = None
    reflected: bool = False

    def rule(self, order=GAUSS_ORDER, spacing=SPACING):
        rules = [polyline_rule(nd, order, grade=g, spacing=spacing, side=sd) for nd, g, sd in self.pieces]
        if self.wrap is not None:
            rules.insert(1, wrap_rule(self.wrap, order=2 * order))
        out = rules[0]
        for r in rules[1:]:
            out = out + r
        return out.reflect() if self.reflected else out

    def nodes(self):
        nd = np.concatenate([p[0] for p in self.pieces])
        return np.conj(nd) if self.reflected else nd

    def reflect(self):
        return Contour(self.pieces, self.wrap, not self.reflected)


@dataclass
class ContourSet:
    C0: Contour
    C0p: Contour
    C1: Contour
    C1p: Contour
    truncation: float
    saddle: SaddleData
    t_star: float | None = None


def _two_sided(phi, dphi, s, d, floor, grade_saddle):
    a = trace_descent(phi, dphi, s, d, floor)
    b = trace_descent(phi, dphi, s, -d, floor)
    # orient by decreasing real part
    if a[-1].real < b[-1].real:
        a, b = b, a
    nodes = np.concatenate([a[::-1], b[1:]])
    return nodes, ([len(a) - 1] if grade_saddle else [])


def trace_contours(saddle: SaddleData, B=1.0, log_floor=LOG_FLOOR) -> ContourSet:
    alpha = saddle.alpha
    floor = log_floor / B**2
    P = (lambda w: p_alpha(w, alpha)), (lambda w: dp_alpha(w, alpha))
    Q = (lambda w: q_alpha(w, alpha)), (lambda w: dq_alpha(w, alpha))
    t_star = None

    if saddle.regime == "imag":
        nodes, g = _two_sided(*P, -saddle.eta, 1.0 + 0j, floor, False)
        C0 = Contour([(nodes, g, None)])
    elif saddle.regime == "critical":
        a = trace_descent(*P, 0j, np.exp(-1j * math.pi / 6), floor)
        b = trace_descent(*P, 0j, np.exp(-5j * math.pi / 6), floor)
        C0 = Contour([(np.concatenate([a[::-1], b[1:]]), [len(a) - 1], None)])
    else:
        s = -saddle.eta
        target = complex(p_alpha(s, alpha)).imag
        t_star = _cut_hit(alpha, target)
        # the tangent field is singular at i/4; finish with a chord to i t*
        near = 0.02 * min(1.0, t_star - 0.25 + 0.1)
        up = trace_descent(*P, s, np.exp(1j * math.pi / 4), floor,
                           stop=lambda w0, w1: w1.real >= -1e-9 or abs(w1 - 1j * t_star) < near
                           or abs(w1 - 0.25j) < near)
        if abs(up[-1] - 1j * t_star) > 0.5 + t_star:
            raise CutHitNotFoundError(f"ascending branch missed the cut at alpha={alpha}")
        down = trace_descent(*P, s, np.exp(-3j * math.pi / 4), floor)
        left = np.concatenate([[1j * t_star], up[::-1], down[1:]])
        right = (-np.conj(left))[::-1]
        nr = len(right)
        C0 = Contour([(right, [nr - 1 - len(up)], "right"), (left, [len(up)], "left")], wrap=t_star)

    nodes, g = _two_sided(*Q, -saddle.eta_prime, 1.0 + 0j, floor, False)
    C1 = Contour([(nodes, g, None)])
    return ContourSet(C0, C0.reflect(), C1, C1.reflect(), floor, saddle, t_star)


def v_contour(delta, B=1.0, alpha=-1.0, opening=math.pi / 3, log_floor=LOG_FLOOR):
    """V with vertex -i delta and rays at -pi/2 +- opening, right ray first."""
    v = -1j * delta
    dirs = [np.exp(1j * (-math.pi / 2 + opening)), np.exp(1j * (-math.pi / 2 - opening))]
    def level(w):
        return max(complex(p_alpha(w, alpha)).real, complex(q_alpha(w, alpha)).real)

    top = level(v)
    L = 1.0
    while any(B**2 * (level(v + L * d) - top) > log_floor for d in dirs):
        L *= 1.5
    # dense vertices; polyline_rule thins them to the requested spacing
    ts = [0.0]
    while ts[-1] < L:
        ts.append(ts[-1] + 0.01 * math.sqrt(1.0 + ts[-1]))
    ts = np.array(ts)
    right = (v + ts * dirs[0])[::-1]
    left = v + ts * dirs[1]
    return Contour([(np.concatenate([right, left[1:]]), [], None)])


# ---------------------------------------------------------------------------
# kernels


def A_from_roots(w, smw, spw, z, smz, spz, j, k, e1, e2):
    s12 = (-1) ** (e1 + e2)
    inner = (
        2j * (w - z)
        + s12 * (smw + (-1) ** j * smz) * ((-1) ** k * spw + spz)
        + ((-1) ** e1 * smw + (-1) ** (e2 + k) * spw + (-1) ** e2 * spz + (-1) ** (e1 + j) * smz)
        * (smw * spz + (-1) ** (j + k) * spw * smz)
    )
    return -s12 * inner / (smw * spw * smz * spz)


def A_jk(w, z, j, k, e1, e2):
    smw, spw = _roots(w)
    smz, spz = _roots(z)
    return A_from_roots(np.asarray(w), smw, spw, np.asarray(z), smz, spz, j, k, e1, e2)


def A00_diag(w, e1, e2):
    sm, sp = _roots(w)
    return -4.0 * (1 + (-1) ** e2 * sm + (-1) ** e1 * sp) / (sm * sp)


def g_from_roots(w, smw, spw, z, smz, spz, j, k, alpha, B):
    fw = smw + spw if k else smw - spw
    fz = smz + spz if j else -(smz - spz)
    return B**2 * (-2j * (w - z) + alpha * (fw + fz))


def g_jk(w, z, j, k, alpha, B):
    smw, spw = _roots(w)
    smz, spz = _roots(z)
    return g_from_roots(np.asarray(w), smw, spw, np.asarray(z), smz, spz, j, k, alpha, B)


def double_integral(rw: Rule, rz: Rule, j, k, e1, e2, alpha, B, guard=1e-15, block=256):
    """Sum over node pairs of dw dz A e^g / (i (z - w))."""
    total = 0j
    Z = rz.pts[None, :]
    for lo in range(0, len(rw), block):
        sl = slice(lo, lo + block)
        W = rw.pts[sl, None]
        diff = Z - W
        if np.min(np.abs(diff)) < guard:
            raise NearCrossingSingularError("w and z nodes collide")
        args = (W, rw.sm[sl, None], rw.sp[sl, None], Z, rz.sm[None, :], rz.sp[None, :])
        F = A_from_roots(*args, j, k, e1, e2) * np.exp(g_from_roots(*args, j, k, alpha, B)) / (1j * diff)
        total += rw.dw[sl] @ F @ rz.dw
    return complex(total)


def _factor_terms(rw: Rule, rz: Rule, j, k, e1, e2):
    """A * sm sp (w) * sm sp (z) / (-(-1)^(e1+e2)), minus its 2i(w - z) part,
    written as sum_t W[:, t] Z[:, t]."""
    smw, spw, smz, spz = rw.sm, rw.sp, rz.sm, rz.sp
    s12, sj, sk, sjk = (-1) ** (e1 + e2), (-1) ** j, (-1) ** k, (-1) ** (j + k)
    a1, a2, a3, a4 = (-1) ** e1, (-1) ** (e2 + k), (-1) ** e2, (-1) ** (e1 + j)
    one_w, one_z = np.ones_like(smw), np.ones_like(smz)
    pairs = [
        (s12 * sk * smw * spw, one_z), (s12 * smw, spz), (s12 * sj * sk * spw, smz), (s12 * sj * one_w, smz * spz),
        (a1 * smw**2, spz), (a1 * sjk * smw * spw, smz), (a2 * spw * smw, spz), (a2 * sjk * spw**2, smz),
        (a3 * smw, spz**2), (a3 * sjk * spw, smz * spz), (a4 * smw, smz * spz), (a4 * sjk * spw, smz**2),
    ]
    return np.stack([p[0] for p in pairs], axis=1), np.stack([p[1] for p in pairs], axis=1)


class PairEvaluator:
    """All (eps1, eps2) for one contour pair, sharing the Cauchy matrix 1/(i(z - w))."""

    def __init__(self, rw: Rule, rz: Rule, guard=1e-15):
        diff = rz.pts[None, :] - rw.pts[:, None]
        if np.min(np.abs(diff)) < guard:
            raise NearCrossingSingularError("w and z nodes collide")
        self.rw, self.rz = rw, rz
        self.C = 1.0 / (1j * diff)

    def value(self, j, k, e1, e2, alpha, B):
        rw, rz = self.rw, self.rz
        fw = rw.sm + rw.sp if k else rw.sm - rw.sp
        fz = rz.sm + rz.sp if j else rz.sp - rz.sm
        u = rw.dw * np.exp(B**2 * (-2j * rw.pts + alpha * fw)) / (rw.sm * rw.sp)
        v = rz.dw * np.exp(B**2 * (2j * rz.pts + alpha * fz)) / (rz.sm * rz.sp)
        Wf, Zf = _factor_terms(rw, rz, j, k, e1, e2)
        cross = np.sum((u[:, None] * Wf) * (self.C @ (v[:, None] * Zf)))
        return complex(-((-1) ** (e1 + e2)) * (-2.0 * u.sum() * v.sum() + cross))


def I0_integral(alpha, e1, e2, eta=None):
    """Real-segment integral of (1 + (-1)^e2 sm + (-1)^e1 sp)/(sm sp); zero unless alpha < -1/sqrt(2)."""
    if classify(alpha) != "real":
        return 0.0, 0.0
    if eta is None:
        eta = solve_saddles(alpha).eta.real

    def f(x, part):
        sm, sp = _roots(x)
        v = (1 + (-1) ** e2 * sm + (-1) ** e1 * sp) / (sm * sp)
        return v.real if part == 0 else v.imag

    re, err = integrate.quad(f, -eta, eta, args=(0,), epsabs=1e-14, epsrel=1e-13, limit=200)
    # odd integrand, so QUADPACK flags roundoff while resolving zero
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        im, _ = integrate.quad(f, -eta, eta, args=(1,), epsabs=1e-14, epsrel=1e-13, limit=200)
    return complex(re, im), err


# ---------------------------------------------------------------------------
# I0..I4 and psi

_PAIRS = {1: (0, 0), 2: (1, 0), 3: (0, 1), 4: (1, 1)}  # I_n -> (j, k): j for z, k for w


@dataclass
class IntegralBundle:
    alpha: float
    B: float
    eps: tuple
    I0: float
    I1: float
    I2: float
    I3: float
    I4: float
    psi: float
    errors: dict = field(default_factory=dict)
    imag: dict = field(default_factory=dict)
    route: str = "descent"

    @property
    def combined(self):
        return self.I0 / (4 * math.pi) + self.psi


def _contours_for(route, saddle, B, log_floor):
    if route == "descent":
        cs = trace_contours(saddle, B, log_floor)
        return {0: cs.C0, 1: cs.C1}, {0: cs.C0p, 1: cs.C1p}
    if route == "separated":
        delta = 0.125
        w = v_contour(delta, B, saddle.alpha, log_floor=log_floor)
        return {0: w, 1: w}, {0: w.reflect(), 1: w.reflect()}
    raise ValueError(f"unknown route {route!r}")


def _raw_integrals(alpha, B, eps_list, route, order, log_floor, spacing=SPACING):
    saddle = solve_saddles(alpha)
    wc, zc = _contours_for(route, saddle, B, log_floor)
    spacing = spacing / max(1.0, B) ** 2
    rules_w = {k: c.rule(order, spacing) for k, c in wc.items()}
    rules_z = {k: c.rule(order, spacing) for k, c in zc.items()}
    out = {}
    for n, (j, k) in _PAIRS.items():
        ev = PairEvaluator(rules_w[k], rules_z[j])
        for e1, e2 in eps_list:
            out[(e1, e2, n)] = ev.value(j, k, e1, e2, alpha, B)
    return out, saddle


def resolve_route(alpha, route):
    """``auto`` picks the descent contours unless eta is within TIP_SWITCH of
    i/4, where the traced contours lose accuracy; the separated V is used there."""
    if route != "auto":
        return route
    eta = solve_saddles(alpha).eta
    return "separated" if tip_distance(eta) < TIP_SWITCH else "descent"


def integrals_I(alpha, B=1.0, e1=0, e2=0, route="auto", order=GAUSS_ORDER, log_floor=LOG_FLOOR,
                imag_tol=1e-8):
    return integrals_all(alpha, B, [(e1, e2)], route, order, log_floor, imag_tol)[(e1, e2)]


def integrals_all(alpha, B=1.0, eps_list=((0, 0), (0, 1), (1, 0), (1, 1)), route="auto",
                  order=GAUSS_ORDER, log_floor=LOG_FLOOR, imag_tol=1e-8):
    """IntegralBundle per (eps1, eps2); error estimates from a rerun on a refined rule."""
    eps_list = [tuple(e) for e in eps_list]
    route = resolve_route(alpha, route)
    coarse, saddle = _raw_integrals(alpha, B, eps_list, route, order, log_floor, 2 * SPACING)
    fine, _ = _raw_integrals(alpha, B, eps_list, route, order, log_floor, SPACING)
    out = {}
    for e1, e2 in eps_list:
        I0, I0err = I0_integral(alpha, e1, e2, saddle.eta.real)
        vals, errs, ims = {}, {"I0": I0err}, {"I0": abs(complex(I0).imag)}
        for n in _PAIRS:
            v = fine[(e1, e2, n)]
            if route == "separated" and n == 1:
                v = v - 8 * math.pi * complex(I0)
            vals[n] = v
            errs[f"I{n}"] = abs(fine[(e1, e2, n)] - coarse[(e1, e2, n)])
            ims[f"I{n}"] = abs(v.imag)
        worst = max(ims.values())
        if worst > imag_tol:
            raise NotConvergedError(f"imaginary residue {worst:.3g} at alpha={alpha}, eps=({e1},{e2})")
        I = {n: vals[n].real for n in vals}
        psi = (I[1] - I[2] - I[3] + I[4]) / (32 * math.pi**2)
        errs["psi"] = sum(errs[f"I{n}"] for n in _PAIRS) / (32 * math.pi**2)
        out[(e1, e2)] = IntegralBundle(alpha, B, (e1, e2), float(complex(I0).real), I[1], I[2], I[3], I[4],
                                       psi, errs, ims, route)
    return out


# ---------------------------------------------------------------------------
# assembled asymptotics


def asymptotic_vertex(m, B, alpha, offset):
    """floor(4m + 2 sqrt(m) alpha B) + offset, coordinatewise."""
    base = math.floor(4 * m + 2 * math.sqrt(m) * alpha * B)
    return (base + offset[0], base + offset[1])


def alpha_interval(x, offset, m, B):
    """Range of alpha consistent with x = floor(4m + 2 sqrt(m) alpha B) + offset."""
    bases = {x[0] - offset[0], x[1] - offset[1]}
    if len(bases) != 1:
        raise ValueError("offsets do not match a common base coordinate")
    base = bases.pop()
    s = 2 * math.sqrt(m) * B
    return (base - 4 * m) / s, (base + 1 - 4 * m) / s


def kinv_asymptotic(x, y, m, B, alpha, bundle=None):
    """Two-term asymptotic inverse Kasteleyn entry for x white, y black near the given alpha."""
    from .whole_plane import c_coeffs

    e1, e2 = vertex_eps(x), vertex_eps(y)
    if bundle is None:
        bundle = integrals_I(alpha, B, e1, e2)
    h = B / math.sqrt(m)
    p, q = lattice_coords(x, y)
    c0, _, c2 = c_coeffs(p, q)
    z = zeta(x, y)
    corr = math.log(h) / (2 * math.pi) + c2 + bundle.I0 / (4 * math.pi) + bundle.psi
    return (c0 * (1 + h / 2) + z * h * corr) / sigma(x, y)


def rho_asymptotic(x, y, m, B, alpha, bundle=None):
    """Edge probability: 1/4 + zeta h ((log h - 2 log 2)/(2 pi) + I0/(4 pi) + psi)."""
    lattice_coords(x, y)
    e1, e2 = vertex_eps(x), vertex_eps(y)
    if bundle is None:
        bundle = integrals_I(alpha, B, e1, e2)
    h = B / math.sqrt(m)
    z = zeta(x, y)
    return 0.25 + z * h * ((math.log(h) - 2 * math.log(2)) / (2 * math.pi) + bundle.combined)


def edge_at(m, B, alpha, e1=0, e2=0, weight="a"):
    """An edge (x, y), x in W_e1 and y in B_e2, with x at the smallest offset
    from the base point floor(4m + 2 sqrt(m) alpha B) along the diagonal.

    ``weight`` is "a" for zeta = 1 edges and "1" for zeta = -1.
    """
    from .lattice import DIRECTIONS

    want = 1 if weight == "a" else -1
    offsets = sorted(((i, j) for i in range(4) for j in range(4)), key=lambda o: (o[0] + o[1], o))
    for off in offsets:
        x = asymptotic_vertex(m, B, alpha, off)
        if x[0] % 2 == 0 or x[1] % 2 or vertex_eps(x) != e1:
            continue
        for d in DIRECTIONS.values():
            y = (x[0] + d[0], x[1] + d[1])
            if vertex_eps(y) == e2 and zeta(x, y) == want:
                return x, y
    raise ValueError(f"no edge of class ({e1},{e2}) and weight {weight} near the base point")
