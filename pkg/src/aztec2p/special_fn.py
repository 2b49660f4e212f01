"""Branch-aware special functions shared by the exact and asymptotic paths.

Two square-root conventions appear.  The finite-size formula uses
``sqrt_shifted``, an odd function of omega with its cut on
i[-sqrt(2c), sqrt(2c)].  The asymptotic variables use principal roots of
1/2 -+ 2iw, whose cuts are the rays i(-inf, -1/4] and i[1/4, inf).
"""

from __future__ import annotations

import numpy as np

CUT_GUARD = 1e-13


class OnBranchCutError(ValueError):
    pass


def sqrt_shifted(omega, c, side=None):
    """sqrt(omega^2 + 2c) = i sqrt(-i(omega + i s)) sqrt(-i(omega - i s)), s = sqrt(2c).

    ``side`` in {"right", "left"} selects the limit onto the cut from
    Re omega > 0 or Re omega < 0 for points on i[-s, s].
    """
    w = np.asarray(omega, dtype=complex)
    s = np.sqrt(2.0 * c)
    on_cut = (np.abs(w.real) < CUT_GUARD) & (np.abs(w.imag) <= s)
    val = 1j * np.sqrt(-1j * (w + 1j * s)) * np.sqrt(-1j * (w - 1j * s))
    if np.any(on_cut):
        if side is None:
            raise OnBranchCutError("omega lies on the cut i[-sqrt(2c), sqrt(2c)]")
        t = w.imag[on_cut]
        mag = np.sqrt(np.maximum(s * s - t * t, 0.0))
        val = np.array(val, copy=True)
        val[on_cut] = mag if side == "right" else -mag
    return val if val.ndim else complex(val)


def G(omega, c, side=None):
    s = np.sqrt(2.0 * c)
    w = np.asarray(omega, dtype=complex)
    return (w - sqrt_shifted(w, c, side)) / s


def t_fn(omega, c):
    w = np.asarray(omega, dtype=complex)
    if np.any(w == 0):
        raise ValueError("t(omega) is undefined at omega = 0")
    return w * sqrt_shifted(1.0 / w, c)


def log_H_tilde(x1, x2, omega, m, c):
    """log of omega^{2m} (-iG(omega))^{2m - x1/2} / (iG(1/omega))^{2m - x2/2}.

    The exponents are integers, so any branch of log gives the same
    exponential; principal logs are used.
    """
    if x1 % 2 or x2 % 2:
        raise ValueError("H_tilde needs even indices")
    k1 = 2 * m - x1 // 2
    k2 = 2 * m - x2 // 2
    w = np.asarray(omega, dtype=complex)
    return (2 * m) * np.log(w) + k1 * np.log(-1j * G(w, c)) - k2 * np.log(1j * G(1.0 / w, c))


def H_tilde(x1, x2, omega, m, c):
    lg = log_H_tilde(x1, x2, omega, m, c)
    if np.any(lg.real > 700):
        raise OverflowError("H_tilde exceeds double range; use log_H_tilde")
    return np.exp(lg)


def H_tilde_direct(x1, x2, omega, m, c):
    """Integer-power evaluation, safe only for small m; used as a cross-check."""
    k1 = 2 * m - x1 // 2
    k2 = 2 * m - x2 // 2
    w = np.asarray(omega, dtype=complex)
    return w ** (2 * m) * (-1j * G(w, c)) ** k1 / (1j * G(1.0 / w, c)) ** k2


def sqrt_half(w, sign, side=None):
    """Principal sqrt(1/2 + sign*2i*w), sign = +1 or -1.

    On the cut ray the limit from Re w > 0 ("right") or Re w < 0 ("left")
    is returned when ``side`` is given.
    """
    w = np.asarray(w, dtype=complex)
    arg = 0.5 + sign * 2j * w
    on_cut = (np.abs(arg.imag) < CUT_GUARD) & (arg.real <= 0)
    val = np.sqrt(arg)
    if np.any(on_cut):
        if side is None:
            raise OnBranchCutError("w lies on a cut ray of sqrt(1/2 +- 2iw)")
        # Im(arg) = sign * 2 Re w, so the right side approaches from sign*(+0)
        up = (side == "right") == (sign > 0)
        mag = np.sqrt(-arg.real[on_cut])
        val = np.array(val, copy=True)
        val[on_cut] = 1j * mag if up else -1j * mag
    return val if val.ndim else complex(val)


def f_pm(w, sign, side=None):
    """f^{+-}(w) = sqrt(1/2 - 2iw) +- sqrt(1/2 + 2iw)."""
    return sqrt_half(w, -1, side) + sign * sqrt_half(w, +1, side)


def psi_pm(w, sign, side=None):
    """psi^{+-}(w) = 1/sqrt(1/2 - 2iw) +- 1/sqrt(1/2 + 2iw)."""
    return 1.0 / sqrt_half(w, -1, side) + sign / sqrt_half(w, +1, side)
