"""Command-line driver.

Every subcommand writes a CSV table whose first line is a ``#`` comment
holding the run configuration as JSON.  Floats are printed with 17
significant digits and each computed column ``v`` is followed by ``v_err``.

Exit status: 0 on success, 2 for usage errors, 3 for numeric failures (a
JSON diagnostic goes to stderr).
"""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from pathlib import Path

import click
import numpy as np

from .lattice import DiamondSpec, EdgeRef, LatticeError, enumerate_edges, kasteleyn_entry

WEIGHT_CHOICES = ("a", "1", "both")
EPS_ALL = ((0, 0), (0, 1), (1, 0), (1, 1))


class NumericFailure(click.ClickException):
    exit_code = 3

    def __init__(self, exc, config):
        super().__init__(str(exc))
        self.payload = {"error": type(exc).__name__, "message": str(exc), "config": config}

    def show(self, file=None):
        click.echo(json.dumps(self.payload, sort_keys=True), err=True)


# ---------------------------------------------------------------------------
# formatting


def fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(v).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        return format(v, ".17g")
    return str(v)


def render(config, header, rows):
    buf = io.StringIO()
    buf.write("# " + json.dumps(config, sort_keys=True) + "\n")
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for r in rows:
        wr.writerow([fmt(v) for v in r])
    return buf.getvalue()


def emit(text, out):
    if out is None:
        click.echo(text, nl=False)
    else:
        Path(out).write_text(text)


# ---------------------------------------------------------------------------
# option parsing


def resolve_spec(m, a, B):
    """Exactly one of a or B fixes the weight; B gives a = 1 - B / sqrt(m)."""
    if m is None:
        raise click.UsageError("--m is required")
    if (a is None) == (B is None):
        raise click.UsageError("give exactly one of --a or --B")
    try:
        if a is not None:
            return DiamondSpec(m, a), (1.0 - a) * math.sqrt(m)
        return DiamondSpec.from_scaling(m, B), B
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc


def parse_vertex(text):
    try:
        x1, x2 = (int(t) for t in text.split(","))
    except ValueError as exc:
        raise click.UsageError(f"bad vertex {text!r}, expected x1,x2") from exc
    return x1, x2


def resolve_edges(spec, selectors):
    """``all``, ``center`` or explicit ``x1,x2:y1,y2`` (white:black) selectors."""
    selectors = selectors or ("all",)
    out = []
    for sel in selectors:
        if sel == "all":
            out.extend(e for e, _ in enumerate_edges(spec))
        elif sel == "center":
            c = 2 * spec.n
            out.extend(e for e, _ in enumerate_edges(spec) if abs(e.white[0] - c // 2) <= 1 and abs(e.white[1] - c // 2) <= 1)
        else:
            try:
                w, b = sel.split(":")
                out.append(EdgeRef(parse_vertex(w), parse_vertex(b)))
            except (ValueError, LatticeError) as exc:
                raise click.UsageError(f"bad edge {sel!r}: {exc}") from exc
    seen, uniq = set(), []
    for e in out:
        if (e.white, e.black) not in seen:
            seen.add((e.white, e.black))
            uniq.append(e)
    n = spec.n
    for e in uniq:
        if not all(0 <= c <= 2 * n for c in (*e.white, *e.black)):
            raise click.UsageError(f"edge {e.white}-{e.black} lies outside the order-{n} diamond")
    return uniq


def parse_eps(values):
    if not values or "all" in values:
        return list(EPS_ALL)
    out = []
    for v in values:
        if len(v) != 2 or any(ch not in "01" for ch in v):
            raise click.UsageError(f"bad eps class {v!r}, expected two digits such as 01")
        out.append((int(v[0]), int(v[1])))
    return out


def run_numeric(config, fn):
    try:
        return fn()
    except click.ClickException:
        raise
    except ArithmeticError as exc:
        raise NumericFailure(exc, config) from exc


def edge_cols(e):
    from .sampler import domino_type

    return [e.white[0], e.white[1], e.black[0], e.black[1], domino_type(e.white, e.black)]


EDGE_HEADER = ["x1", "x2", "y1", "y2", "type"]
weight_options = [
    click.option("--m", type=int, help="Diamond size parameter; n = 4m."),
    click.option("--a", type=float, help="Edge weight a in (0, 1]."),
    click.option("--B", "B", type=float, help="Scaling constant; a = 1 - B m^(-1/2)."),
]


def with_weight(f):
    for opt in reversed(weight_options):
        f = opt(f)
    return f


out_option = click.option("--out", type=click.Path(dir_okay=False), default=None, help="Output file (default stdout).")
edges_option = click.option("--edges", multiple=True, help="all | center | x1,x2:y1,y2 (repeatable).")


# ---------------------------------------------------------------------------
# routes shared by exact/contour/compare


def direct_rows(spec, edges):
    """K^-1 entries with the forward error bound ||K^-1||_1 * residual."""
    from .kasteleyn_exact import KasteleynSystem

    sysm = KasteleynSystem(spec)
    ninv = sysm.inverse_norm_estimate()
    res = {}
    out = []
    for e in edges:
        col = sysm.inverse_column(e.black)
        j = sysm.diamond.black_index[e.black]
        if j not in res:
            r = sysm.K @ col
            r[j] -= 1.0
            res[j] = ninv * float(np.max(np.abs(r)))
        kinv = sysm.inverse_entry(e.white, e.black)
        out.append((kinv, res[j]))
    return out


def contour_rows(spec, edges):
    from .finite_integrals import SeparableEvaluator, kinv_contour

    ev = SeparableEvaluator(spec)
    out = []
    for e in edges:
        val = kinv_contour(e.white, e.black, spec, evaluator=ev)
        out.append((complex(val), ev.last_error))
    return out


def asym_alpha(e, m, B):
    """Alpha and offset placing the white vertex of e in the asymptotic frame."""
    from .mesoscopic import alpha_interval

    x = e.white
    base = min(x)
    off = (x[0] - base, x[1] - base)
    if max(off) > 3:
        raise ValueError("vertex is off the diagonal")
    lo, hi = alpha_interval(x, off, m, B)
    alpha = 0.5 * (lo + hi)
    if not alpha < 0:
        raise ValueError(f"alpha = {alpha:.6g} is not negative")
    return alpha


def asym_rows(spec, B, edges):
    from .mesoscopic import integrals_all, kinv_asymptotic

    out = []
    cache = {}
    m = spec.m
    for e in edges:
        if B <= 0:
            out.append((complex(math.nan, math.nan), math.nan, "asym: needs a < 1"))
            continue
        try:
            alpha = asym_alpha(e, m, B)
        except ValueError as exc:
            out.append((complex(math.nan, math.nan), math.nan, f"asym: {exc}"))
            continue
        if alpha not in cache:
            try:
                cache[alpha] = integrals_all(alpha, B)
            except ArithmeticError as exc:
                cache[alpha] = f"asym: {type(exc).__name__}: {exc}"
        if isinstance(cache[alpha], str):
            out.append((complex(math.nan, math.nan), math.nan, cache[alpha]))
            continue
        bundle = cache[alpha][e.eps]
        h = B / math.sqrt(m)
        err = h * (bundle.errors["I0"] / (4 * math.pi) + bundle.errors["psi"])
        val = kinv_asymptotic(e.white, e.black, m, B, alpha, bundle)
        out.append((complex(val), err, ""))
    return out


# ---------------------------------------------------------------------------
# commands


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Inverse Kasteleyn entries and edge probabilities of the two-periodic Aztec diamond."""


@main.command()
@with_weight
@edges_option
@click.option("--report", type=click.Choice(["rho", "kinv", "Z"]), default="rho", show_default=True)
@click.option("--method", type=click.Choice(["direct", "renewal"]), default="direct", show_default=True,
              help="renewal computes rho by urban renewal, which stays accurate at large m.")
@out_option
def exact(m, a, B, edges, report, method, out):
    """Direct computation: sparse solve for K^-1 and rho, or |det K| for Z."""
    spec, B = resolve_spec(m, a, B)
    config = {"command": "exact", "m": spec.m, "a": spec.a, "B": B, "edges": list(edges), "report": report,
              "method": method}

    def go():
        from .kasteleyn_exact import KasteleynSystem, TooLargeError

        if report == "Z":
            if method != "direct":
                raise click.UsageError("--report Z needs --method direct")
            try:
                sysm = KasteleynSystem(spec)
            except TooLargeError as exc:
                raise click.UsageError(str(exc)) from exc
            la = sysm.log_abs_det()
            # rounding bound for an LU determinant
            rel = sysm.K.shape[0] * np.finfo(float).eps
            return ["m", "a", "Z", "Z_err", "log_Z", "log_Z_err"], [
                [spec.m, spec.a, math.exp(la), math.exp(la) * rel, la, rel]
            ]
        sel = resolve_edges(spec, edges)
        if method == "renewal":
            if report != "rho":
                raise click.UsageError("--method renewal only reports rho")
            from .sampler import edge_probabilities, edge_probability

            probs = edge_probabilities(spec)
            rows = []
            for e in sel:
                p = edge_probability(spec, e.white, e.black, probs)
                rows.append(edge_cols(e) + [p, spec.n * np.finfo(float).eps])
            return EDGE_HEADER + ["rho", "rho_err"], rows
        try:
            vals = direct_rows(spec, sel)
        except TooLargeError as exc:
            raise click.UsageError(str(exc)) from exc
        rows = []
        for e, (kinv, err) in zip(sel, vals):
            if report == "kinv":
                rows.append(edge_cols(e) + [kinv.real, err, kinv.imag, err])
            else:
                K = kasteleyn_entry(e.white, e.black, spec.a)
                rows.append(edge_cols(e) + [(K * kinv).real, abs(K) * err])
        if report == "kinv":
            return EDGE_HEADER + ["kinv_re", "kinv_re_err", "kinv_im", "kinv_im_err"], rows
        return EDGE_HEADER + ["rho", "rho_err"], rows

    header, rows = run_numeric(config, go)
    emit(render(config, header, rows), out)


@main.command()
@with_weight
@edges_option
@out_option
def contour(m, a, B, edges, out):
    """K^-1 from the exact contour-integral formula."""
    spec, B = resolve_spec(m, a, B)
    sel = resolve_edges(spec, edges)
    config = {"command": "contour", "m": spec.m, "a": spec.a, "B": B, "edges": list(edges)}
    vals = run_numeric(config, lambda: contour_rows(spec, sel))
    rows = []
    for e, (kinv, err) in zip(sel, vals):
        K = kasteleyn_entry(e.white, e.black, spec.a)
        rows.append(edge_cols(e) + [kinv.real, err, kinv.imag, err, (K * kinv).real, abs(K) * err])
    header = EDGE_HEADER + ["kinv_re", "kinv_re_err", "kinv_im", "kinv_im_err", "rho", "rho_err"]
    emit(render(config, header, rows), out)


@main.command()
@with_weight
@click.option("--alpha", type=float, required=True, help="Position along the diagonal, alpha < 0.")
@click.option("--eps", multiple=True, help="Vertex classes such as 00 or 11, or all.")
@click.option("--weight", type=click.Choice(WEIGHT_CHOICES), default="both", show_default=True)
@click.option("--route", type=click.Choice(["auto", "descent", "separated"]), default="auto", show_default=True)
@out_option
def asym(m, a, B, alpha, eps, weight, route, out):
    """Mesoscopic asymptotic K^-1 and rho near the vertex at alpha."""
    spec, B = resolve_spec(m, a, B)
    if not alpha < 0:
        raise click.UsageError("--alpha must be negative")
    if B <= 0:
        raise click.UsageError("the asymptotic formula needs a < 1")
    classes = parse_eps(eps)
    weights = ("a", "1") if weight == "both" else (weight,)
    config = {"command": "asym", "m": spec.m, "a": spec.a, "B": B, "alpha": alpha, "eps": [f"{e1}{e2}" for e1, e2 in classes],
              "weight": weight, "route": route}

    def go():
        from .mesoscopic import edge_at, integrals_all, kinv_asymptotic, rho_asymptotic

        bundles = integrals_all(alpha, B, classes, route=route)
        h = B / math.sqrt(spec.m)
        rows = []
        for e1, e2 in classes:
            b = bundles[(e1, e2)]
            err = h * (b.errors["I0"] / (4 * math.pi) + b.errors["psi"])
            for w in weights:
                x, y = edge_at(spec.m, B, alpha, e1, e2, w)
                rho = rho_asymptotic(x, y, spec.m, B, alpha, b)
                kinv = complex(kinv_asymptotic(x, y, spec.m, B, alpha, b))
                rows.append([alpha, e1, e2, w] + edge_cols(EdgeRef(x, y)) + [rho, err, kinv.real, err, kinv.imag, err])
        return rows

    rows = run_numeric(config, go)
    header = ["alpha", "eps1", "eps2", "weight"] + EDGE_HEADER + ["rho", "rho_err", "kinv_re", "kinv_re_err", "kinv_im", "kinv_im_err"]
    emit(render(config, header, rows), out)


@main.command()
@click.option("--p", type=int, help="Lattice vector p e1 + q e2 (p + q odd) for c-coefficients.")
@click.option("--q", type=int)
@click.option("--u", type=int, help="Index pair for s-coefficients.")
@click.option("--v", type=int)
@out_option
def coeffs(p, q, u, v, out):
    """Whole-plane expansion coefficients c0, c1, c2 or s0, s1, s2."""
    from .whole_plane import QUAD_ACCEPT, c_coeffs, c_from_s, s_coeffs, s2_direct

    pq, uv = (p, q) != (None, None), (u, v) != (None, None)
    if pq == uv or (pq and None in (p, q)) or (uv and None in (u, v)):
        raise click.UsageError("give either --p and --q, or --u and --v")
    config = {"command": "coeffs", "p": p, "q": q, "u": u, "v": v}

    def go():
        # quadrature values carry the acceptance bound enforced by _quad;
        # c and s2 also have a second route whose discrepancy is folded in
        def bound(x, alt=None):
            b = QUAD_ACCEPT * max(1.0, abs(x))
            return b if alt is None else max(b, abs(x - alt))

        if pq:
            if (p + q) % 2 == 0:
                raise click.UsageError("p + q must be odd")
            c, alt = c_coeffs(p, q), c_from_s(p, q)
            return ["p", "q", "c0", "c0_err", "c1", "c1_err", "c2", "c2_err"], [
                [p, q, c[0], bound(c[0], alt[0]), c[1], 0.0, c[2], bound(c[2], alt[2])]
            ]
        s = s_coeffs(u, v)
        return ["u", "v", "s0", "s0_err", "s1", "s1_err", "s2", "s2_err"], [
            [u, v, s[0], bound(s[0]), s[1], 0.0, s[2], bound(s[2], s2_direct(u, v))]
        ]

    header, rows = run_numeric(config, go)
    emit(render(config, header, rows), out)


def alpha_grid(lo, hi, step):
    if step <= 0:
        raise click.UsageError("--step must be positive")
    if not lo <= hi:
        raise click.UsageError("need --alpha-min <= --alpha-max")
    if not hi < 0:
        raise click.UsageError("the alpha range must lie in (-inf, 0)")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [lo + i * step for i in range(count)]


@main.command("sweep-alpha")
@click.option("--B", "B", type=float, default=1.0, show_default=True)
@click.option("--alpha-min", type=float, required=True)
@click.option("--alpha-max", type=float, required=True)
@click.option("--step", type=float, required=True)
@click.option("--eps", multiple=True, help="Vertex classes such as 00 or 11, or all (default).")
@click.option("--route", type=click.Choice(["auto", "descent", "separated"]), default="auto", show_default=True)
@out_option
def sweep_alpha(B, alpha_min, alpha_max, step, eps, route, out):
    """Table of I0, psi and I0/(4 pi) + psi over an alpha grid."""
    from .mesoscopic import integrals_all

    if not B > 0:
        raise click.UsageError("--B must be positive")
    grid = alpha_grid(alpha_min, alpha_max, step)
    classes = parse_eps(eps)
    config = {"command": "sweep-alpha", "B": B, "alpha_min": alpha_min, "alpha_max": alpha_max, "step": step,
              "eps": [f"{e1}{e2}" for e1, e2 in classes], "route": route}
    nan = math.nan
    rows = []
    for alpha in grid:
        try:
            bundles = integrals_all(alpha, B, classes, route=route)
        except (ArithmeticError, ValueError) as exc:
            for e1, e2 in classes:
                rows.append([alpha, e1, e2, nan, nan, nan, nan, nan, nan, "", f"{type(exc).__name__}: {exc}"])
            continue
        for e1, e2 in classes:
            b = bundles[(e1, e2)]
            i0e, pse = b.errors["I0"], b.errors["psi"]
            rows.append([alpha, e1, e2, b.I0, i0e, b.psi, pse, b.combined, i0e / (4 * math.pi) + pse, b.route, ""])
    header = ["alpha", "eps1", "eps2", "I0", "I0_err", "psi", "psi_err", "combined", "combined_err", "route", "failure"]
    emit(render(config, header, rows), out)


@main.command()
@click.option("--m", type=int, help="Diamond size parameter; n = 4m.")
@click.option("--n", type=int, help="Diamond order (multiple of 4), instead of --m.")
@click.option("--a", type=float)
@click.option("--B", "B", type=float)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--count", type=int, default=1, show_default=True)
@click.option("--start", type=int, default=0, show_default=True, help="Index of the first sample.")
@click.option("--stats", is_flag=True, help="Print edge frequencies against exact rho instead of tilings.")
@edges_option
@click.option("--out", type=click.Path(), default=None,
              help="Tiling file for one sample, a directory for several, or the stats table.")
def sample(m, n, a, B, seed, count, start, stats, edges, out):
    """Exact random tilings by domino shuffling."""
    from .sampler import edge_frequencies, edge_probabilities, edge_probability, sample_tilings

    if (m is None) == (n is None):
        raise click.UsageError("give exactly one of --m or --n")
    if n is not None:
        if n % 4 or n < 4:
            raise click.UsageError("--n must be a positive multiple of 4")
        m = n // 4
    spec, B = resolve_spec(m, a, B)
    if count < 1 or start < 0:
        raise click.UsageError("--count must be positive and --start non-negative")
    config = {"command": "sample", "m": spec.m, "n": spec.n, "a": spec.a, "B": B, "seed": seed, "count": count,
              "start": start, "stats": stats, "edges": list(edges)}
    if stats:
        if start:
            raise click.UsageError("--stats always uses samples 0..count-1")
        if count < 2:
            raise click.UsageError("--stats needs --count >= 2")
        sel = resolve_edges(spec, edges or ("center",))
        hits = edge_frequencies(spec, seed, count, [(e.white, e.black) for e in sel])
        probs = edge_probabilities(spec)
        rows = []
        for e, k in zip(sel, hits):
            f = k / count
            se = math.sqrt(f * (1 - f) / (count - 1))
            p = edge_probability(spec, e.white, e.black, probs)
            z = (f - p) / se if se > 0 else (0.0 if f == p else math.inf)
            rows.append(edge_cols(e) + [f, se, p, spec.n * np.finfo(float).eps, z])
        header = EDGE_HEADER + ["freq", "freq_err", "rho", "rho_err", "z_score"]
        emit(render(config, header, rows), out)
        return
    tilings = sample_tilings(spec, seed, count, start=start)
    head = "# " + json.dumps(config, sort_keys=True) + "\n"
    if count == 1:
        emit(head + tilings[0].to_csv(), out)
        return
    if out is None:
        raise click.UsageError("several samples need --out DIRECTORY")
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    for k, t in enumerate(tilings):
        (d / f"tiling_{start + k:06d}.csv").write_text(head + t.to_csv())


@main.command()
@with_weight
@edges_option
@out_option
def compare(m, a, B, edges, out):
    """Direct, contour and asymptotic K^-1 side by side with their differences."""
    spec, B = resolve_spec(m, a, B)
    sel = resolve_edges(spec, edges)
    config = {"command": "compare", "m": spec.m, "a": spec.a, "B": B, "edges": list(edges)}

    def go():
        return direct_rows(spec, sel), contour_rows(spec, sel), asym_rows(spec, B, sel)

    try:
        d, c, s = run_numeric(config, go)
    except ValueError as exc:  # only the size cap reaches here
        raise click.UsageError(str(exc)) from exc
    rows = []
    for e, (kd, ed), (kc, ec), (ka, ea, note) in zip(sel, d, c, s):
        rows.append(edge_cols(e) + [
            kd.real, ed, kd.imag, ed,
            kc.real, ec, kc.imag, ec,
            ka.real, ea, ka.imag, ea,
            abs(kd - kc), ed + ec,
            abs(kd - ka), ed + ea,
            note,
        ])
    header = EDGE_HEADER + [
        "direct_re", "direct_re_err", "direct_im", "direct_im_err",
        "contour_re", "contour_re_err", "contour_im", "contour_im_err",
        "asym_re", "asym_re_err", "asym_im", "asym_im_err",
        "diff_direct_contour", "diff_direct_contour_err",
        "diff_direct_asym", "diff_direct_asym_err",
        "note",
    ]
    emit(render(config, header, rows), out)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
