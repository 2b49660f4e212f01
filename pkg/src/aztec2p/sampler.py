"""Generalized domino shuffling for the weighted Aztec diamond.

The n^2 odd-centred faces (p, q) = (2i+1, 2j+1) partition the edges into
blocks.  Each block has four edges named by the position of the black
vertex relative to the face centre and the white vertex:

    TR  white (p, q+1) -- black (p+1, q)     direction -e2
    TL  white (p, q+1) -- black (p-1, q)     direction -e1
    BR  white (p, q-1) -- black (p+1, q)     direction +e1
    BL  white (p, q-1) -- black (p-1, q)     direction +e2

TR/BL and BR/TL are the opposite pairs.  A square move on every block
maps the order-k diamond to order k-1; the renewed edge at position X of
block (i, j) carries weight w(opposite of X)/Delta and becomes the
following edge of the smaller diamond:

    renewed TR (i, j) -> BL (i, j)
    renewed BR (i, j) -> TL (i, j-1)
    renewed BL (i, j) -> TR (i-1, j-1)
    renewed TL (i, j) -> BR (i-1, j)

Running the map backwards with random creations gives exact samples, and
differentiating log Z through it gives exact edge probabilities using
only positive arithmetic.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .lattice import DiamondSpec, edge_weight, vertex_eps, zeta

POSITIONS = ("TR", "BR", "BL", "TL")
# black - white per position
_OFFSETS = {"TR": (1, -1), "TL": (-1, -1), "BR": (1, 1), "BL": (-1, 1)}
DOMINO_TYPES = ("a00", "a11", "a10", "a01", "u00", "u11", "u10", "u01")


class EmptyRegionError(ValueError):
    pass


def face_edge(i, j, pos):
    """(white, black) of the edge at ``pos`` in block (i, j)."""
    p, q = 2 * i + 1, 2 * j + 1
    white = (p, q + 1) if pos in ("TR", "TL") else (p, q - 1)
    d = _OFFSETS[pos]
    return white, (white[0] + d[0], white[1] + d[1])


def edge_to_face(white, black):
    """Inverse of face_edge: (i, j, pos)."""
    d = (black[0] - white[0], black[1] - white[1])
    pos = {v: k for k, v in _OFFSETS.items()}.get(d)
    if pos is None:
        raise ValueError(f"{white}-{black} is not an edge")
    p, q = white[0], white[1] + (-1 if pos in ("TR", "TL") else 1)
    return (p - 1) // 2, (q - 1) // 2, pos


def face_weights(spec: DiamondSpec):
    """Edge weights of the order-n diamond as four (n, n) arrays."""
    n = spec.n
    out = {}
    for pos in POSITIONS:
        w = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                w[i, j] = edge_weight(*face_edge(i, j, pos), spec.a)
        out[pos] = w
    return out


def _reduce(w):
    """One square move on every block: weights of the next smaller diamond."""
    delta = w["TR"] * w["BL"] + w["BR"] * w["TL"]
    new = {
        "TR": (w["TR"] / delta)[1:, 1:],
        "BL": (w["BL"] / delta)[:-1, :-1],
        "TL": (w["TL"] / delta)[:-1, 1:],
        "BR": (w["BR"] / delta)[1:, :-1],
    }
    # a global rescale leaves every probability unchanged
    s = max(float(v.max()) for v in new.values()) if new["TR"].size else 1.0
    return {k: v / s for k, v in new.items()}


def creation_tables(spec: DiamondSpec):
    """For k = 1..n, the probability that an empty block of the order-k
    diamond is filled with the TR/BL pair."""
    w = face_weights(spec)
    tables = [None] * (spec.n + 1)
    for k in range(spec.n, 0, -1):
        ac = w["TR"] * w["BL"]
        tables[k] = ac / (ac + w["BR"] * w["TL"])
        w = _reduce(w)
    return tables


def _renewed(prev, k):
    """Quantities living on the order-(k-1) edges, laid out on the order-k
    blocks by renewed position (zero where the renewed edge is absent)."""
    dt = prev["TR"].dtype
    r = {pos: np.zeros(prev["TR"].shape[:-2] + (k, k), dtype=dt) for pos in POSITIONS}
    r["TR"][..., :-1, :-1] = prev["BL"]
    r["BR"][..., :-1, 1:] = prev["TL"]
    r["BL"][..., 1:, 1:] = prev["TR"]
    r["TL"][..., 1:, :-1] = prev["BR"]
    return r


def edge_probabilities(spec: DiamondSpec):
    """Exact probability of every edge, as four (n, n) arrays by position.

    With Delta = ac + bd and primes for the smaller diamond,
    P(a) = P'(renewed c) + (ac/Delta)(1 - sum of P' over the renewed block).
    """
    tables = creation_tables(spec)
    prob = {pos: np.zeros((0, 0)) for pos in POSITIONS}
    for k in range(1, spec.n + 1):
        r = _renewed(prob, k)
        empty = 1.0 - (r["TR"] + r["BR"] + r["BL"] + r["TL"])
        pa = tables[k]
        prob = {
            "TR": r["BL"] + pa * empty,
            "BL": r["TR"] + pa * empty,
            "BR": r["TL"] + (1.0 - pa) * empty,
            "TL": r["BR"] + (1.0 - pa) * empty,
        }
    return prob


def edge_probability(spec: DiamondSpec, white, black, probs=None):
    probs = probs if probs is not None else edge_probabilities(spec)
    i, j, pos = edge_to_face(tuple(white), tuple(black))
    return float(probs[pos][i, j])


def sample_rng(seed, index):
    """Counter-based stream for sample ``index``: Philox keyed by (seed, index)."""
    key = (int(seed) % 2**64) << 64 | (int(index) % 2**64)
    return np.random.Generator(np.random.Philox(key=key))


def _shuffle(tables, rngs):
    """Grow a batch of tilings from the empty order-0 diamond."""
    S = len(rngs)
    occ = {pos: np.zeros((S, 0, 0), dtype=bool) for pos in POSITIONS}
    for k in range(1, len(tables)):
        r = _renewed(occ, k)
        empty = ~(r["TR"] | r["BR"] | r["BL"] | r["TL"])
        u = np.stack([g.random((k, k)) for g in rngs])
        coin = u < tables[k]
        # pairs annihilate, singles slide to the opposite position
        occ = {
            "TR": (r["BL"] & ~r["TR"]) | (empty & coin),
            "BL": (r["TR"] & ~r["BL"]) | (empty & coin),
            "BR": (r["TL"] & ~r["BR"]) | (empty & ~coin),
            "TL": (r["BR"] & ~r["TL"]) | (empty & ~coin),
        }
    return occ


@dataclass(frozen=True)
class Tiling:
    """A perfect matching, stored as edge occupancy per block position."""

    spec: DiamondSpec
    occupancy: dict

    def edges(self):
        out = []
        for pos in POSITIONS:
            for i, j in zip(*np.nonzero(self.occupancy[pos])):
                out.append(face_edge(int(i), int(j), pos))
        return sorted(out)

    def contains(self, white, black):
        i, j, pos = edge_to_face(tuple(white), tuple(black))
        return bool(self.occupancy[pos][i, j])

    def is_perfect_matching(self):
        n = self.spec.n
        cover = {}
        for w, b in self.edges():
            for v in (w, b):
                if not (0 <= v[0] <= 2 * n and 0 <= v[1] <= 2 * n):
                    return False
                cover[v] = cover.get(v, 0) + 1
        return len(cover) == 2 * n * (n + 1) and all(c == 1 for c in cover.values())

    def key(self):
        return b"".join(np.packbits(self.occupancy[pos]).tobytes() for pos in POSITIONS)

    def to_csv(self):
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["x1", "x2", "type"])
        for w, b in self.edges():
            wr.writerow([w[0], w[1], domino_type(w, b)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, spec: DiamondSpec, text):
        n = spec.n
        occ = {pos: np.zeros((n, n), dtype=bool) for pos in POSITIONS}
        lines = (ln for ln in io.StringIO(text) if not ln.startswith("#"))
        for row in csv.DictReader(lines):
            w = (int(row["x1"]), int(row["x2"]))
            b = black_from_type(w, row["type"])
            i, j, pos = edge_to_face(w, b)
            occ[pos][i, j] = True
        return cls(spec, occ)


def domino_type(white, black):
    """'a' or 'u' for the weight-a / weight-1 class, then eps of each end."""
    kind = "a" if zeta(white, black) == 1 else "u"
    return f"{kind}{vertex_eps(white)}{vertex_eps(black)}"


def black_from_type(white, kind):
    if kind not in DOMINO_TYPES:
        raise ValueError(f"unknown domino type {kind!r}")
    for d in _OFFSETS.values():
        b = (white[0] + d[0], white[1] + d[1])
        if domino_type(white, b) == kind:
            return b
    raise ValueError(f"type {kind!r} does not occur at white vertex {white}")


def sample_tilings(spec: DiamondSpec, seed, count, start=0, batch=256):
    """Tilings for sample indices start, ..., start+count-1."""
    tables = creation_tables(spec)
    out = []
    for lo in range(start, start + count, batch):
        idx = range(lo, min(lo + batch, start + count))
        occ = _shuffle(tables, [sample_rng(seed, s) for s in idx])
        for b in range(len(idx)):
            out.append(Tiling(spec, {pos: occ[pos][b].copy() for pos in POSITIONS}))
    return out


def sample_tiling(spec: DiamondSpec, seed, index=0):
    return sample_tilings(spec, seed, 1, start=index)[0]


def edge_frequencies(spec: DiamondSpec, seed, count, edges, batch=256):
    """Occurrence counts of the given (white, black) edges, without keeping tilings."""
    tables = creation_tables(spec)
    where = [edge_to_face(tuple(w), tuple(b)) for w, b in edges]
    hits = np.zeros(len(edges), dtype=np.int64)
    for lo in range(0, count, batch):
        idx = range(lo, min(lo + batch, count))
        occ = _shuffle(tables, [sample_rng(seed, s) for s in idx])
        for e, (i, j, pos) in enumerate(where):
            hits[e] += int(occ[pos][:, i, j].sum())
    return hits


@dataclass(frozen=True)
class EdgeStat:
    white: tuple
    black: tuple
    type: str
    mean: float
    stderr: float


def edge_statistics(samples, region):
    """Empirical frequency and standard error of every edge at the given vertices."""
    if len(samples) < 2:
        raise ValueError("need at least two samples")
    region = {tuple(v) for v in region}
    n = samples[0].spec.n
    edges = set()
    for v in region:
        for d in _OFFSETS.values():
            if v[0] % 2:  # white
                w, b = v, (v[0] + d[0], v[1] + d[1])
            else:
                w, b = (v[0] - d[0], v[1] - d[1]), v
            if all(0 <= c <= 2 * n for c in (*w, *b)):
                edges.add((w, b))
    if not edges:
        raise EmptyRegionError("region contains no edges of the diamond")
    N = len(samples)
    out = []
    for w, b in sorted(edges):
        k = sum(t.contains(w, b) for t in samples)
        p = k / N
        out.append(EdgeStat(w, b, domino_type(w, b), p, float(np.sqrt(p * (1 - p) / (N - 1)))))
    return out
