"""Geometry of the two-periodic Aztec diamond.

Vertices are integer points (x1, x2) with 0 <= x1, x2 <= 2n and x1 + x2 odd.
White vertices have x1 odd and x2 even, black vertices have x1 even and x2
odd.  Each colour splits into two classes by x1 + x2 mod 4, which fixes the
2x2 fundamental domain of weights.  Lattice directions are e1 = (1, 1) and
e2 = (-1, 1).

Matrix ordering (internal contract): white and black vertices are each listed
in row-major order of (x2, x1); see ``white_vertices`` / ``black_vertices``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

E1 = (1, 1)
E2 = (-1, 1)
DIRECTIONS = {"+e1": E1, "-e1": (-1, -1), "+e2": E2, "-e2": (1, -1)}


class LatticeError(ValueError):
    pass


class NotAnEdgeError(LatticeError):
    pass


class ParityError(LatticeError):
    pass


class VertexClass(enum.Enum):
    W0 = "W0"
    W1 = "W1"
    B0 = "B0"
    B1 = "B1"
    INVALID = "Invalid"

    @property
    def is_white(self):
        return self in (VertexClass.W0, VertexClass.W1)

    @property
    def is_black(self):
        return self in (VertexClass.B0, VertexClass.B1)

    @property
    def eps(self):
        if self is VertexClass.INVALID:
            raise LatticeError("invalid vertex has no class")
        return 1 if self in (VertexClass.W1, VertexClass.B1) else 0


@dataclass(frozen=True)
class DiamondSpec:
    """Model instance: n = 4m and edge weight a in (0, 1]."""

    m: int
    a: float

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m!r}")
        if not (0.0 < self.a <= 1.0):
            raise ValueError(f"a must lie in (0, 1], got {self.a!r}")

    @classmethod
    def from_n(cls, n, a):
        if n % 4:
            raise ValueError(f"n must be a multiple of 4, got {n}")
        return cls(n // 4, a)

    @classmethod
    def from_scaling(cls, m, B):
        """Weight a = 1 - B m^(-1/2)."""
        return cls(m, 1.0 - B / m ** 0.5)

    @property
    def n(self):
        return 4 * self.m

    @property
    def c(self):
        # a / (a^2 + 1) avoids the cancellation in 1 / (a + 1/a) near a = 1
        return self.a / (self.a * self.a + 1.0)

    @property
    def h(self):
        return 1.0 - self.a


def classify_vertex(v, n) -> VertexClass:
    x1, x2 = int(v[0]), int(v[1])
    if not (0 <= x1 <= 2 * n and 0 <= x2 <= 2 * n):
        return VertexClass.INVALID
    if (x1 + x2) % 2 == 0:
        return VertexClass.INVALID
    eps = 0 if (x1 + x2) % 4 == 1 else 1
    if x1 % 2 == 1:
        return VertexClass.W1 if eps else VertexClass.W0
    return VertexClass.B1 if eps else VertexClass.B0


def vertex_eps(v):
    """Class bit: x1 + x2 = 2 eps + 1 mod 4."""
    s = (v[0] + v[1]) % 4
    if s not in (1, 3):
        raise ParityError(f"{v} has even coordinate sum")
    return (s - 1) // 2


def is_white(v):
    return v[0] % 2 == 1 and v[1] % 2 == 0


def is_black(v):
    return v[0] % 2 == 0 and v[1] % 2 == 1


def direction_of(x, y):
    """Name of the unit step taking white x to black y."""
    d = (y[0] - x[0], y[1] - x[1])
    for name, vec in DIRECTIONS.items():
        if d == vec:
            return name
    raise NotAnEdgeError(f"{x} -> {y} is not a lattice step")


def _check_white_black(x, y):
    if not is_white(x):
        raise ParityError(f"{x} is not a white vertex")
    if not is_black(y):
        raise ParityError(f"{y} is not a black vertex")


def kasteleyn_entry(x, y, a):
    """K_a(y, x) for an edge with white x and black y."""
    _check_white_black(x, y)
    d = direction_of(x, y)
    e = vertex_eps(x)
    fwd = a * (1 - e) + e
    bwd = (1 - e) + a * e
    return {"+e1": fwd, "-e1": bwd, "+e2": 1j * fwd, "-e2": 1j * bwd}[d]


def edge_weight(x, y, a):
    """a if the edge lies inside a fundamental domain, else 1."""
    return abs(kasteleyn_entry(x, y, a))


def in_fundamental_domain(x, y):
    """Independent geometric test: do x and y share a 2x2 weight block?

    A block is anchored at a W0 vertex w and holds w, w+e1, w+e2, w+e1+e2.
    """
    _check_white_black(x, y)
    direction_of(x, y)
    if vertex_eps(x) == 0:
        anchors = [x]
    else:
        anchors = [(x[0], x[1] - 2)]  # w1 = w0 + e1 + e2
    for w in anchors:
        block = {w, (w[0] + 1, w[1] + 1), (w[0] - 1, w[1] + 1), (w[0], w[1] + 2)}
        if x in block and y in block:
            return True
    return False


def zeta(x, y):
    """(-1)^((y2 - x1)/2); +1 exactly on weight-a edges."""
    d = y[1] - x[0]
    if d % 2:
        raise ParityError(f"y2 - x1 = {d} is odd")
    return 1 if (d // 2) % 2 == 0 else -1


def sigma(x, y):
    """1 for an odd multiple of e1 in y - x, i for an odd multiple of e2."""
    d1, d2 = y[0] - x[0], y[1] - x[1]
    # y - x = p e1 + q e2 with p = (d1 + d2)/2, q = (d2 - d1)/2
    if (d1 + d2) % 2:
        raise ParityError(f"{y} - {x} is not a lattice vector")
    p, q = (d1 + d2) // 2, (d2 - d1) // 2
    if p % 2 == 1 and q % 2 == 0:
        return 1 + 0j
    if p % 2 == 0 and q % 2 == 1:
        return 1j
    raise ParityError(f"{y} - {x} = {p} e1 + {q} e2 has no odd/even split")


def lattice_coords(x, y):
    """(p, q) with y - x = p e1 + q e2."""
    d1, d2 = y[0] - x[0], y[1] - x[1]
    if (d1 + d2) % 2:
        raise ParityError(f"{y} - {x} is not a lattice vector")
    return (d1 + d2) // 2, (d2 - d1) // 2


def white_vertices(n):
    return [(x1, x2) for x2 in range(0, 2 * n + 1, 2) for x1 in range(1, 2 * n, 2)]


def black_vertices(n):
    return [(x1, x2) for x2 in range(1, 2 * n, 2) for x1 in range(0, 2 * n + 1, 2)]


@dataclass(frozen=True)
class EdgeRef:
    white: tuple
    black: tuple
    direction: str = field(default="")

    def __post_init__(self):
        d = direction_of(self.white, self.black)
        if self.direction and self.direction != d:
            raise NotAnEdgeError(f"stated direction {self.direction} but step is {d}")
        object.__setattr__(self, "direction", d)

    @property
    def eps(self):
        return vertex_eps(self.white), vertex_eps(self.black)


class Diamond:
    """Vertex lists, index maps and edges for one DiamondSpec."""

    def __init__(self, spec: DiamondSpec):
        self.spec = spec
        self.n = spec.n

    @cached_property
    def whites(self):
        return white_vertices(self.n)

    @cached_property
    def blacks(self):
        return black_vertices(self.n)

    @cached_property
    def white_index(self):
        return {v: i for i, v in enumerate(self.whites)}

    @cached_property
    def black_index(self):
        return {v: i for i, v in enumerate(self.blacks)}

    def contains(self, v):
        return classify_vertex(v, self.n) is not VertexClass.INVALID

    def neighbours(self, x):
        out = []
        for name, (d1, d2) in DIRECTIONS.items():
            y = (x[0] + d1, x[1] + d2)
            if self.contains(y):
                out.append(y)
        return out

    @cached_property
    def edges(self):
        return enumerate_edges(self.spec)


def enumerate_edges(spec: DiamondSpec):
    """Every edge once, as (EdgeRef, weight), ordered by white index."""
    n = spec.n
    out = []
    for x in white_vertices(n):
        for name, (d1, d2) in DIRECTIONS.items():
            y = (x[0] + d1, x[1] + d2)
            if classify_vertex(y, n) is VertexClass.INVALID:
                continue
            out.append((EdgeRef(x, y, name), edge_weight(x, y, spec.a)))
    return out
