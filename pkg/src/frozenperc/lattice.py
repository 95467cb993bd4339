"""Triangular lattice geometry: coordinates, metrics, regions, boundaries, paths.

Vertices are integer coefficient pairs (a, b) over the basis e1 = (1, 0),
e2 = (cos 60, sin 60), embedded at (a + b/2, b*sqrt(3)/2).  All distance
comparisons that feed the freezing rule are done in scaled integers
(X = 2a + b in half-units, Y = b in units of sqrt(3)/2) so that no floating
point enters the dynamics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

SQRT3_2 = math.sqrt(3.0) / 2.0

# the 6 neighbor steps of (a, b)
NEIGHBOR_STEPS = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1))

CARTESIAN_LINF = "cartesian-linf"
COEFF_LINF = "coeff-linf"
L2 = "l2"
METRICS = (CARTESIAN_LINF, COEFF_LINF, L2)
# metrics whose set diameter is exactly computable from a scaled-integer bbox
BBOX_METRICS = (CARTESIAN_LINF, COEFF_LINF)


class NotLoopUnion(ValueError):
    """Raised when a vertex set does not decompose into simple loops."""


def embed(v):
    """Real-plane position of the vertex v = (a, b)."""
    a, b = v
    return (a + 0.5 * b, b * SQRT3_2)


def neighbors(v):
    a, b = v
    return tuple((a + da, b + db) for da, db in NEIGHBOR_STEPS)


def are_adjacent(u, v):
    return (v[0] - u[0], v[1] - u[1]) in _STEP_SET


_STEP_SET = frozenset(NEIGHBOR_STEPS)


def distance(u, v, metric=CARTESIAN_LINF):
    """Distance between two vertices under the chosen metric."""
    da = u[0] - v[0]
    db = u[1] - v[1]
    if metric == CARTESIAN_LINF:
        dx2 = abs(2 * da + db)  # 2*|dx|
        return max(dx2 * 0.5, abs(db) * SQRT3_2)
    if metric == COEFF_LINF:
        return max(abs(da), abs(db))
    if metric == L2:
        dx = da + 0.5 * db
        dy = db * SQRT3_2
        return math.hypot(dx, dy)
    raise ValueError(f"unknown metric {metric!r}")


@dataclass(frozen=True)
class BBox:
    """Scaled-integer bounding box of a vertex set.

    Tracks coefficient extents (a, b) and the extent of X = 2a + b, which
    together determine the exact L-inf diameters (Y = b is shared).
    """

    amin: int
    amax: int
    bmin: int
    bmax: int
    xmin: int
    xmax: int

    @classmethod
    def of_vertex(cls, v):
        a, b = v
        x = 2 * a + b
        return cls(a, a, b, b, x, x)

    @classmethod
    def of_vertices(cls, vs):
        it = iter(vs)
        box = cls.of_vertex(next(it))
        for v in it:
            box = box.merged(cls.of_vertex(v))
        return box

    def merged(self, other: "BBox") -> "BBox":
        return BBox(
            min(self.amin, other.amin), max(self.amax, other.amax),
            min(self.bmin, other.bmin), max(self.bmax, other.bmax),
            min(self.xmin, other.xmin), max(self.xmax, other.xmax),
        )

    def diameter(self, metric=CARTESIAN_LINF) -> float:
        dx2 = self.xmax - self.xmin
        dy = self.bmax - self.bmin
        if metric == CARTESIAN_LINF:
            return max(dx2 * 0.5, dy * SQRT3_2)
        if metric == COEFF_LINF:
            return float(max(self.amax - self.amin, dy))
        raise ValueError(f"bbox diameter only defined for {BBOX_METRICS}, got {metric!r}")


def diameter_at_least(bbox: BBox, n: int, metric=CARTESIAN_LINF) -> bool:
    """Exact integer test: is the L-inf diameter of the boxed set >= n?

    For cartesian-linf: d >= n  iff  |dX| >= 2n  or  3*dY^2 >= 4n^2.
    No floating point is involved for either L-inf variant.
    """
    if metric == CARTESIAN_LINF:
        dx2 = bbox.xmax - bbox.xmin
        dy = bbox.bmax - bbox.bmin
        return dx2 >= 2 * n or 3 * dy * dy >= 4 * n * n
    if metric == COEFF_LINF:
        return bbox.amax - bbox.amin >= n or bbox.bmax - bbox.bmin >= n
    raise ValueError(f"diameter_at_least is exact only for {BBOX_METRICS}, got {metric!r}")


def set_diameter(vs, metric=CARTESIAN_LINF) -> float:
    """Diameter of a finite vertex set (bbox based for L-inf, pairwise for l2)."""
    vs = list(vs)
    if not vs:
        return 0.0
    if metric in BBOX_METRICS:
        return BBox.of_vertices(vs).diameter(metric)
    return max(
        (distance(vs[i], vs[j], metric) for i in range(len(vs)) for j in range(i + 1, len(vs))),
        default=0.0,
    )


@dataclass(frozen=True)
class Parallelogram:
    """Coefficient box [a_lo, a_hi] x [b_lo, b_hi], the paper's boxtimes region."""

    a_lo: int
    a_hi: int
    b_lo: int
    b_hi: int

    @classmethod
    def box(cls, center, r: int) -> "Parallelogram":
        """Centered box B(center; r)."""
        ca, cb = center
        r = int(r)
        return cls(ca - r, ca + r, cb - r, cb + r)

    def __contains__(self, v) -> bool:
        return self.a_lo <= v[0] <= self.a_hi and self.b_lo <= v[1] <= self.b_hi

    def is_empty(self) -> bool:
        return self.a_lo > self.a_hi or self.b_lo > self.b_hi

    @property
    def n_a(self) -> int:
        return max(0, self.a_hi - self.a_lo + 1)

    @property
    def n_b(self) -> int:
        return max(0, self.b_hi - self.b_lo + 1)

    def __len__(self) -> int:
        return self.n_a * self.n_b

    def vertices(self):
        for a in range(self.a_lo, self.a_hi + 1):
            for b in range(self.b_lo, self.b_hi + 1):
                yield (a, b)

    def expanded(self, m: int) -> "Parallelogram":
        return Parallelogram(self.a_lo - m, self.a_hi + m, self.b_lo - m, self.b_hi + m)

    def contains_box(self, other: "Parallelogram") -> bool:
        return (self.a_lo <= other.a_lo and other.a_hi <= self.a_hi
                and self.b_lo <= other.b_lo and other.b_hi <= self.b_hi)


@dataclass(frozen=True)
class Annulus:
    """A(center; inner, outer) = B(center; outer) \\ B(center; inner)."""

    center: tuple
    inner: int
    outer: int

    def __post_init__(self):
        if not (0 < self.inner < self.outer):
            raise ValueError(f"need 0 < inner < outer, got {self.inner}, {self.outer}")

    @property
    def outer_box(self) -> Parallelogram:
        return Parallelogram.box(self.center, self.outer)

    @property
    def inner_box(self) -> Parallelogram:
        return Parallelogram.box(self.center, self.inner)

    def __contains__(self, v) -> bool:
        return v in self.outer_box and v not in self.inner_box

    def vertices(self):
        for v in self.outer_box.vertices():
            if v not in self.inner_box:
                yield v


def boundary(S):
    """Outer boundary: vertices not in S adjacent to S."""
    S = set(S)
    out = set()
    for v in S:
        for w in neighbors(v):
            if w not in S:
                out.add(w)
    return out


def closure(S):
    S = set(S)
    return S | boundary(S)


def boundary_walk(box: Parallelogram):
    """The box's own boundary ring, counterclockwise from the bottom-left corner.

    Degenerate single-row or single-column boxes are traversed once.
    """
    if box.is_empty():
        return []
    a0, a1, b0, b1 = box.a_lo, box.a_hi, box.b_lo, box.b_hi
    if a0 == a1 and b0 == b1:
        return [(a0, b0)]
    if a0 == a1:
        return [(a0, b) for b in range(b0, b1 + 1)]
    if b0 == b1:
        return [(a, b0) for a in range(a0, a1 + 1)]
    walk = []
    walk.extend((a, b0) for a in range(a0, a1 + 1))          # bottom, +e1
    walk.extend((a1, b) for b in range(b0 + 1, b1 + 1))      # right, +e2
    walk.extend((a, b1) for a in range(a1 - 1, a0 - 1, -1))  # top, -e1
    walk.extend((a0, b) for b in range(b1 - 1, b0, -1))      # left, -e2
    return walk


class LatticePath:
    """Ordered self-avoiding path; consecutive vertices adjacent, all distinct."""

    def __init__(self, vertices):
        vs = [tuple(v) for v in vertices]
        if len(set(vs)) != len(vs):
            raise ValueError("path vertices must be distinct")
        for u, w in zip(vs, vs[1:]):
            if not are_adjacent(u, w):
                raise ValueError(f"non-adjacent consecutive vertices {u}, {w}")
        self.vertices = vs

    def __len__(self):
        return len(self.vertices)

    def __iter__(self):
        return iter(self.vertices)

    def is_non_self_touching(self) -> bool:
        """No two non-consecutive vertices are adjacent."""
        vs = self.vertices
        index = {v: i for i, v in enumerate(vs)}
        for i, v in enumerate(vs):
            for w in neighbors(v):
                j = index.get(w)
                if j is not None and abs(i - j) > 1:
                    return False
        return True


class LatticeLoop:
    """Loop: cyclic sequence with all vertices distinct, consecutive adjacent.

    Equality is up to cyclic rotation (direction is preserved).
    """

    def __init__(self, vertices):
        vs = [tuple(v) for v in vertices]
        if len(vs) < 2:
            raise ValueError("a loop needs at least 2 vertices")
        if len(set(vs)) != len(vs):
            raise ValueError("loop vertices must be distinct")
        n = len(vs)
        for i in range(n):
            if not are_adjacent(vs[i], vs[(i + 1) % n]):
                raise ValueError(f"non-adjacent consecutive loop vertices {vs[i]}, {vs[(i + 1) % n]}")
        self.vertices = vs

    def __len__(self):
        return len(self.vertices)

    def __iter__(self):
        return iter(self.vertices)

    def canonical(self):
        vs = self.vertices
        k = vs.index(min(vs))
        return tuple(vs[k:] + vs[:k])

    def __eq__(self, other):
        return isinstance(other, LatticeLoop) and self.canonical() == other.canonical()

    def __hash__(self):
        return hash(self.canonical())

    def is_non_self_touching(self) -> bool:
        vs = self.vertices
        n = len(vs)
        index = {v: i for i, v in enumerate(vs)}
        for i, v in enumerate(vs):
            for w in neighbors(v):
                j = index.get(w)
                if j is None:
                    continue
                if (i - j) % n not in (0, 1, n - 1):
                    return False
        return True

    def arc(self, u, w):
        """Vertices from u to w following the loop's orientation, inclusive."""
        vs = self.vertices
        i, j = vs.index(tuple(u)), vs.index(tuple(w))
        if i <= j:
            return vs[i:j + 1]
        return vs[i:] + vs[:j + 1]


def loop_decompose(S):
    """Split a vertex set into simple non-touching loops.

    Each connected component must induce a chordless cycle (every vertex with
    exactly two neighbors inside its component); otherwise NotLoopUnion.
    """
    S = set(S)
    loops = []
    unseen = set(S)
    while unseen:
        start = unseen.pop()
        comp = {start}
        stack = [start]
        while stack:
            v = stack.pop()
            for w in neighbors(v):
                if w in unseen:
                    unseen.discard(w)
                    comp.add(w)
                    stack.append(w)
        adj = {v: [w for w in neighbors(v) if w in comp] for v in comp}
        if any(len(ws) != 2 for ws in adj.values()):
            raise NotLoopUnion(f"component of {start} is not a simple loop")
        # walk the cycle
        cycle = [min(comp)]
        prev = None
        while True:
            v = cycle[-1]
            nxt = [w for w in adj[v] if w != prev]
            prev = v
            if nxt[0] == cycle[0]:
                break
            cycle.append(nxt[0])
        if len(cycle) != len(comp):
            raise NotLoopUnion(f"component of {start} is not a single cycle")
        loops.append(LatticeLoop(cycle))
    return loops


def parse_region_literal(text: str):
    """Parse "box cx cy r" or "annulus cx cy r_in r_out" (lattice coefficients)."""
    parts = text.split()
    if not parts:
        raise ValueError("empty region literal")
    kind, args = parts[0], [int(p) for p in parts[1:]]
    if kind == "box" and len(args) == 3:
        return Parallelogram.box((args[0], args[1]), args[2])
    if kind == "annulus" and len(args) == 4:
        return Annulus((args[0], args[1]), args[2], args[3])
    raise ValueError(f"bad region literal {text!r}; expected 'box cx cy r' or "
                     f"'annulus cx cy r_in r_out'")
