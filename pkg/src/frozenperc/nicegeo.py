"""Deterministic region combinatorics: niceness checking, clearance
transforms, and extraction of thick grid paths with a verified diameter
guarantee.

All diameters in this module are coefficient L-inf (the box metric that
matches the grid tiling).  The extractor follows the constant cascade
alpha = floor(a/6) - 2, beta = floor(alpha/3), eps = floor(beta/4) - 2 and
emits the floor(eps/2)-grid approximation of a longest shortest path through
the eps-clearance core; the diameter bound diam(C) - 2b - 2a - 12 is checked
explicitly before returning and GuaranteeNotMet is raised otherwise, never a
silently short path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import _kernels as K
from .lattice import NotLoopUnion, Parallelogram

LATTICE_STRUCTURE = np.array([[0, 1, 1], [1, 1, 1], [1, 1, 0]], dtype=np.uint8)


class GuaranteeNotMet(RuntimeError):
    """The extracted gridpath failed verification: either the input was not
    (a, b)-nice or there is an implementation bug."""


class Region:
    """Finite induced-subgraph region: explicit cells or a procedural mask.

    The canonical representation is a boolean grid over a bounding window,
    a-major: mask[i, j] covers vertex (window.a_lo + i, window.b_lo + j).
    """

    def __init__(self, window: Parallelogram, mask: np.ndarray, name: str = "explicit",
                 params: dict = None):
        if mask.shape != (window.n_a, window.n_b):
            raise ValueError(f"mask shape {mask.shape} does not match window {window}")
        self.window = window
        self.mask = mask.astype(bool)
        self.name = name
        self.params = params or {}

    # -- constructors

    @classmethod
    def from_cells(cls, cells) -> "Region":
        cells = [tuple(c) for c in cells]
        if not cells:
            raise ValueError("empty region")
        amin = min(c[0] for c in cells)
        amax = max(c[0] for c in cells)
        bmin = min(c[1] for c in cells)
        bmax = max(c[1] for c in cells)
        w = Parallelogram(amin, amax, bmin, bmax)
        mask = np.zeros((w.n_a, w.n_b), bool)
        for a, b in cells:
            mask[a - amin, b - bmin] = True
        return cls(w, mask)

    @classmethod
    def corridor(cls, length: int, width: int) -> "Region":
        """Straight corridor [0, length-1] x [0, width-1]."""
        w = Parallelogram(0, length - 1, 0, width - 1)
        return cls(w, np.ones((length, width), bool), "corridor",
                   {"length": length, "width": width})

    @classmethod
    def l_shape(cls, arm: int, width: int) -> "Region":
        """Two width-wide arms of the given length joined at the origin corner."""
        w = Parallelogram(0, arm - 1, 0, arm - 1)
        mask = np.zeros((arm, arm), bool)
        mask[:, :width] = True
        mask[:width, :] = True
        return cls(w, mask, "l-shape", {"arm": arm, "width": width})

    @classmethod
    def blob_union(cls, blobs) -> "Region":
        """Union of coefficient boxes B(center; r); blobs = [(ca, cb, r), ...]."""
        blobs = [(int(a), int(b), int(r)) for a, b, r in blobs]
        amin = min(a - r for a, b, r in blobs)
        amax = max(a + r for a, b, r in blobs)
        bmin = min(b - r for a, b, r in blobs)
        bmax = max(b + r for a, b, r in blobs)
        w = Parallelogram(amin, amax, bmin, bmax)
        mask = np.zeros((w.n_a, w.n_b), bool)
        for a, b, r in blobs:
            mask[a - r - amin:a + r + 1 - amin, b - r - bmin:b + r + 1 - bmin] = True
        return cls(w, mask, "blob-union", {"blobs": blobs})

    @classmethod
    def from_json(cls, obj) -> "Region":
        if isinstance(obj, str):
            obj = json.loads(obj)
        if "cells" in obj:
            return cls.from_cells(obj["cells"])
        name = obj["procedural"]
        params = obj.get("params", {})
        builders = {"corridor": cls.corridor, "l-shape": cls.l_shape,
                    "blob-union": cls.blob_union}
        if name not in builders:
            raise ValueError(f"unknown procedural region {name!r}")
        return builders[name](**params)

    def to_json(self) -> dict:
        if self.name == "explicit":
            return {"cells": [[int(a), int(b)] for a, b in self.cells()]}
        w = self.window
        return {"procedural": self.name, "params": self.params,
                "window": [w.a_lo, w.a_hi, w.b_lo, w.b_hi]}

    # -- queries

    def __contains__(self, v) -> bool:
        w = self.window
        if v not in w:
            return False
        return bool(self.mask[v[0] - w.a_lo, v[1] - w.b_lo])

    def size(self) -> int:
        return int(self.mask.sum())

    def cells(self):
        w = self.window
        for i, j in np.argwhere(self.mask):
            yield (int(i) + w.a_lo, int(j) + w.b_lo)

    def diameter(self) -> int:
        """Coefficient L-inf diameter (max bbox extent)."""
        idx = np.argwhere(self.mask)
        if idx.size == 0:
            return 0
        return int(max(idx[:, 0].max() - idx[:, 0].min(),
                       idx[:, 1].max() - idx[:, 1].min()))

    def is_connected(self) -> bool:
        _, n = ndimage.label(self.mask, structure=LATTICE_STRUCTURE)
        return n == 1

    def boundary_cells(self):
        """Outer boundary as (a, b) vertices (mask dilation minus mask)."""
        padded = np.pad(self.mask, 1)
        dil = ndimage.binary_dilation(padded, structure=LATTICE_STRUCTURE)
        bnd = dil & ~padded
        w = self.window
        return [(int(i) + w.a_lo - 1, int(j) + w.b_lo - 1)
                for i, j in np.argwhere(bnd)]

    def intersect_box(self, box: Parallelogram) -> "Region":
        w = self.window
        lo_a = max(w.a_lo, box.a_lo)
        hi_a = min(w.a_hi, box.a_hi)
        lo_b = max(w.b_lo, box.b_lo)
        hi_b = min(w.b_hi, box.b_hi)
        if lo_a > hi_a or lo_b > hi_b:
            raise ValueError("empty intersection")
        sub = self.mask[lo_a - w.a_lo:hi_a - w.a_lo + 1,
                        lo_b - w.b_lo:hi_b - w.b_lo + 1]
        return Region(Parallelogram(lo_a, hi_a, lo_b, hi_b), sub.copy())


@dataclass
class NiceResult:
    """Outcome of the niceness check with a violation witness on failure."""

    ok: bool
    condition: int = 0          # 1, 2 or 3 when failed
    witness: object = None      # offending loop / vertex pair
    loops: list = field(default_factory=list)

    def __bool__(self):
        return self.ok


# ccw hexagon wall directions: D[k] - D[k+1] = D[k-1]
_CCW = ((1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1))


def region_boundary_loops(C: Region):
    """Decompose the outer boundary of a region into loops by wall tracing.

    Walks the hexagon-edge contours between the region and its complement;
    each contour yields the cyclic sequence of outside vertices along it.  A
    vertex repeated within a contour, shared between contours, or adjacent
    across two contours means the boundary is not a disjoint union of
    non-touching loops (the loops themselves may touch themselves, which the
    loop definition allows).
    """
    inside = set()
    walls = set()
    for o in C.boundary_cells():
        for k, d in enumerate(_CCW):
            r = (o[0] + d[0], o[1] + d[1])
            if r in C:
                inside.add(r)
                # wall of cell r facing o: direction from r to o
                kk = (k + 3) % 6
                walls.add((r, kk))

    def nbr(v, k):
        d = _CCW[k]
        return (v[0] + d[0], v[1] + d[1])

    loops = []
    seen = set()
    for start in sorted(walls):
        if start in seen:
            continue
        cyc = []
        cur = start
        while True:
            seen.add(cur)
            r, k = cur
            cyc.append(nbr(r, k))
            t = nbr(r, (k + 1) % 6)
            if t in C:
                cur = (t, (k - 1) % 6)
            else:
                cur = (r, (k + 1) % 6)
            if cur == start:
                break
        # collapse consecutive duplicates (a vertex can face several walls)
        out = []
        for v in cyc:
            if not out or out[-1] != v:
                out.append(v)
        while len(out) > 1 and out[0] == out[-1]:
            out.pop()
        if len(out) != len(set(out)):
            raise NotLoopUnion(f"boundary contour revisits a vertex near {out[0]}")
        loops.append(out)
    byvertex = {}
    for li, lp in enumerate(loops):
        for v in lp:
            if v in byvertex:
                raise NotLoopUnion(f"boundary vertex {v} lies on two contours")
            byvertex[v] = li
    from .lattice import neighbors as _nbrs
    for li, lp in enumerate(loops):
        for v in lp:
            for u in _nbrs(v):
                lj = byvertex.get(u)
                if lj is not None and lj != li:
                    raise NotLoopUnion(f"boundary loops touch at {v} ~ {u}")
    return loops


def _loop_prefix_tables(vs):
    a = np.array([v[0] for v in vs], np.int64)
    b = np.array([v[1] for v in vs], np.int64)
    return a, b


def _arc_diameter(a, b, i, j):
    """Coefficient diameter of the loop arc from index i to j (forward)."""
    n = len(a)
    if i <= j:
        sa, sb = a[i:j + 1], b[i:j + 1]
        return int(max(sa.max() - sa.min(), sb.max() - sb.min()))
    sa = np.concatenate((a[i:], a[:j + 1]))
    sb = np.concatenate((b[i:], b[:j + 1]))
    return int(max(sa.max() - sa.min(), sb.max() - sb.min()))


def is_nice(C: Region, a: int, b: int, D=None) -> NiceResult:
    """Check the three niceness conditions; returns ok plus a witness.

    (1) connected induced subgraph; (2) the outer boundary splits into simple
    non-touching loops of diameter > 2b; (3) boundary vertices (inside D)
    within distance a lie on one loop with an arc of diameter <= b between
    them.  Distances and diameters are coefficient L-inf.
    """
    if not C.is_connected():
        return NiceResult(False, 1, "region not connected")
    bnd = C.boundary_cells()
    try:
        loops = region_boundary_loops(C)
    except NotLoopUnion as e:
        return NiceResult(False, 2, str(e))
    for lp in loops:
        av = [v[0] for v in lp]
        bv = [v[1] for v in lp]
        d = max(max(av) - min(av), max(bv) - min(bv))
        if d <= 2 * b:
            return NiceResult(False, 2, lp)
    if D is None:
        def in_d(v):
            return True
    elif isinstance(D, Parallelogram):
        def in_d(v):
            return v in D
    else:
        def in_d(v):
            return v in D

    loop_of = {}
    index_in = {}
    tables = []
    for li, lp in enumerate(loops):
        tables.append(_loop_prefix_tables(lp))
        for idx, v in enumerate(lp):
            loop_of[v] = li
            index_in[v] = idx

    # spatial hash on cells of side (a + 1) to find pairs within distance a
    cell = {}
    pts = [v for v in bnd if in_d(v)]
    for v in pts:
        cell.setdefault((v[0] // (a + 1), v[1] // (a + 1)), []).append(v)
    for v in pts:
        ca, cb = v[0] // (a + 1), v[1] // (a + 1)
        for da in (-1, 0, 1):
            for db in (-1, 0, 1):
                for u in cell.get((ca + da, cb + db), ()):
                    if u <= v:
                        continue
                    if max(abs(u[0] - v[0]), abs(u[1] - v[1])) > a:
                        continue
                    if loop_of[u] != loop_of[v]:
                        return NiceResult(False, 3, (v, u), loops)
                    li = loop_of[v]
                    ta, tb = tables[li]
                    i, j = index_in[v], index_in[u]
                    d1 = _arc_diameter(ta, tb, i, j)
                    d2 = _arc_diameter(ta, tb, j, i)
                    if min(d1, d2) > b:
                        return NiceResult(False, 3, (v, u), loops)
    return NiceResult(True, loops=loops)


@dataclass
class ClearanceField:
    """Per-vertex clearance radius: largest r with B(v; r) inside the region."""

    region: Region
    grid: np.ndarray
    cap: int

    def at(self, v) -> int:
        w = self.region.window
        if v not in self.region:
            raise KeyError(f"{v} not in region")
        return int(self.grid[v[0] - w.a_lo, v[1] - w.b_lo])


def clearance_transform(C: Region, cap: int = None) -> ClearanceField:
    """Clearance radii via a two-pass Chebyshev chamfer scan, the grid
    equivalent of a multi-source BFS from the boundary in the box metric.

    Values are exact up to the cap (default: no effective cap).
    """
    if cap is None:
        cap = max(C.window.n_a, C.window.n_b)
    cap = min(int(cap), 65533)
    grid = K.chamfer_clearance(C.mask.astype(np.uint8), cap)
    return ClearanceField(region=C, grid=grid, cap=cap)


@dataclass(frozen=True)
class GridPath:
    """Sequence of side-sharing grid cells B((2M+1) z; M), z a lattice vertex.

    For M = 0 the cells are single vertices and the chain degrades to a plain
    lattice path (side-sharing is read as lattice adjacency).
    """

    M: int
    cells: tuple  # grid indices z = (za, zb)

    def __len__(self):
        return len(self.cells)

    def cell_box(self, z) -> Parallelogram:
        s = 2 * self.M + 1
        return Parallelogram.box((s * z[0], s * z[1]), self.M)

    def diameter(self) -> int:
        """Coefficient L-inf extent of the union of the cells."""
        if not self.cells:
            return 0
        za = [z[0] for z in self.cells]
        zb = [z[1] for z in self.cells]
        s = 2 * self.M + 1
        return int(max((max(za) - min(za)) * s, (max(zb) - min(zb)) * s) + 2 * self.M)


def cascade_constants(a: int):
    """The proof's alpha, beta, eps ladder; eps floors at 0 for small a."""
    alpha = a // 6 - 2
    beta = alpha // 3
    eps = beta // 4 - 2
    return alpha, beta, max(eps, 0)


def verify_gridpath(g: GridPath, C: Region):
    """Check the cell chain, containment in C, and report the diameter."""
    cells = g.cells
    if len(set(cells)) != len(cells):
        return False, g.diameter()
    for z, z2 in zip(cells, cells[1:]):
        da, db = z2[0] - z[0], z2[1] - z[1]
        if g.M == 0:
            if (da, db) not in ((1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)):
                return False, g.diameter()
        elif abs(da) + abs(db) != 1:
            return False, g.diameter()
    w = C.window
    s = 2 * g.M + 1
    for z in cells:
        box = g.cell_box(z)
        if not w.contains_box(box):
            return False, g.diameter()
        sub = C.mask[box.a_lo - w.a_lo:box.a_hi - w.a_lo + 1,
                     box.b_lo - w.b_lo:box.b_hi - w.b_lo + 1]
        if not sub.all():
            return False, g.diameter()
    return True, g.diameter()


def _cell_of(A, B, M):
    s = 2 * M + 1
    return ((A + M) // s, (B + M) // s)


def _grid_approximation(path_ab, M, C: Region) -> GridPath:
    """Containing cells of the path, deduplicated; diagonal transitions get a
    side-adjacent bridging cell that must itself sit inside C."""
    cells = []
    for A, B in path_ab:
        z = _cell_of(A, B, M)
        if not cells or cells[-1] != z:
            cells.append(z)
    if M == 0:
        return GridPath(M=0, cells=tuple(cells))
    out = []
    g = GridPath(M=M, cells=())
    for z in cells:
        if out:
            prev = out[-1]
            da, db = z[0] - prev[0], z[1] - prev[1]
            if abs(da) + abs(db) == 2:  # diagonal crossing at a cell corner
                for cand in ((prev[0] + da, prev[1]), (prev[0], prev[1] + db)):
                    box = GridPath(M=M, cells=()).cell_box(cand)
                    w = C.window
                    if not w.contains_box(box):
                        continue
                    sub = C.mask[box.a_lo - w.a_lo:box.a_hi - w.a_lo + 1,
                                 box.b_lo - w.b_lo:box.b_hi - w.b_lo + 1]
                    if sub.all():
                        out.append(cand)
                        break
                else:
                    raise GuaranteeNotMet(
                        f"no bridging cell inside the region between {prev} and {z}")
        out.append(z)
    # the bridge may have introduced consecutive duplicates
    dedup = [out[0]]
    for z in out[1:]:
        if z != dedup[-1]:
            dedup.append(z)
    # drop immediate backtracks cell -> other -> cell
    i = 0
    clean = []
    for z in dedup:
        if len(clean) >= 2 and clean[-2] == z:
            clean.pop()
        else:
            clean.append(z)
    if len(set(clean)) != len(clean):
        # revisited cells: keep the stretch between first and last occurrence
        # of the repeated cell collapsed
        seen = {}
        res = []
        for z in clean:
            if z in seen:
                res = res[:seen[z] + 1]
                seen = {c: t for t, c in enumerate(res)}
            else:
                seen[z] = len(res)
                res.append(z)
        clean = res
    return GridPath(M=M, cells=tuple(clean))


def _extract_from_mask(C: Region, a: int, b: int, diam_ref: int) -> GridPath:
    alpha, beta, eps = cascade_constants(a)
    M = eps // 2
    bound = diam_ref - 2 * b - 2 * a - 12
    clearance = clearance_transform(C, cap=eps + 1)
    core = (clearance.grid >= eps) & C.mask
    if not core.any():
        if bound <= 0:
            return GridPath(M=M, cells=())
        raise GuaranteeNotMet("empty clearance core but positive diameter bound")
    labels, n = ndimage.label(core, structure=LATTICE_STRUCTURE)
    # choose the component with the largest coefficient extent
    best, best_ext = 0, -1
    idx = np.argwhere(core)
    lab_at = labels[idx[:, 0], idx[:, 1]]
    for lv in range(1, n + 1):
        pts = idx[lab_at == lv]
        ext = int(max(pts[:, 0].max() - pts[:, 0].min(),
                      pts[:, 1].max() - pts[:, 1].min()))
        if ext > best_ext:
            best, best_ext = lv, ext
    comp = labels == best
    pts = idx[lab_at == best]
    # endpoints realizing the component's coefficient diameter
    if (pts[:, 0].max() - pts[:, 0].min()) >= (pts[:, 1].max() - pts[:, 1].min()):
        ax = 0
    else:
        ax = 1
    u = pts[pts[:, ax].argmin()]
    v = pts[pts[:, ax].argmax()]
    dist = np.empty(comp.shape, np.uint32)
    queue = np.empty(comp.size, np.int32)
    K.grid_bfs(comp.astype(np.uint8), int(u[0]), int(u[1]), dist, queue)
    dv = int(dist[int(v[0]), int(v[1])])
    if dv == 0xFFFFFFFF:
        raise GuaranteeNotMet("diameter endpoints fell in different core parts")
    out = np.empty(dv + 1, np.int64)
    plen = K.descend_path(dist, comp.astype(np.uint8), int(v[0]), int(v[1]), out)
    if plen < 0:
        raise GuaranteeNotMet("path descent failed")
    w = C.window
    nb = comp.shape[1]
    path_ab = [(int(p) // nb + w.a_lo, int(p) % nb + w.b_lo) for p in out[:plen]]
    g = _grid_approximation(path_ab, M, C)
    ok, diam = verify_gridpath(g, C)
    if not ok or diam < bound:
        raise GuaranteeNotMet(
            f"gridpath verification failed: ok={ok}, diameter {diam} < bound {bound}")
    return g


def extract_gridpath(C: Region, a: int, b: int) -> GridPath:
    """Thick path through an (a, b)-nice region with verified diameter
    at least diam(C) - 2b - 2a - 12.

    The lemma's guarantee needs a >= 2000; smaller a runs in generalized mode
    with the same constant cascade (the postcondition check still gates the
    result either way).
    """
    return _extract_from_mask(C, a, b, C.diameter())


def extract_gridpath_local(C: Region, a: int, b: int, c: int,
                           component_of=None) -> GridPath:
    """extract_gridpath for a connected component of C intersected with B(c);
    the bound is relative to that component's diameter."""
    box = Parallelogram.box((0, 0), c)
    try:
        clipped = C.intersect_box(box)
    except ValueError:
        return GridPath(M=cascade_constants(a)[2] // 2, cells=())
    labels, n = ndimage.label(clipped.mask, structure=LATTICE_STRUCTURE)
    if n == 0:
        return GridPath(M=cascade_constants(a)[2] // 2, cells=())
    if component_of is not None:
        w = clipped.window
        lv = labels[component_of[0] - w.a_lo, component_of[1] - w.b_lo]
        if lv == 0:
            raise ValueError(f"{component_of} not in the clipped region")
    else:
        # largest-extent component
        idx = np.argwhere(clipped.mask)
        lab_at = labels[idx[:, 0], idx[:, 1]]
        lv, best_ext = 1, -1
        for cand in range(1, n + 1):
            pts = idx[lab_at == cand]
            ext = int(max(pts[:, 0].max() - pts[:, 0].min(),
                          pts[:, 1].max() - pts[:, 1].min()))
            if ext > best_ext:
                lv, best_ext = cand, ext
    comp_region = Region(clipped.window, labels == lv)
    return _extract_from_mask(comp_region, a, b, comp_region.diameter())
