"""Static-configuration detectors: crossings, nets, mixed arm events, winding
numbers, and lowest two-arm vertices.

Arm events are decided exactly by (1) decomposing the annulus into crossing
clusters ("sectors") with a counterclockwise cyclic order anchored at inner
ring-walk positions, (2) computing vertex-disjoint arm capacities per sector
by unit-vertex-capacity max flow (Menger), and (3) matching the color word
against the sector word.  Planarity makes sector contact sets cyclically
non-interleaved, so arms of one cluster occupy consecutive positions; the one
branch that flow counting alone cannot settle (a block mixing half-confined
and unrestricted arms inside a single cluster) is first bounded by flow
necessary conditions and then certified by a budgeted disjoint-path search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_flow

from .lattice import (Annulus, Parallelogram, are_adjacent, embed, neighbors)

# 6-neighbor connectivity on the (a, b) grid
LATTICE_STRUCTURE = np.array([[0, 1, 1], [1, 1, 1], [1, 1, 0]], dtype=np.uint8)

HALF_SIDES = ("upper", "lower", "left", "right")

OPEN, CLOSED = "o", "c"

_CONFIRM_BUDGET = 50_000


class AnnulusDegenerate(ValueError):
    pass


class CenterOnPath(ValueError):
    pass


@dataclass(frozen=True)
class ArmSpec:
    """k arms with color word sigma, the first l confined to a half annulus."""

    k: int
    l: int
    sigma: tuple
    half: str = "upper"

    def __post_init__(self):
        sigma = tuple(self.sigma)
        object.__setattr__(self, "sigma", sigma)
        if self.k < 1 or len(sigma) != self.k:
            raise ValueError(f"sigma length {len(sigma)} != k = {self.k}")
        if not all(c in (OPEN, CLOSED) for c in sigma):
            raise ValueError(f"sigma letters must be 'o'/'c', got {sigma}")
        if not 0 <= self.l <= self.k:
            raise ValueError(f"need 0 <= l <= k, got l = {self.l}")
        if self.half not in HALF_SIDES:
            raise ValueError(f"half must be one of {HALF_SIDES}")

    @property
    def n0(self) -> int:
        return 10 * self.k


ALT4 = ArmSpec(4, 0, (OPEN, CLOSED, OPEN, CLOSED))


class ArrayColors:
    """Color view backed by plain boolean grids (used for escalated kernel reps)."""

    def __init__(self, window: Parallelogram, open_mask: np.ndarray,
                 closed_mask: np.ndarray = None):
        self.window = window
        self._open = open_mask
        self._closed = ~open_mask if closed_mask is None else closed_mask

    def open_mask(self) -> np.ndarray:
        return self._open

    def closed_mask(self) -> np.ndarray:
        return self._closed

    def is_open(self, v) -> bool:
        return bool(self._open[v[0] - self.window.a_lo, v[1] - self.window.b_lo])

    def is_closed(self, v) -> bool:
        return bool(self._closed[v[0] - self.window.a_lo, v[1] - self.window.b_lo])


def _masks(view):
    return view.open_mask(), view.closed_mask()


def _subgrid(mask: np.ndarray, window: Parallelogram, box: Parallelogram) -> np.ndarray:
    if not window.contains_box(box):
        raise ValueError(f"box {box} not inside the field window {window}")
    i0 = box.a_lo - window.a_lo
    j0 = box.b_lo - window.b_lo
    return mask[i0:i0 + box.n_a, j0:j0 + box.n_b]


# ---------------------------------------------------------------------------
# crossings and nets


def has_crossing(view, box: Parallelogram, orientation: str = "horizontal",
                 color: str = OPEN) -> bool:
    """Monochromatic crossing between opposite sides of a parallelogram.

    Horizontal joins the a_lo and a_hi columns, vertical the b_lo and b_hi
    rows, by a path inside the box.
    """
    if box.is_empty():
        raise ValueError("box must be nonempty")
    mask = _subgrid(_masks(view)[0] if color == OPEN else _masks(view)[1],
                    view.window, box)
    if orientation == "horizontal":
        first, last = mask[0, :], mask[-1, :]
    elif orientation == "vertical":
        first, last = mask[:, 0], mask[:, -1]
    else:
        raise ValueError(f"orientation must be horizontal/vertical, got {orientation!r}")
    if not (first.any() and last.any()):
        return False
    labels, _ = ndimage.label(mask, structure=LATTICE_STRUCTURE)
    if orientation == "horizontal":
        side_a, side_b = labels[0, :], labels[-1, :]
    else:
        side_a, side_b = labels[:, 0], labels[:, -1]
    return bool(np.intersect1d(side_a[side_a > 0], side_b[side_b > 0]).size)


def has_net(view, box: Parallelogram, f: float, color: str = OPEN) -> bool:
    """Open (closed) f-net: every width-floor(f) vertical strip is vertically
    crossed and every height-floor(f) horizontal strip horizontally crossed.

    Strip indexing follows the defining tiling, so the last strips may stick
    out past the box; the field window must cover the overhang.
    """
    if f < 1:
        raise ValueError("need f >= 1")
    w = int(math.floor(f))
    a, b = box.a_lo, box.a_hi
    c, d = box.b_lo, box.b_hi
    for i in range((b - a) // w + 1):
        strip = Parallelogram(a + i * w, a + (i + 1) * w - 1, c, d)
        if not has_crossing(view, strip, "vertical", color):
            return False
    for j in range((d - c) // w + 1):
        strip = Parallelogram(a, b, c + j * w, c + (j + 1) * w - 1)
        if not has_crossing(view, strip, "horizontal", color):
            return False
    return True


# ---------------------------------------------------------------------------
# annulus sector machinery


def _ring_walk(m: int):
    """CCW walk of the centered ring max(|a|,|b|) = m, from (-m, -m)."""
    walk = []
    walk.extend(((-m + t, -m) for t in range(2 * m)))
    walk.extend(((m, -m + t) for t in range(2 * m)))
    walk.extend(((m - t, m) for t in range(2 * m)))
    walk.extend(((-m, m - t) for t in range(2 * m)))
    return walk


def _half_ok(a: int, b: int, half: str) -> bool:
    if half == "upper":
        return b >= 0
    if half == "lower":
        return b <= 0
    if half == "left":
        return a <= 0
    return a >= 0


_HALF_CUT_FRac = {"upper": 0, "lower": 5, "left": 3, "right": 0}


class _Sector:
    __slots__ = ("color", "anchor", "label", "flow", "parent")

    def __init__(self, color, anchor, label):
        self.color = color
        self.anchor = anchor
        self.label = label
        self.flow = None       # lazy Menger count
        self.parent = None     # full-annulus label for half sectors

    def __repr__(self):
        return f"_Sector({self.color}, t={self.anchor}, lab={self.label})"


class _AnnulusContext:
    """Per-call scratch: masks, labelings, sector lists, flow cache."""

    def __init__(self, view, ann: Annulus):
        if ann.inner >= ann.outer:
            raise AnnulusDegenerate(f"inner {ann.inner} >= outer {ann.outer}")
        self.ann = ann
        self.n = 2 * ann.outer + 1
        outer_box = ann.outer_box
        om, cm = _masks(view)
        self.open_grid = _subgrid(om, view.window, outer_box)
        self.closed_grid = _subgrid(cm, view.window, outer_box)
        inner, outer = ann.inner, ann.outer
        aa, bb = np.meshgrid(np.arange(-outer, outer + 1),
                             np.arange(-outer, outer + 1), indexing="ij")
        self.region = (np.maximum(np.abs(aa), np.abs(bb)) > inner)
        self.aa, self.bb = aa, bb
        self._labels = {}
        self._flowcache = {}
        self._sectors = {}

    def _grid(self, color):
        return self.open_grid if color == OPEN else self.closed_grid

    def labels(self, color, half=None):
        key = (color, half)
        if key not in self._labels:
            mask = self._grid(color) & self.region
            if half is not None:
                mask = mask & _half_mask(self.aa, self.bb, half)
            lab, _ = ndimage.label(mask, structure=LATTICE_STRUCTURE)
            self._labels[key] = lab
        return self._labels[key]

    def sectors(self, half=None):
        """Crossing clusters of both colors, sorted by (rebased) inner anchor."""
        if half in self._sectors:
            return self._sectors[half]
        inner, outer = self.ann.inner, self.ann.outer
        m = inner + 1
        ring = _ring_walk(m)
        cut = _HALF_CUT_FRac[half] * m if half is not None else 0
        out = []
        for color in (OPEN, CLOSED):
            lab = self.labels(color, half)
            anchor = {}
            for t, (a, b) in enumerate(ring):
                if (a == m and b == m) or (a == -m and b == -m):
                    continue  # not adjacent to the inner box
                if half is not None and not _half_ok(a, b, half):
                    continue
                lv = lab[a + outer, b + outer]
                if lv > 0:
                    ta = (t - cut) % (8 * m)
                    if lv not in anchor or ta < anchor[lv]:
                        anchor[lv] = ta
            rim = set()
            for a, b in _ring_walk(outer):
                if half is not None and not _half_ok(a, b, half):
                    continue
                lv = lab[a + outer, b + outer]
                if lv > 0:
                    rim.add(lv)
            for lv, ta in anchor.items():
                if lv in rim:
                    s = _Sector(color, ta, lv)
                    if half is not None:
                        full = self.labels(color)
                        cells = np.argwhere(lab == lv)
                        i, j = cells[0]
                        s.parent = (color, int(full[i, j]))
                    else:
                        s.parent = (color, int(lv))
                    out.append(s)
        out.sort(key=lambda s: s.anchor)
        self._sectors[half] = out
        return out

    def _contact_masks(self, half):
        inner, outer = self.ann.inner, self.ann.outer
        m = inner + 1
        start = np.zeros((self.n, self.n), bool)
        for a, b in _ring_walk(m):
            if (a == m and b == m) or (a == -m and b == -m):
                continue
            if half is not None and not _half_ok(a, b, half):
                continue
            start[a + outer, b + outer] = True
        end = np.zeros((self.n, self.n), bool)
        for a, b in _ring_walk(outer):
            if half is not None and not _half_ok(a, b, half):
                continue
            end[a + outer, b + outer] = True
        return start, end

    def menger(self, sector: _Sector, half=None) -> int:
        """Max number of vertex-disjoint inner-to-rim arms within the sector."""
        key = (sector.color, half, sector.label)
        if key in self._flowcache:
            return self._flowcache[key]
        lab = self.labels(sector.color, half)
        cells = lab == sector.label
        start, end = self._contact_masks(half)
        val = _vertex_disjoint_flow(cells, cells & start, cells & end)
        self._flowcache[key] = val
        return val


def _half_mask(aa, bb, half):
    if half == "upper":
        return bb >= 0
    if half == "lower":
        return bb <= 0
    if half == "left":
        return aa <= 0
    return aa >= 0


def _vertex_disjoint_flow(cells: np.ndarray, sources: np.ndarray,
                          sinks: np.ndarray) -> int:
    """Menger count via unit-vertex-capacity max flow (vertex splitting)."""
    idx = np.flatnonzero(cells.ravel())
    if idx.size == 0 or not sources.any() or not sinks.any():
        return 0
    na, nb = cells.shape
    pos = -np.ones(na * nb, np.int64)
    pos[idx] = np.arange(idx.size)
    nv = idx.size
    # nodes: in(i) = 2i, out(i) = 2i + 1, source = 2nv, sink = 2nv + 1
    src, snk = 2 * nv, 2 * nv + 1
    rows = [2 * np.arange(nv)]
    cols = [2 * np.arange(nv) + 1]
    pos2 = pos.reshape(na, nb)
    padded = -np.ones((na + 2, nb + 2), np.int64)
    padded[1:-1, 1:-1] = pos2
    for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)):
        shifted = padded[1 + di:na + 1 + di, 1 + dj:nb + 1 + dj]
        ok = (pos2 >= 0) & (shifted >= 0)
        rows.append(2 * pos2[ok] + 1)
        cols.append(2 * shifted[ok])
    sflat = pos[np.flatnonzero((sources & cells).ravel())]
    tflat = pos[np.flatnonzero((sinks & cells).ravel())]
    rows.append(np.full(sflat.size, src))
    cols.append(2 * sflat)
    rows.append(2 * tflat + 1)
    cols.append(np.full(tflat.size, snk))
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    graph = csr_matrix((np.ones(rows.size, np.int32), (rows, cols)),
                       shape=(2 * nv + 2, 2 * nv + 2))
    return int(maximum_flow(graph, src, snk).flow_value)


# ---------------------------------------------------------------------------
# word matching


def _rotations(pattern):
    k = len(pattern)
    seen = set()
    out = []
    for r in range(k):
        rot = tuple(pattern[(i + r) % k] for i in range(k))
        if rot not in seen:
            seen.add(rot)
            out.append(rot)
    return out


def _embed_linear(pattern, sectors, capfn):
    """Monotone embedding of (color, ...) pattern into an ordered sector list.

    Consecutive equal positions may share a sector up to its capacity; a
    sector hosts one contiguous block.  capfn(sector) is evaluated lazily.
    """
    k = len(pattern)

    # states: (position, sector index of the previous arm, count hosted there);
    # a crossing sector carries one arm for free, so flows are only computed
    # for within-sector multiplicities
    def dfs(pos, prev_s, cnt):
        if pos == k:
            return True
        color = pattern[pos][0]
        # continue in the same sector
        if prev_s >= 0 and sectors[prev_s].color == color and cnt + 1 <= capfn(sectors[prev_s]):
            if dfs(pos + 1, prev_s, cnt + 1):
                return True
        lo = prev_s + 1 if prev_s >= 0 else 0
        for s in range(lo, len(sectors)):
            if sectors[s].color == color:
                if dfs(pos + 1, s, 1):
                    return True
        return False

    return dfs(0, -1, 0)


def _embed_cyclic(sigma, sectors, capfn):
    """Cyclic embedding of the plain color word sigma into the sector cycle."""
    cnt = len(sectors)
    if cnt == 0:
        return False
    k = len(sigma)
    patterns = _rotations([(c,) for c in sigma])
    # single-cluster family: all arms one sector (sigma must be constant)
    if len(set(sigma)) == 1:
        for sec in sectors:
            if sec.color == sigma[0] and capfn(sec) >= k:
                return True
    for rot in patterns:
        # cut at a color change so blocks do not wrap
        if k > 1 and rot[0][0] == rot[-1][0] and len(set(sigma)) > 1:
            continue
        for off in range(cnt):
            ordered = [sectors[(off + i) % cnt] for i in range(cnt)]
            if _embed_linear(rot, ordered, capfn):
                return True
    return False


# ---------------------------------------------------------------------------
# mixed half/full matching


def _confirm_mixed_block(ctx: _AnnulusContext, sector: _Sector, block, half):
    """Budgeted exact search: disjoint arms inside one cluster realizing a
    block that mixes half-confined and unrestricted arms.

    block: list of bools (True = half-confined) in anchor order.  Flow
    necessary conditions already hold when this is called.  Returns True,
    False, or None when the budget runs out (caller then accepts the flow
    verdict; see ledger).
    """
    lab = ctx.labels(sector.color)
    cells = lab == sector.label
    hmask = _half_mask(ctx.aa, ctx.bb, half)
    start, end = ctx._contact_masks(None)
    sources = cells & start
    sinks = cells & end
    na, nb = cells.shape
    budget = [_CONFIRM_BUDGET]

    ring = _ring_walk(ctx.ann.inner + 1)
    ring_len = len(ring)
    order = {}
    outer = ctx.ann.outer
    for t, (a, b) in enumerate(ring):
        order[(a + outer, b + outer)] = t
    raw = sorted(order[(i, j)] for i, j in np.argwhere(sources))
    # the cluster's contact set is one cyclic arc; rebase anchors past its
    # largest gap so ascending order is the true ccw order along the arc
    gap_at, gap = raw[0], raw[0] + ring_len - raw[-1]
    for x, y in zip(raw, raw[1:]):
        if y - x > gap:
            gap, gap_at = y - x, y
    srcs = sorted((((order[(i, j)] - gap_at) % ring_len, i, j)
                   for i, j in np.argwhere(sources)), key=lambda x: x[0])

    steps = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1))

    def can_reach_sink(i0, j0, allowed, used, onpath):
        stack = [(i0, j0)]
        seen = {(i0, j0)}
        while stack:
            i, j = stack.pop()
            if sinks[i, j]:
                return True
            for di, dj in steps:
                c = (i + di, j + dj)
                if not (0 <= c[0] < na and 0 <= c[1] < nb):
                    continue
                if c in seen or c in onpath or c in used or not allowed[c]:
                    continue
                seen.add(c)
                stack.append(c)
        return False

    def paths_from(i0, j0, allowed, used):
        """DFS over chordless paths from (i0, j0) to the rim inside allowed.

        Stops each branch at its first rim hit (longer paths only use more
        vertices) and prunes heads cut off from the rim.
        """
        path = [(i0, j0)]
        onpath = {(i0, j0)}

        def extend():
            if budget[0] <= 0:
                yield None
                return
            budget[0] -= 1
            i, j = path[-1]
            if sinks[i, j]:
                yield list(path)
                return
            if not can_reach_sink(i, j, allowed, used, onpath - {(i, j)}):
                return
            for di, dj in steps:
                i2, j2 = i + di, j + dj
                if not (0 <= i2 < na and 0 <= j2 < nb):
                    continue
                if not allowed[i2, j2] or (i2, j2) in onpath or (i2, j2) in used:
                    continue
                # chordless: the new head may touch only the current head
                bad = False
                for ei, ej in steps:
                    w = (i2 + ei, j2 + ej)
                    if w in onpath and w != (i, j):
                        bad = True
                        break
                if bad:
                    continue
                path.append((i2, j2))
                onpath.add((i2, j2))
                yield from extend()
                onpath.discard(path.pop())

        yield from extend()

    def assign(idx, used, min_anchor):
        if idx == len(block):
            return True
        confined = block[idx]
        allowed = cells & hmask if confined else cells
        for t, i, j in srcs:
            if t < min_anchor or (i, j) in used:
                continue
            if not allowed[i, j]:
                continue
            for p in paths_from(i, j, allowed, used):
                if p is None:
                    return None
                res = assign(idx + 1, used | set(p), t + 1)
                if res is not None and res:
                    return True
                if res is None:
                    return None
        return False

    return assign(0, frozenset(), -1)


def _match_mixed(ctx: _AnnulusContext, spec: ArmSpec):
    full = ctx.sectors(None)
    halfsecs = ctx.sectors(spec.half)
    if not full:
        return False
    by_parent = {}
    for h in halfsecs:
        by_parent.setdefault(h.parent, []).append(h)

    base = [(spec.sigma[i], i < spec.l) for i in range(spec.k)]
    cnt = len(full)
    constant = len(set(spec.sigma)) == 1

    def block_feasible(sector, designations):
        """designations: tuple of bools for arms hosted by this cluster.

        Flows are computed lazily: any crossing sector carries one arm, and
        n_half half-sectors carry n_half confined arms one each.
        """
        m = len(designations)
        n_half = sum(designations)
        if n_half == 0:
            return m == 1 or ctx.menger(sector) >= m
        hs = by_parent.get(sector.parent, [])
        if not hs:
            return False
        if n_half > len(hs):
            hcap = sum(min(ctx.menger(h, spec.half), n_half) for h in hs)
            if hcap < n_half:
                return False
        if m > 1 and ctx.menger(sector) < m:
            return False
        if n_half == m:
            return True
        res = _confirm_mixed_block(ctx, sector, list(designations), spec.half)
        if res is None:
            return True  # budget out: accept the flow verdict (rare; ledgered)
        return res

    for rot in _rotations(base):
        if spec.k > 1 and not constant and rot[0][0] == rot[-1][0]:
            continue  # cut blocks at a color change
        for off in range(cnt):
            ordered = [full[(off + i) % cnt] for i in range(cnt)]

            def dfs_ordered(pos, prev_s, blockdes):
                if pos == len(rot):
                    return prev_s < 0 or block_feasible(ordered[prev_s], tuple(blockdes))
                color, conf = rot[pos]
                if prev_s >= 0 and ordered[prev_s].color == color:
                    if dfs_ordered(pos + 1, prev_s, blockdes + [conf]):
                        return True
                if prev_s >= 0 and not block_feasible(ordered[prev_s], tuple(blockdes)):
                    return False
                lo = prev_s + 1 if prev_s >= 0 else 0
                for s in range(lo, len(ordered)):
                    if ordered[s].color == color:
                        if dfs_ordered(pos + 1, s, [conf]):
                            return True
                return False

            if dfs_ordered(0, -1, []):
                return True
    if constant:
        # whole family on one cluster
        for sec in full:
            if sec.color == spec.sigma[0]:
                if block_feasible(sec, tuple(i < spec.l for i in range(spec.k))):
                    return True
    return False


# ---------------------------------------------------------------------------
# public arm detectors


def _detect_with_ctx(ctx: _AnnulusContext, spec: ArmSpec) -> bool:
    if spec.l == 0:
        sectors = ctx.sectors(None)
        return _embed_cyclic(spec.sigma, sectors, lambda s: ctx.menger(s))
    if spec.l == spec.k:
        sectors = ctx.sectors(spec.half)
        for rot in _rotations([(c,) for c in spec.sigma]):
            if _embed_linear(rot, sectors, lambda s: ctx.menger(s, spec.half)):
                return True
        return False
    return _match_mixed(ctx, spec)


def detect_arms(view, ann: Annulus, spec: ArmSpec) -> bool:
    """Exact mixed arm event detection on an annulus.

    True iff there are spec.k vertex-disjoint monochromatic paths from the
    outer boundary of the inner box to the rim of the outer box, inside the
    annulus, whose colors in counterclockwise anchor order follow a cyclic
    permutation of sigma, the first spec.l confined to the chosen half.
    """
    return _detect_with_ctx(_AnnulusContext(view, ann), spec)


def detect_arms_batch(view, ann: Annulus, specs) -> list:
    """detect_arms for many specs on one field, sharing labelings and flows."""
    ctx = _AnnulusContext(view, ann)
    return [_detect_with_ctx(ctx, spec) for spec in specs]


def detect_four_arm_site(view, v, n: int) -> bool:
    """Fast alternating four-arm check on A(v; 1, n).

    For the alternating word the event reduces to the cyclic sector word
    having at least four color blocks; capacities never matter.
    """
    ctx = _AnnulusContext(view, Annulus(tuple(v), 1, n))
    word = [s.color for s in ctx.sectors(None)]
    m = len(word)
    if m < 4:
        return False
    blocks = sum(1 for i in range(m) if word[i] != word[(i + 1) % m])
    return blocks >= 4


def winding_number(path, center) -> float:
    """Total signed angle (counterclockwise positive) of the embedded path
    around the embedded center, in turns."""
    cx, cy = embed(center)
    total = 0.0
    prev = None
    for v in path:
        if tuple(v) == tuple(center):
            raise CenterOnPath(f"path visits the center {center}")
        x, y = embed(v)
        ang = math.atan2(y - cy, x - cx)
        if prev is not None:
            d = ang - prev
            while d > math.pi:
                d -= 2 * math.pi
            while d < -math.pi:
                d += 2 * math.pi
            total += d
        prev = ang
    return total / (2 * math.pi)


# ---------------------------------------------------------------------------
# lowest vertices with two non-touching closed arms


@dataclass
class LowestSet:
    """Lowest closed vertices with two non-touching closed paths to r."""

    region_box: Parallelogram
    vertices: list
    tests_run: int = 0
    budget_exhausted: int = 0

    def __bool__(self):
        return bool(self.vertices)


def _two_arm_pair_search(closed, allowed, v, s1, s2, target, budget=200_000):
    """Exact test: two non-touching closed paths from s1 and s2 to the target.

    Enumerates chordless paths P1 from s1 (DFS); for each complete P1, P2
    exists iff s2 reaches the target avoiding the closed neighborhood of P1.
    Prunes branches whose partial P1-neighborhood already disconnects s2.
    Returns True/False, or None if the node budget runs out.
    """
    na, nb = closed.shape
    steps = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1))

    def nbhd(cell):
        i, j = cell
        out = [(i, j)]
        for di, dj in steps:
            out.append((i + di, j + dj))
        return out

    def reaches(src, blocked):
        if src in blocked:
            return False
        stack = [src]
        seen = {src}
        while stack:
            i, j = stack.pop()
            if target[i, j]:
                return True
            for di, dj in steps:
                c = (i + di, j + dj)
                if not (0 <= c[0] < na and 0 <= c[1] < nb):
                    continue
                if c in seen or c in blocked:
                    continue
                if not allowed[c]:
                    continue
                seen.add(c)
                stack.append(c)
        return False

    path = [s1]
    onpath = {s1}
    blocked = set(n for n in nbhd(s1) if 0 <= n[0] < na and 0 <= n[1] < nb)
    blocked.add(v)
    nodes = [budget]

    def dfs():
        if nodes[0] <= 0:
            return None
        nodes[0] -= 1
        head = path[-1]
        if target[head]:
            # extending a complete P1 only grows its neighborhood, so the
            # verdict at the first target hit settles this branch
            return reaches(s2, blocked)
        if not reaches(s2, blocked):
            return False  # sound prune: the blocked set only grows
        i, j = head
        for di, dj in steps:
            c = (i + di, j + dj)
            if not (0 <= c[0] < na and 0 <= c[1] < nb):
                continue
            if not allowed[c] or c in onpath or c == v:
                continue
            chord = False
            for ei, ej in steps:
                w = (c[0] + ei, c[1] + ej)
                if w in onpath and w != head:
                    chord = True
                    break
            if chord:
                continue
            path.append(c)
            onpath.add(c)
            added = [n for n in nbhd(c)
                     if 0 <= n[0] < na and 0 <= n[1] < nb and n not in blocked]
            blocked.update(added)
            res = dfs()
            if res:
                return True
            if res is None:
                return None
            for n in added:
                blocked.discard(n)
            onpath.discard(path.pop())
        return False

    return dfs()


def lowest_two_arm_vertices(view, R: Parallelogram, r) -> LowestSet:
    """Set of lowest (minimal coefficient b, i.e. embedded height) closed
    vertices of R with two non-touching closed paths in R to the boundary
    segment r; the full tied set at the minimal height is returned.

    The two paths start at distinct, mutually non-adjacent closed neighbors
    of the vertex; since all closed neighbors share the vertex's cluster, the
    decision reduces to the component structure of the cluster minus the
    vertex, plus an exact disjoint-path search within a single component.
    """
    window = view.window
    closed_full = view.closed_mask()
    closed = _subgrid(closed_full, window, R)
    na, nb = closed.shape
    rset = set(tuple(u) for u in r)
    target = np.zeros((na, nb), bool)
    for (ua, ub) in rset:
        for (wa, wb) in neighbors((ua, ub)):
            if wa < R.a_lo or wa > R.a_hi or wb < R.b_lo or wb > R.b_hi:
                continue
            target[wa - R.a_lo, wb - R.b_lo] = True
    labels, _ = ndimage.label(closed, structure=LATTICE_STRUCTURE)
    reach_labels = set(np.unique(labels[target & closed])) - {0}

    steps = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1))
    tests = 0
    budget_out = 0

    def qualifies(i, j):
        nonlocal tests, budget_out
        if labels[i, j] not in reach_labels:
            return False
        nbrs = [(i + di, j + dj) for di, dj in steps
                if 0 <= i + di < na and 0 <= j + dj < nb and closed[i + di, j + dj]]
        if len(nbrs) < 2:
            return False
        # components of the vertex's own cluster with (i, j) removed; any
        # closed path from a neighbor stays inside this cluster
        sub = labels == labels[i, j]
        sub[i, j] = False
        sublab, _ = ndimage.label(sub, structure=LATTICE_STRUCTURE)
        comp_reach = set(np.unique(sublab[target & sub])) - {0}
        comp_of = {c: sublab[c] for c in nbrs}
        reach_comps = {comp_of[c] for c in nbrs if comp_of[c] in comp_reach}
        if not reach_comps:
            return False
        if len(reach_comps) >= 2:
            # a pair of neighbors in different components: automatically
            # non-touching if the two starting neighbors are non-adjacent
            picks = {}
            for c in nbrs:
                picks.setdefault(comp_of[c], []).append(c)
            comps = [picks[k] for k in reach_comps]
            for x in range(len(comps)):
                for y in range(x + 1, len(comps)):
                    for c1 in comps[x]:
                        for c2 in comps[y]:
                            if not are_adjacent(
                                    (c1[0] + R.a_lo, c1[1] + R.b_lo),
                                    (c2[0] + R.a_lo, c2[1] + R.b_lo)):
                                return True
        # single usable component: exact search over non-adjacent start pairs
        cands = [c for c in nbrs if comp_of[c] in comp_reach]
        for x in range(len(cands)):
            for y in range(len(cands)):
                if x == y:
                    continue
                c1, c2 = cands[x], cands[y]
                if are_adjacent((c1[0] + R.a_lo, c1[1] + R.b_lo),
                                (c2[0] + R.a_lo, c2[1] + R.b_lo)):
                    continue
                tests += 1
                res = _two_arm_pair_search(closed, sub, (i, j), c1, c2, target)
                if res is None:
                    budget_out += 1
                elif res:
                    return True
        return False

    found = []
    for j in range(nb):  # b ascending = embedded height ascending
        hits = [i for i in range(na) if closed[i, j] and qualifies(i, j)]
        if hits:
            found = [(i + R.a_lo, j + R.b_lo) for i in hits]
            break
    return LowestSet(region_box=R, vertices=found, tests_run=tests,
                     budget_exhausted=budget_out)
