"""Event-driven simulation of the N-parameter frozen percolation process.

Vertices attempt to open once, at their tau time, and succeed iff no
neighboring open cluster has already reached L-inf diameter N; a cluster
freezes (stops growing forever) at the instant a merge takes it to diameter
at least N.  Everything outside the simulation window is permanently closed
(free boundary), which approximates the infinite-volume process up to a
margin the harness enforces.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .lattice import (BBox, CARTESIAN_LINF, COEFF_LINF, Parallelogram,
                      diameter_at_least, neighbors)
from .randfield import TauField

DYNAMICS_METRICS = {CARTESIAN_LINF: K.METRIC_CARTESIAN, COEFF_LINF: K.METRIC_COEFF}


class WindowTooSmall(ValueError):
    pass


@dataclass(frozen=True)
class FreezeEvent:
    time: float
    vertex: tuple          # the vertex whose opening created the cluster
    root: int              # flat index of the cluster's final union-find root
    size: int
    diameter: float
    bbox: BBox


@dataclass
class ProcessTrace:
    """Completed run of the frozen process on a window.

    Per-vertex outcomes and freeze events; cluster queries at arbitrary
    times are reconstructed from the fact that openings are final and
    blocked vertices never open.
    """

    window: Parallelogram
    N: int
    metric: str
    seed: int
    stream_id: int
    tau: np.ndarray = field(repr=False)      # flat, a-major
    order: np.ndarray = field(repr=False)    # vertex indices by increasing tau
    opened: np.ndarray = field(repr=False)   # uint8 per vertex
    root: np.ndarray = field(repr=False)     # final cluster root, -1 if closed
    frozen_root: np.ndarray = field(repr=False)
    cluster_size: np.ndarray = field(repr=False)
    bb: tuple = field(repr=False)            # (amin, amax, bmin, bmax, xmin, xmax)
    events: list = field(default_factory=list)

    # -- indexing helpers

    def flat(self, v) -> int:
        w = self.window
        if v not in w:
            raise KeyError(f"vertex {v} outside window")
        return (v[0] - w.a_lo) * w.n_b + (v[1] - w.b_lo)

    def vertex(self, i: int):
        w = self.window
        return (i // w.n_b + w.a_lo, i % w.n_b + w.b_lo)

    def outcomes(self):
        """(vertex, tau, outcome) sorted by tau; outcome in {opened, blocked}."""
        for i in self.order:
            yield (self.vertex(int(i)), float(self.tau[i]),
                   "opened" if self.opened[i] else "blocked")

    def is_open_at(self, v, t: float) -> bool:
        i = self.flat(v)
        return bool(self.opened[i]) and self.tau[i] <= t

    def final_open_set(self):
        return {self.vertex(int(i)) for i in np.flatnonzero(self.opened)}

    def cluster_bbox(self, v) -> BBox:
        i = self.flat(v)
        if not self.opened[i]:
            raise KeyError(f"{v} never opened")
        r = int(self.root[i])
        return BBox(*(int(arr[r]) for arr in self.bb))

    def cluster_diameter(self, v) -> float:
        """L-inf diameter of v's final open cluster (0 if v never opened)."""
        i = self.flat(v)
        if not self.opened[i]:
            return 0.0
        return self.cluster_bbox(v).diameter(self.metric)


def run_frozen(tau: TauField, N: int, metric: str = CARTESIAN_LINF,
               probe: Parallelogram = None, margin: int = None,
               allow_small_window: bool = False) -> ProcessTrace:
    """Run the frozen process over the full tau window.

    If a probe box is given, the window must contain it with a closed-boundary
    margin (default 2N) or WindowTooSmall is raised; pass
    allow_small_window=True to override.
    """
    if N < 1:
        raise ValueError("N must be a positive integer")
    if metric not in DYNAMICS_METRICS:
        raise ValueError(f"dynamics metric must be one of {tuple(DYNAMICS_METRICS)}")
    w = tau.window
    if probe is not None and not allow_small_window:
        need = probe.expanded(int(2 * N if margin is None else margin))
        if not w.contains_box(need):
            raise WindowTooSmall(
                f"window {w} lacks margin {2 * N if margin is None else margin}"
                f" around probe {probe}")
    na, nb = w.n_a, w.n_b
    nv = na * nb
    flat_tau = np.ascontiguousarray(tau.values.reshape(nv))
    ai, bi = np.divmod(np.arange(nv), nb)
    order = np.lexsort((bi, ai, flat_tau)).astype(np.int32)

    opened = np.empty(nv, np.uint8)
    root = np.empty(nv, np.int32)
    frozen = np.empty(nv, np.uint8)
    csize = np.empty(nv, np.int32)
    bbs = tuple(np.empty(nv, np.int64) for _ in range(6))
    ev_vidx = np.empty(nv, np.int32)

    n_events = K.frozen_sweep(flat_tau, order, na, nb, w.a_lo, w.b_lo, N,
                              DYNAMICS_METRICS[metric], opened, root, frozen,
                              csize, *bbs, ev_vidx)

    trace = ProcessTrace(window=w, N=N, metric=metric, seed=tau.seed,
                         stream_id=tau.stream_id, tau=flat_tau, order=order,
                         opened=opened, root=root, frozen_root=frozen,
                         cluster_size=csize, bb=bbs)
    for e in range(n_events):
        vi = int(ev_vidx[e])
        v = trace.vertex(vi)
        r = int(root[vi])
        box = BBox(*(int(arr[r]) for arr in bbs))
        trace.events.append(FreezeEvent(time=float(flat_tau[vi]), vertex=v,
                                        root=r, size=int(csize[r]),
                                        diameter=box.diameter(metric), bbox=box))
    return trace


def open_cluster(trace: ProcessTrace, v, t: float):
    """Connected component of v among vertices opened at or before t."""
    if not trace.is_open_at(v, t):
        return set()
    w = trace.window
    out = {tuple(v)}
    stack = [tuple(v)]
    while stack:
        u = stack.pop()
        for x in neighbors(u):
            if x in w and x not in out and trace.is_open_at(x, t):
                out.add(x)
                stack.append(x)
    return out


def frozen_vertices_at(trace: ProcessTrace, t: float):
    """Vertices frozen at time t: in, or adjacent to, an open cluster of
    diameter >= N at time t (recomputed from the open snapshot)."""
    w = trace.window
    open_now = trace.opened.astype(bool) & (trace.tau <= t)
    seen = np.zeros(len(open_now), bool)
    frozen = set()
    for i in np.flatnonzero(open_now):
        if seen[i]:
            continue
        seen[i] = True
        stack = [trace.vertex(int(i))]
        cells = [stack[0]]
        while stack:
            u = stack.pop()
            for x in neighbors(u):
                if x in w:
                    j = trace.flat(x)
                    if open_now[j] and not seen[j]:
                        seen[j] = True
                        stack.append(x)
                        cells.append(x)
        box = BBox.of_vertices(cells)
        if diameter_at_least(box, trace.N, trace.metric):
            for c in cells:
                frozen.add(c)
                for x in neighbors(c):
                    if x in w:
                        frozen.add(x)
    return frozen


def active_cluster(trace: ProcessTrace, v, t: float):
    """Connected component of v among active (non-frozen) vertices at time t.

    Active vertices may be open or closed; connectivity runs through both.
    Empty if v is frozen.
    """
    v = tuple(v)
    w = trace.window
    frozen = frozen_vertices_at(trace, t)
    if v in frozen:
        return set()
    out = {v}
    stack = [v]
    while stack:
        u = stack.pop()
        for x in neighbors(u):
            if x in w and x not in out and x not in frozen:
                out.add(x)
                stack.append(x)
    return out


@dataclass(frozen=True)
class FCCount:
    t: float
    K: float
    N: int
    count: int


def count_frozen(trace: ProcessTrace, t: float, K_scale: float,
                 N: int = None) -> FCCount:
    """FC(t, K, N): distinct frozen clusters intersecting B(KN) at time t."""
    N = trace.N if N is None else N
    box = Parallelogram.box((0, 0), int(K_scale * N))
    w = trace.window
    if not w.contains_box(box):
        raise ValueError(f"B(KN) = {box} not inside window {w}")
    cnt = K.replay_count_frozen(trace.tau, trace.order, trace.opened,
                                w.n_a, w.n_b, w.a_lo, w.b_lo, trace.N,
                                DYNAMICS_METRICS[trace.metric], t,
                                box.a_lo, box.a_hi, box.b_lo, box.b_hi)
    return FCCount(t=t, K=K_scale, N=N, count=int(cnt))


def freeze_lambdas(trace: ProcessTrace, pi4: float):
    """Map freeze times to the near-critical scale: lambda = (t - 1/2) N^2 pi4."""
    if pi4 <= 0:
        raise ValueError("pi4 must be positive")
    n2 = trace.N ** 2
    return [(e.time - 0.5) * n2 * pi4 for e in trace.events]


def origin_frozen_indicator(trace: ProcessTrace) -> bool:
    """True iff the origin is open at time 1 and its cluster has diameter >= N."""
    i = trace.flat((0, 0))
    if not trace.opened[i]:
        return False
    return bool(trace.frozen_root[int(trace.root[i])])
