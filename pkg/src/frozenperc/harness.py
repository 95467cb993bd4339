"""Experiment orchestration: configuration, replica fan-out with
deterministic per-replica streams, aggregation, and file outputs.

A ResultBundle is a pure function of its config: replica r of any experiment
draws its randomness from stream_seed(master_seed, r) (tau fields) or from
the estimator stream tags, so reruns and thread counts cannot change numbers.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .dynamics import count_frozen, origin_frozen_indicator, run_frozen
from .lattice import CARTESIAN_LINF, Parallelogram, SQRT3_2, embed
from .nearcrit import (Estimate, Pi4Table, correlation_length, estimate_pi,
                       fit_exponent, p_lambda, Unresolved)
from .perctools import ArmSpec, lowest_two_arm_vertices
from .randfield import color_at, sample_tau

EXPERIMENTS = ("origin-freeze", "diam-hist", "freeze-lambda", "fc-count",
               "lowest-band", "arm-exponent", "corr-length")

LAMBDA_BIN_WIDTH = 0.25
LAMBDA_RANGE = (-10.0, 10.0)


@dataclass
class ExperimentConfig:
    experiment: str
    N: list = field(default_factory=lambda: [32])
    K: float = 2.0
    metric: str = CARTESIAN_LINF
    lambdas: list = field(default_factory=lambda: [0.0])
    reps: int = 1000
    seed: int = 1
    threads: int = 1
    margin_factor: float = 2.0
    table_path: str = None
    out_dir: str = "."
    # arm-exponent / corr-length extras
    spec: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; "
                             f"choose from {EXPERIMENTS}")
        if isinstance(self.N, int):
            self.N = [self.N]

    @classmethod
    def from_json(cls, obj, **overrides) -> "ExperimentConfig":
        if isinstance(obj, str):
            obj = json.loads(obj)
        merged = dict(obj)
        merged.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**merged)

    def to_json(self, identity: bool = False) -> dict:
        out = asdict(self)
        if identity:
            # execution details: the same experiment run with a different
            # thread count or output directory is the same experiment
            out.pop("threads")
            out.pop("out_dir")
        return out

    def digest(self) -> str:
        return hashlib.sha256(
            json.dumps(self.to_json(identity=True),
                       sort_keys=True).encode()).hexdigest()[:16]


@dataclass
class ResultBundle:
    config: ExperimentConfig
    results: dict
    wall_clock: float
    code_version: str = __version__
    table_identity: str = None

    def to_json(self) -> dict:
        # wall clock and execution details deliberately excluded: emitted
        # files must be byte-identical across reruns and thread counts
        return {"config": self.config.to_json(identity=True),
                "config_hash": self.config.digest(),
                "code_version": self.code_version,
                "table_identity": self.table_identity,
                "results": self.results}


def seed_replica(master: int, replica: int) -> int:
    """SplitMix64 finalizer of master XOR replica; injective per master."""
    from .randfield import splitmix64
    return splitmix64((master & 0xFFFFFFFFFFFFFFFF) ^ (replica & 0xFFFFFFFFFFFFFFFF))


def _map_replicas(fn, reps: int, threads: int):
    """Apply fn(replica_index) for all replicas; results collected by index
    so the aggregate is independent of scheduling."""
    if threads <= 1:
        return [fn(r) for r in range(reps)]
    out = [None] * reps
    with ThreadPoolExecutor(max_workers=threads) as ex:
        for r, res in zip(range(reps), ex.map(fn, range(reps))):
            out[r] = res
    return out


def _frozen_replica_trace(cfg: ExperimentConfig, N: int, r: int, window_r: int):
    window = Parallelogram.box((0, 0), window_r)
    tau = sample_tau(window, cfg.seed, r)
    return run_frozen(tau, N, cfg.metric)


def _load_table(cfg: ExperimentConfig) -> Pi4Table:
    if not cfg.table_path:
        raise ValueError(f"experiment {cfg.experiment} needs --table")
    return Pi4Table.load(cfg.table_path)


def run_experiment(cfg: ExperimentConfig) -> ResultBundle:
    t0 = time.time()
    results = {}
    table_id = None

    if cfg.experiment == "origin-freeze":
        for N in cfg.N:
            wr = int(math.ceil(cfg.margin_factor * N))
            flags = _map_replicas(
                lambda r, N=N, wr=wr: origin_frozen_indicator(
                    _frozen_replica_trace(cfg, N, r, wr)),
                cfg.reps, cfg.threads)
            est = Estimate.from_hits(sum(flags), cfg.reps)
            results[str(N)] = {"mean": est.mean, "stderr": est.stderr,
                               "n": est.n, "window_radius": wr}

    elif cfg.experiment == "diam-hist":
        for N in cfg.N:
            wr = int(math.ceil((cfg.K + cfg.margin_factor) * N))
            diams = _map_replicas(
                lambda r, N=N, wr=wr: _frozen_replica_trace(
                    cfg, N, r, wr).cluster_diameter((0, 0)) / N,
                cfg.reps, cfg.threads)
            arr = np.asarray(diams)
            hist, edges = np.histogram(arr, bins=40, range=(0.0, 2.0))
            results[str(N)] = {
                "ratios_mean": float(arr.mean()),
                "p_below_1": float((arr < 1.0).mean()),
                "quantiles": {q: float(np.quantile(arr, q))
                              for q in (0.05, 0.25, 0.5, 0.75, 0.95)},
                "hist": hist.tolist(),
                "bin_edges": edges.tolist(),
                "n": int(arr.size)}

    elif cfg.experiment == "freeze-lambda":
        table = _load_table(cfg)
        table_id = table.identity()
        lo, hi = LAMBDA_RANGE
        nbins = int(round((hi - lo) / LAMBDA_BIN_WIDTH))
        for N in cfg.N:
            pi4 = table.get(N).mean
            wr = int(math.ceil((cfg.K + cfg.margin_factor) * N))
            box = Parallelogram.box((0, 0), int(cfg.K * N))

            def lam_of(r, N=N, wr=wr, box=box, pi4=pi4):
                tr = _frozen_replica_trace(cfg, N, r, wr)
                out = []
                for e in tr.events:
                    bb = e.bbox
                    if (bb.amin <= box.a_hi and bb.amax >= box.a_lo
                            and bb.bmin <= box.b_hi and bb.bmax >= box.b_lo):
                        out.append((e.time - 0.5) * N * N * pi4)
                return out

            lams = [x for sub in _map_replicas(lam_of, cfg.reps, cfg.threads)
                    for x in sub]
            arr = np.asarray(lams) if lams else np.empty(0)
            hist, edges = np.histogram(arr, bins=nbins, range=(lo, hi))
            results[str(N)] = {
                "count": int(arr.size),
                "underflow": int((arr < lo).sum()),
                "overflow": int((arr > hi).sum()),
                "hist": hist.tolist(),
                "bin_edges": edges.tolist(),
                "lambda_mean": float(arr.mean()) if arr.size else None}

    elif cfg.experiment == "fc-count":
        for N in cfg.N:
            wr = int(math.ceil((cfg.K + cfg.margin_factor) * N))
            counts = _map_replicas(
                lambda r, N=N, wr=wr: count_frozen(
                    _frozen_replica_trace(cfg, N, r, wr), 1.0, cfg.K).count,
                cfg.reps, cfg.threads)
            arr = np.asarray(counts)
            results[str(N)] = {
                "mean": float(arr.mean()),
                "max": int(arr.max()),
                "dist": {str(k): int((arr == k).sum())
                         for k in range(int(arr.max()) + 1)},
                "n": int(arr.size)}

    elif cfg.experiment == "lowest-band":
        k_bands = int(cfg.spec.get("bands", 8))
        b_scale = float(cfg.spec.get("b", 1.0))
        a_scale = float(cfg.spec.get("a", 0.25))
        lam = cfg.lambdas[0]
        if lam == 0.0:
            p = 0.5
        else:
            table = _load_table(cfg)
            table_id = table.identity()
        for N in cfg.N:
            if lam != 0.0:
                p = p_lambda(lam, N, table).p
            bn = int(round(b_scale * N))
            an = a_scale * N
            R = Parallelogram.box((0, 0), bn)
            top = [(a, bn + 1) for a in range(-bn, bn + 1)]

            def band_of(r, N=N, R=R, top=top, an=an, p=p):
                window = R.expanded(1)
                tau = sample_tau(window, cfg.seed, r)
                low = lowest_two_arm_vertices(color_at(tau, p), R, top)
                hits = set()
                for (va, vb) in low.vertices:
                    if abs(va) > an:
                        continue
                    for l in range(k_bands):
                        lo_b = (2 * l / k_bands - 1) * an
                        hi_b = (2 * (l + 1) / k_bands - 1) * an
                        if lo_b < vb <= hi_b:
                            hits.add(l)
                return hits

            hitsets = _map_replicas(band_of, cfg.reps, cfg.threads)
            freq = [sum(1 for h in hitsets if l in h) / cfg.reps
                    for l in range(k_bands)]
            results[str(N)] = {"band_freq": freq, "n": cfg.reps,
                               "no_hit": sum(1 for h in hitsets if not h) / cfg.reps}

    elif cfg.experiment == "arm-exponent":
        sp = cfg.spec
        spec = ArmSpec(int(sp.get("k", 1)), int(sp.get("l", 0)),
                       tuple(sp.get("sigma", "o")), sp.get("half", "upper"))
        inner = int(sp.get("inner", 8))
        radii = [int(n) for n in cfg.N]
        pts = []
        for i, outer in enumerate(radii):
            est = estimate_pi(spec, inner, outer, reps=cfg.reps, seed=cfg.seed,
                              allow_small=bool(sp.get("allow_small", True)),
                              stream_tag=i)
            pts.append((outer, est))
            results[str(outer)] = {"mean": est.mean, "stderr": est.stderr,
                                   "n": est.n, "degenerate": est.degenerate}
        usable = [(n, e) for n, e in pts if not e.degenerate and e.mean > 0]
        if len(usable) >= 3:
            slope, sse = fit_exponent(usable)
            results["fit"] = {"slope": slope, "slope_stderr": sse}

    elif cfg.experiment == "corr-length":
        table = _load_table(cfg)
        table_id = table.identity()
        eps = float(cfg.spec.get("eps", 0.25))
        n_max = int(cfg.spec.get("n_max", 1024))
        for N in cfg.N:
            for lam in cfg.lambdas:
                p = p_lambda(lam, N, table)
                L = correlation_length(p.p, eps, n_max, reps=cfg.reps,
                                       seed=seed_replica(cfg.seed, N))
                key = f"N={N},lambda={lam}"
                if isinstance(L, Unresolved):
                    results[key] = {"unresolved": True, "n_max": L.n_max, "p": p.p}
                else:
                    results[key] = {"L": L, "L_over_N": L / N, "p": p.p,
                                    "clamped": p.clamped}

    return ResultBundle(config=cfg, results=results, wall_clock=time.time() - t0,
                        table_identity=table_id)


# ---------------------------------------------------------------------------
# outputs


def emit_outputs(bundle: ResultBundle, formats=("csv", "json"), out_dir=None,
                 trace=None):
    """Write the bundle; CSV rows are (experiment, parameter point) flat
    records, JSON is the full bundle, SVG a single-trace lattice snapshot."""
    import os
    out_dir = out_dir or bundle.config.out_dir
    os.makedirs(out_dir, exist_ok=True)
    stem = f"{bundle.config.experiment}-{bundle.config.digest()}"
    written = []
    if "json" in formats:
        path = os.path.join(out_dir, stem + ".json")
        with open(path, "w") as fh:
            json.dump(bundle.to_json(), fh, indent=1, sort_keys=True)
        written.append(path)
    if "csv" in formats:
        path = os.path.join(out_dir, stem + ".csv")
        with open(path, "w") as fh:
            fh.write("# config_hash=%s code_version=%s table=%s\n" % (
                bundle.config.digest(), bundle.code_version,
                bundle.table_identity))
            fh.write("experiment,point,key,value\n")
            for point, rec in sorted(bundle.results.items()):
                if isinstance(rec, dict):
                    for k, v in sorted(rec.items()):
                        if isinstance(v, (int, float, str, bool)) or v is None:
                            fh.write(f"{bundle.config.experiment},{point},{k},{v}\n")
                else:
                    fh.write(f"{bundle.config.experiment},{point},value,{rec}\n")
        written.append(path)
    if "svg" in formats and trace is not None:
        path = os.path.join(out_dir, stem + ".svg")
        write_trace_svg(trace, path)
        written.append(path)
    with open(os.path.join(out_dir, stem + ".time.txt"), "w") as fh:
        fh.write(f"wall_clock_seconds={bundle.wall_clock:.3f}\n")
    return written


def write_trace_svg(trace, path, scale: float = 8.0):
    """Hexagon-per-vertex snapshot: white = closed, light = open active,
    frozen clusters shaded by freeze order."""
    w = trace.window
    order_of_root = {}
    for i, e in enumerate(trace.events):
        order_of_root[e.root] = i
    n_ev = max(1, len(trace.events))
    rad = 1.0 / math.sqrt(3.0)
    pts = []
    for ang in range(6):
        th = math.pi / 6 + ang * math.pi / 3
        pts.append((rad * math.cos(th), rad * math.sin(th)))
    xs, ys = [], []
    cells = []
    for v in w.vertices():
        x, y = embed(v)
        i = trace.flat(v)
        if not trace.opened[i]:
            fill = "#ffffff"
        else:
            r = int(trace.root[i])
            if trace.frozen_root[r]:
                shade = 60 + int(140 * order_of_root.get(r, 0) / n_ev)
                fill = f"#{shade:02x}{shade:02x}{shade + 60:02x}"
            else:
                fill = "#cfe8cf"
        cells.append((x, y, fill))
        xs.append(x)
        ys.append(y)
    x0, x1 = min(xs) - 1, max(xs) + 1
    y0, y1 = min(ys) - 1, max(ys) + 1
    with open(path, "w") as fh:
        fh.write('<svg xmlns="http://www.w3.org/2000/svg" '
                 f'width="{(x1 - x0) * scale:.0f}" height="{(y1 - y0) * scale:.0f}" '
                 f'viewBox="{x0} {y0} {x1 - x0} {y1 - y0}">\n')
        fh.write(f'<!-- window={w} N={trace.N} metric={trace.metric} '
                 f'seed={trace.seed} stream={trace.stream_id} -->\n')
        for x, y, fill in cells:
            poly = " ".join(f"{x + px:.3f},{2 * y0 + (y1 - y0) - (y + py):.3f}"
                            for px, py in pts)
            fh.write(f'<polygon points="{poly}" fill="{fill}" '
                     'stroke="#999999" stroke-width="0.03"/>\n')
        fh.write("</svg>\n")
    return path
