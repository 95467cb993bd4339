"""Monte Carlo estimators for near-critical observables: arm probabilities
and exponents, the alternating four-arm table behind the near-critical scale
p_lambda(N) = 1/2 + lambda N^-2 / pi4(1, N), correlation lengths, and the
Kesten scaling diagnostic.

Replica fields for the estimators are counter-based SplitMix64 streams, so
every estimate is a pure function of (seed, replica index).  Specs with a
fast in-kernel decision run there; replicas the kernel cannot settle exactly
are regenerated and re-decided by the exact sector detector.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .lattice import Parallelogram
from .perctools import ArmSpec, ArrayColors, detect_arms, HALF_SIDES
from .lattice import Annulus
from .randfield import splitmix64, stream_seed


class RadiusTooSmall(ValueError):
    pass


class NonpositiveEstimate(ValueError):
    pass


class MissingTableEntry(KeyError):
    pass


@dataclass(frozen=True)
class Unresolved:
    """Correlation-length search exhausted n_max without resolving a crossing."""

    n_max: int


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float
    n: int
    degenerate: bool = False

    @property
    def ci95(self):
        return (self.mean - 1.96 * self.stderr, self.mean + 1.96 * self.stderr)

    @classmethod
    def from_hits(cls, hits: int, n: int, degenerate: bool = False) -> "Estimate":
        if n < 2:
            raise ValueError("need n >= 2 replicas")
        p = hits / n
        sd = math.sqrt(p * (1.0 - p) * n / (n - 1))
        return cls(mean=p, stderr=sd / math.sqrt(n), n=n, degenerate=degenerate)

    @classmethod
    def from_samples(cls, values) -> "Estimate":
        arr = np.asarray(values, float)
        if arr.size < 2:
            raise ValueError("need n >= 2 samples")
        return cls(mean=float(arr.mean()),
                   stderr=float(arr.std(ddof=1) / math.sqrt(arr.size)),
                   n=int(arr.size))


_HALF_CODE = {"upper": K.HALF_UPPER, "lower": K.HALF_LOWER,
              "left": K.HALF_LEFT, "right": K.HALF_RIGHT}


def _kernel_event(spec: ArmSpec, two_threshold: bool):
    """Kernel event code for specs with an exact or filtered fast path."""
    if spec.k == 1 and spec.l == 0 and spec.sigma == ("o",):
        return K.EVENT_ONE_ARM_OPEN
    if two_threshold:
        return None
    alt = all(spec.sigma[i] != spec.sigma[(i + 1) % spec.k] for i in range(spec.k))
    if spec.l == 0 and alt and spec.k % 2 == 0:
        return K.EVENT_ALT_FULL
    if spec.l == 3 and spec.k == 3 and spec.sigma == ("o", "c", "o"):
        return K.EVENT_HALF_OCO
    if spec.l == 3 and spec.k == 4 and spec.sigma == ("o", "c", "o", "c"):
        return K.EVENT_MIXED_43_ALT
    return None


def _escalated_field(stream0: int, rep: int, outer: int,
                     thresh_open: int, thresh_closed: int) -> ArrayColors:
    n = 2 * outer + 1
    words = K.regen_words(stream0, rep, n * n)
    grid = words.reshape(n, n)
    window = Parallelogram.box((0, 0), outer)
    return ArrayColors(window,
                       open_mask=grid < np.uint64(thresh_open),
                       closed_mask=grid >= np.uint64(thresh_closed))


def estimate_pi(spec: ArmSpec, inner: int, outer: int, p_open: float = 0.5,
                p_closed: float = None, reps: int = 1000, seed: int = 0,
                allow_small: bool = False, stream_tag: int = 0,
                threads: int = 1) -> Estimate:
    """Monte Carlo frequency of the arm event over independent fields.

    Critical case: p_open = p_closed = 1/2.  Empty annuli (inner == outer)
    are true by convention and flagged degenerate.  Inner radii below
    n0(k) = 10k are refused unless allow_small is set.  Replicas shard
    across threads by index range; results do not depend on the thread
    count (per-replica streams, order-free accumulation).
    """
    if p_closed is None:
        p_closed = p_open
    if reps < 100:
        raise ValueError("need reps >= 100")
    if inner == outer:
        return Estimate(mean=1.0, stderr=0.0, n=reps, degenerate=True)
    if inner > outer:
        raise ValueError(f"inner {inner} > outer {outer}")
    if inner < spec.n0 and not allow_small:
        raise RadiusTooSmall(
            f"inner radius {inner} below n0(k) = {spec.n0}; pass allow_small=True")
    thresh_open = K.p_to_threshold(p_open)
    thresh_closed = K.p_to_threshold(p_closed)
    stream0 = stream_seed(seed, stream_tag)
    event = _kernel_event(spec, thresh_open != thresh_closed)
    if event is None:
        hits = 0
        for rep in range(reps):
            view = _escalated_field(stream0, rep, outer, thresh_open, thresh_closed)
            if detect_arms(view, Annulus((0, 0), inner, outer), spec):
                hits += 1
        return Estimate.from_hits(hits, reps)
    results = np.empty(reps, np.uint8)

    def run_range(lo, hi):
        K.reps_annulus_event(np.uint64(stream0), inner, outer,
                             np.uint64(thresh_open), np.uint64(thresh_closed),
                             event, spec.k, _HALF_CODE[spec.half],
                             lo, hi, results[lo:hi])

    if threads <= 1 or reps < 2 * threads:
        run_range(0, reps)
    else:
        from concurrent.futures import ThreadPoolExecutor
        step = (reps + threads - 1) // threads
        with ThreadPoolExecutor(max_workers=threads) as ex:
            list(ex.map(lambda lo: run_range(lo, min(lo + step, reps)),
                        range(0, reps, step)))
    hits = int((results == K.RES_TRUE).sum())

    def decide(rep):
        view = _escalated_field(stream0, int(rep), outer, thresh_open, thresh_closed)
        return detect_arms(view, Annulus((0, 0), inner, outer), spec)

    escalated = np.flatnonzero(results == K.RES_ESCALATE)
    if threads <= 1 or escalated.size < 2 * threads:
        hits += sum(map(decide, escalated))
    else:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as ex:
            hits += sum(ex.map(decide, escalated))
    return Estimate.from_hits(hits, reps)


def fit_exponent(estimates) -> tuple:
    """Weighted least-squares slope of -log(pi) against log(radius).

    estimates: iterable of (radius, Estimate).  Returns (slope, stderr) with
    weights 1/var(log pi) propagated by the delta method.
    """
    pts = list(estimates)
    if len(pts) < 3:
        raise ValueError("need at least 3 radii")
    xs, ys, ws = [], [], []
    for radius, est in pts:
        if est.mean <= 0:
            raise NonpositiveEstimate(f"estimate at radius {radius} is {est.mean}")
        xs.append(math.log(radius))
        ys.append(-math.log(est.mean))
        var = (est.stderr / est.mean) ** 2
        ws.append(1.0 / max(var, 1e-30))
    xs, ys, ws = (np.asarray(v, float) for v in (xs, ys, ws))
    xbar = (ws * xs).sum() / ws.sum()
    ybar = (ws * ys).sum() / ws.sum()
    sxx = (ws * (xs - xbar) ** 2).sum()
    slope = (ws * (xs - xbar) * (ys - ybar)).sum() / sxx
    return float(slope), float(math.sqrt(1.0 / sxx))


@dataclass
class Pi4Entry:
    N: int
    mean: float
    stderr: float
    n: int
    method: str


@dataclass
class Pi4Table:
    """Estimates of the alternating four-arm probability pi4(1, N).

    Direct entries come from the four-arm site frequency; larger dyadic N
    chain annulus octaves with a per-octave calibration constant anchored on
    the direct estimates (quasi-multiplicativity only fixes ratios up to
    constants, so the chain is calibrated once against the direct window).
    """

    entries: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def add(self, entry: Pi4Entry):
        self.entries[entry.N] = entry

    def get(self, N: int) -> Pi4Entry:
        if N not in self.entries:
            raise MissingTableEntry(f"no pi4 entry for N = {N}")
        return self.entries[N]

    def pi4(self, N: int) -> float:
        """pi4(1, N), log-log interpolated between table entries as needed."""
        if N in self.entries:
            return self.entries[N].mean
        ns = sorted(self.entries)
        if not ns:
            raise MissingTableEntry("empty table")
        if N <= ns[0]:
            return self.entries[ns[0]].mean
        if N >= ns[-1]:
            lo, hi = ns[-2], ns[-1]
        else:
            hi = next(m for m in ns if m > N)
            lo = max(m for m in ns if m < N)
        y0, y1 = self.entries[lo].mean, self.entries[hi].mean
        t = (math.log(N) - math.log(lo)) / (math.log(hi) - math.log(lo))
        return math.exp((1 - t) * math.log(y0) + t * math.log(y1))

    def to_json(self) -> dict:
        return {"meta": self.meta,
                "entries": [vars(e) for e in
                            (self.entries[n] for n in sorted(self.entries))]}

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1)

    @classmethod
    def load(cls, path) -> "Pi4Table":
        with open(path) as fh:
            obj = json.load(fh)
        t = cls(meta=obj.get("meta", {}))
        for e in obj["entries"]:
            t.add(Pi4Entry(**e))
        return t

    def identity(self) -> str:
        import hashlib
        return hashlib.sha256(
            json.dumps(self.to_json(), sort_keys=True).encode()).hexdigest()[:16]


ALT = ("o", "c", "o", "c")


def _alt4_prob(inner: int, outer: int, reps: int, seed: int, tag: int) -> Estimate:
    return estimate_pi(ArmSpec(4, 0, ALT), inner, outer, reps=reps, seed=seed,
                       allow_small=True, stream_tag=tag)


def build_pi4_table(N_list, reps: int, seed: int, direct_limit: int = 64) -> Pi4Table:
    """pi4(1, N) table: direct four-arm frequencies up to direct_limit, then
    dyadic octave chaining with a calibration constant fitted at the direct
    anchor (N = 32 and 64 by default)."""
    table = Pi4Table(meta={"seed": seed, "reps": reps, "direct_limit": direct_limit,
                           "convention": "A(v;1,N), center color unconstrained"})
    N_list = sorted(set(int(n) for n in N_list))
    tag = 0
    for N in N_list:
        if N == 1:
            table.add(Pi4Entry(N=1, mean=1.0, stderr=0.0, n=reps, method="convention"))
            continue
        if N <= direct_limit:
            est = _alt4_prob(1, N, reps, seed, tag)
            table.add(Pi4Entry(N=N, mean=est.mean, stderr=est.stderr, n=est.n,
                               method="direct"))
            tag += 1
    big = [N for N in N_list if N > direct_limit]
    if big:
        anchor_lo, anchor_hi = 32, 64
        for N in (anchor_lo, anchor_hi):
            if N not in table.entries:
                est = _alt4_prob(1, N, reps, seed, tag)
                table.add(Pi4Entry(N=N, mean=est.mean, stderr=est.stderr, n=est.n,
                                   method="direct"))
                tag += 1
        raw_anchor = _alt4_prob(anchor_lo, anchor_hi, reps, seed, tag)
        tag += 1
        # per-octave constant: direct(64) = direct(32) * raw(32,64) * kappa
        kappa = table.entries[anchor_hi].mean / (
            table.entries[anchor_lo].mean * raw_anchor.mean)
        octaves = {}
        for N in big:
            m = int(round(math.log2(N)))
            if 2 ** m != N:
                raise ValueError(f"chained entries need dyadic N, got {N}")
            for j in range(int(math.log2(anchor_hi)), m):
                if j not in octaves:
                    octaves[j] = _alt4_prob(2 ** j, 2 ** (j + 1), reps, seed, tag)
                    tag += 1
            mean = table.entries[anchor_hi].mean
            relvar = (table.entries[anchor_hi].stderr / table.entries[anchor_hi].mean) ** 2
            for j in range(int(math.log2(anchor_hi)), m):
                est = octaves[j]
                mean *= est.mean * kappa
                relvar += (est.stderr / est.mean) ** 2
            table.add(Pi4Entry(N=N, mean=mean, stderr=mean * math.sqrt(relvar),
                               n=reps, method="chained"))
        table.meta["kappa"] = kappa
    return table


@dataclass(frozen=True)
class PLambda:
    p: float
    clamped: bool

    def __float__(self):
        return self.p


def p_lambda(lam: float, N: int, table: Pi4Table) -> PLambda:
    """Near-critical scale 1/2 + lambda N^-2 / pi4(1, N), clamped to [0, 1]."""
    pi4 = table.get(N).mean
    raw = 0.5 + lam * (N ** -2) / pi4
    clamped = not (0.0 <= raw <= 1.0)
    return PLambda(p=min(max(raw, 0.0), 1.0), clamped=clamped)


def crossing_probability(p: float, n: int, reps: int, seed: int,
                         orientation: str = "horizontal", color: str = "o",
                         box: Parallelogram = None, stream_tag: int = 0,
                         threads: int = 1) -> Estimate:
    """MC estimate of a monochromatic crossing of B(n) (or a given box)."""
    if box is None:
        box = Parallelogram.box((0, 0), n)
    stream0 = stream_seed(seed, stream_tag)
    thresh = np.uint64(K.p_to_threshold(p))
    horizontal = orientation == "horizontal"
    want_open = color == "o"
    if threads <= 1 or reps < 2 * threads:
        hits = K.reps_box_crossing(np.uint64(stream0), box.n_a, box.n_b, thresh,
                                   horizontal, want_open, 0, reps)
    else:
        from concurrent.futures import ThreadPoolExecutor
        step = (reps + threads - 1) // threads
        with ThreadPoolExecutor(max_workers=threads) as ex:
            hits = sum(ex.map(
                lambda lo: K.reps_box_crossing(
                    np.uint64(stream0), box.n_a, box.n_b, thresh,
                    horizontal, want_open, lo, min(lo + step, reps)),
                range(0, reps, step)))
    return Estimate.from_hits(int(hits), reps)


def correlation_length(p: float, eps: float, n_max: int, reps: int = 2000,
                       seed: int = 0):
    """Smallest n at which the crossing probability of B(n) crosses eps
    (p < 1/2) or 1 - eps (p > 1/2), resolved by a 2-stderr rule over a
    geometric sweep plus bisection.  Returns Unresolved(n_max) when no
    crossing resolves below n_max.
    """
    if not 0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    below = p < 0.5

    tag = [0]

    def status(n):
        est = crossing_probability(p, n, reps, seed, stream_tag=tag[0])
        tag[0] += 1
        if below:
            if est.mean + 2 * est.stderr <= eps:
                return "past"
            if est.mean - 2 * est.stderr >= eps:
                return "before"
        else:
            if est.mean - 2 * est.stderr >= 1 - eps:
                return "past"
            if est.mean + 2 * est.stderr <= 1 - eps:
                return "before"
        return "unresolved"

    n = 1
    lo = 0
    hi = None
    while n <= n_max:
        s = status(n)
        if s == "past":
            hi = n
            break
        if s == "before":
            lo = n
        n *= 2
    if hi is None:
        return Unresolved(n_max)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        s = status(mid)
        if s == "past":
            hi = mid
        elif s == "before":
            lo = mid
        else:
            # cannot refine further at this replica budget
            break
    return hi


def kesten_value(p: float, L: int, pi4_at_L: float) -> float:
    """|p - 1/2| L^2 pi4(1, L): the quantity Kesten's relation keeps of order 1."""
    return abs(p - 0.5) * L * L * pi4_at_L


def kesten_diagnostic(p: float, table: Pi4Table, eps: float = 0.25,
                      n_max: int = 512, reps: int = 2000, seed: int = 0):
    """Plug-in stability diagnostic; propagates Unresolved."""
    if p == 0.5:
        raise ValueError("diagnostic undefined at criticality")
    L = correlation_length(p, eps, n_max, reps, seed)
    if isinstance(L, Unresolved):
        return L
    return kesten_value(p, L, table.pi4(L))
