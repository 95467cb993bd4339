"""The i.i.d. uniform activation-time field tau and its threshold color views.

Every tau value is a pure function of (seed, stream-id, vertex), so fields are
reproducible and window-independent: two windows sharing a vertex agree there.
Stream seeds come from the SplitMix64 finalizer applied to seed XOR stream-id,
the same construction the experiment harness uses for replica streams.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .lattice import Parallelogram

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_KEYMULT = np.uint64(0xD1342543DE82EF95)


_M64 = (1 << 64) - 1


def splitmix64(x):
    """SplitMix64 finalizer; bijective on 64-bit words.

    Accepts a Python int (returns int) or a uint64 ndarray (returns ndarray).
    """
    if isinstance(x, np.ndarray):
        z = x + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))
    z = (int(x) + 0x9E3779B97F4A7C15) & _M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


def stream_seed(seed: int, stream_id: int) -> int:
    """Derive an independent-quality 64-bit stream seed from (seed, stream-id)."""
    return splitmix64((seed & _M64) ^ (stream_id & _M64))


def _hash_vertices(a: np.ndarray, b: np.ndarray, sseed: int) -> np.ndarray:
    """64-bit hash per vertex; double SplitMix64 pass over a keyed (a, b) word."""
    key = (a.astype(np.int64).view(np.uint64) << np.uint64(32)) ^ (
        b.astype(np.int64).view(np.uint64) & np.uint64(0xFFFFFFFF))
    with np.errstate(over="ignore"):
        h = splitmix64(key * _KEYMULT + np.uint64(sseed))
        return splitmix64(h ^ np.uint64(sseed))


@dataclass
class TauField:
    """Uniform [0,1) activation times on a window, row-major in (a, b).

    values[i, j] is tau at vertex (window.a_lo + i, window.b_lo + j).
    """

    window: Parallelogram
    seed: int
    stream_id: int
    values: np.ndarray = field(repr=False)

    def tau(self, v) -> float:
        if v not in self.window:
            raise KeyError(f"vertex {v} outside window")
        return float(self.values[v[0] - self.window.a_lo, v[1] - self.window.b_lo])

    def vertex_of_index(self, i: int, j: int):
        return (self.window.a_lo + i, self.window.b_lo + j)


def sample_tau(window: Parallelogram, seed: int, stream_id: int = 0) -> TauField:
    """Sample the tau field on a window; bit-identical for identical inputs."""
    if window.is_empty():
        raise ValueError("window must be nonempty")
    sseed = stream_seed(seed, stream_id)
    a = np.arange(window.a_lo, window.a_hi + 1, dtype=np.int64)
    b = np.arange(window.b_lo, window.b_hi + 1, dtype=np.int64)
    h = _hash_vertices(a[:, None], b[None, :], sseed)
    # 53-bit mantissa; ties at double resolution are broken downstream by
    # lexicographic (a, b) order
    values = (h >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)
    return TauField(window=window, seed=seed, stream_id=stream_id, values=values)


@dataclass
class ColorView:
    """Threshold view: a vertex is open iff tau < p_open.

    For near-critical two-threshold events, closed arms are tested against
    p_closed (closed iff tau > p_closed); by default p_closed == p_open.
    """

    field: TauField
    p_open: float
    p_closed: float = None

    def __post_init__(self):
        if self.p_closed is None:
            self.p_closed = self.p_open
        for p in (self.p_open, self.p_closed):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"threshold {p} outside [0, 1]")

    @property
    def window(self) -> Parallelogram:
        return self.field.window

    def is_open(self, v) -> bool:
        return self.field.tau(v) < self.p_open

    def is_closed(self, v) -> bool:
        return self.field.tau(v) > self.p_closed

    def open_mask(self) -> np.ndarray:
        return self.field.values < self.p_open

    def closed_mask(self) -> np.ndarray:
        return self.field.values > self.p_closed


def color_at(tau: TauField, p: float, p_closed: float = None) -> ColorView:
    """The p-open view of a field (monotone in p on a shared field)."""
    return ColorView(field=tau, p_open=p, p_closed=p_closed)


_MAGIC = b"TAUF\x01\x00\x00\x00"


def dump_tau(tau: TauField, path) -> None:
    """Binary dump: header then row-major little-endian 64-bit fixed point.

    Fixed point u encodes tau = u / 2**64 exactly (the low 11 bits are zero
    since tau carries 53 significant bits).
    """
    w = tau.window
    header = _MAGIC + struct.pack(
        "<4q2Q", w.a_lo, w.a_hi, w.b_lo, w.b_hi,
        tau.seed & 0xFFFFFFFFFFFFFFFF, tau.stream_id & 0xFFFFFFFFFFFFFFFF)
    fixed = (tau.values * 2.0 ** 64).astype(np.uint64)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(fixed.astype("<u8").tobytes())


def load_tau(path) -> TauField:
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _MAGIC:
            raise ValueError("not a tau field dump")
        a_lo, a_hi, b_lo, b_hi, seed, stream_id = struct.unpack("<4q2Q", fh.read(48))
        window = Parallelogram(a_lo, a_hi, b_lo, b_hi)
        fixed = np.frombuffer(fh.read(), dtype="<u8").reshape(window.n_a, window.n_b)
    values = fixed.astype(np.float64) * 2.0 ** -64
    return TauField(window=window, seed=int(seed), stream_id=int(stream_id), values=values)
