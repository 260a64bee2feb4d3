"""Synthetic darkspace traffic with heavy-tailed structure.

Packets come from two populations:

* background sources drawn from a Zipf law over ``n_sources`` ranks, each
  sending to a destination drawn independently from a Zipf law over
  ``n_destinations`` ranks;
* ``n_scanners`` scanner sources that take turns (round robin) and each walk
  the destination block sequentially and cyclically from evenly spaced
  starting offsets.

Randomness is counter based: draw ``i`` of stream ``s`` is
``splitmix64(base_s + (i + 1) * GOLDEN)`` with
``base_s = splitmix64(seed ^ (s * STREAM_STRIDE))``, evaluated with 64-bit
wrapping arithmetic.  Uniform doubles use the top 53 bits.  The trace is
therefore a pure function of the model and reproducible across platforms.
"""

from __future__ import annotations

import functools
from dataclasses import asdict, dataclass
from typing import Iterator, TextIO

import numpy as np

from .errors import UsageError
from .ingest import RecordBatch

GOLDEN = 0x9E3779B97F4A7C15
STREAM_STRIDE = 0xD1B54A32D192ED03
T0_US = 1_560_000_000_000_000

_STREAM_KIND, _STREAM_SRC, _STREAM_DST, _STREAM_GAP, _STREAM_PROTO = range(5)
_M32 = np.uint64(0xFFFFFFFF)
_CHUNK = 1 << 20


def splitmix64(x: np.ndarray) -> np.ndarray:
    z = np.atleast_1d(np.asarray(x, dtype=np.uint64)) + np.uint64(GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def stream_u64(seed: int, stream: int, start: int, count: int) -> np.ndarray:
    base = splitmix64(np.uint64((seed ^ (stream * STREAM_STRIDE)) & (2**64 - 1)))[0]
    i = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    return splitmix64(base + i * np.uint64(GOLDEN))


def stream_uniform(seed: int, stream: int, start: int, count: int) -> np.ndarray:
    return (stream_u64(seed, stream, start, count) >> np.uint64(11)).astype(np.float64) * 2.0**-53


def mix32(x: np.ndarray) -> np.ndarray:
    """Invertible 32-bit integer hash (spreads ranks over the IPv4 space)."""
    x = np.asarray(x, dtype=np.uint64) & _M32
    x ^= x >> np.uint64(16)
    x = (x * np.uint64(0x7FEB352D)) & _M32
    x ^= x >> np.uint64(15)
    x = (x * np.uint64(0x846CA68B)) & _M32
    x ^= x >> np.uint64(16)
    return x


@functools.lru_cache(maxsize=8)
def zipf_cdf(n: int, exponent: float) -> np.ndarray:
    """Cumulative table for P(rank k) proportional to ``k**-exponent``, k = 1..n."""
    w = np.arange(1, n + 1, dtype=np.float64) ** -exponent
    cdf = np.cumsum(w)
    cdf /= cdf[-1]
    cdf[-1] = 1.0
    cdf.flags.writeable = False
    return cdf


def zipf_pmf(n: int, exponent: float) -> np.ndarray:
    w = np.arange(1, n + 1, dtype=np.float64) ** -exponent
    return w / w.sum()


def _coprime_multiplier(n: int) -> int:
    a = (0x9E3779B1 % n) or 1
    while np.gcd(a, n) != 1:
        a += 1
    return a


@dataclass(frozen=True)
class SynthModel:
    n_sources: int = 1 << 20
    n_destinations: int = 1 << 24
    source_exponent: float = 1.5
    dest_exponent: float = 1.05
    scan_fraction: float = 0.5
    n_scanners: int = 16
    seed: int = 0
    dst_base: int = 44 << 24
    mean_gap_us: float = 2.5

    def validate(self) -> None:
        if self.n_sources < 1 or self.n_destinations < 1:
            raise UsageError("n_sources and n_destinations must be positive")
        if self.n_sources + self.n_scanners > 1 << 32:
            raise UsageError("source ranks must fit the 32-bit address space")
        if self.dst_base < 0 or self.dst_base + self.n_destinations > 1 << 32:
            raise UsageError("destination block must lie inside the IPv4 space")
        if not (self.source_exponent > 1 and self.dest_exponent > 1):
            raise UsageError("Zipf exponents must be greater than 1")
        if not 0.0 <= self.scan_fraction <= 1.0:
            raise UsageError("scan_fraction must lie in [0, 1]")
        if self.scan_fraction > 0 and self.n_scanners < 1:
            raise UsageError("scan_fraction > 0 requires at least one scanner")
        if not 0 <= self.seed < 1 << 64:
            raise UsageError("seed must be an unsigned 64-bit integer")
        if self.mean_gap_us < 1:
            raise UsageError("mean_gap_us must be at least 1")

    def to_dict(self) -> dict:
        return asdict(self)


# Heavy-tailed reference trace used for the compression and scaling benchmarks.
REFERENCE_MODEL = SynthModel()


def source_id(rank: np.ndarray) -> np.ndarray:
    return mix32(rank)


def iter_trace(model: SynthModel, n_packets: int, chunk: int = _CHUNK) -> Iterator[RecordBatch]:
    """Yield the trace in batches; concatenation is independent of ``chunk``."""
    model.validate()
    if n_packets < 0:
        raise UsageError("n_packets must be nonnegative")
    src_cdf = zipf_cdf(model.n_sources, model.source_exponent)
    dst_cdf = zipf_cdf(model.n_destinations, model.dest_exponent)
    nd = model.n_destinations
    a = np.uint64(_coprime_multiplier(nd))
    c = np.uint64(int(mix32(np.uint64(model.seed & 0xFFFFFFFF))) % nd)
    scanner_start = (np.arange(max(model.n_scanners, 1), dtype=np.uint64) * np.uint64(nd)
                     // np.uint64(max(model.n_scanners, 1)))
    gap_scale = model.mean_gap_us - 1.0
    seed = model.seed

    t_last = T0_US
    n_scanned = 0
    for start in range(0, n_packets, chunk):
        m = min(chunk, n_packets - start)
        is_scan = stream_uniform(seed, _STREAM_KIND, start, m) < model.scan_fraction

        src_rank = np.searchsorted(src_cdf, stream_uniform(seed, _STREAM_SRC, start, m), side="right")
        dst_rank = np.searchsorted(dst_cdf, stream_uniform(seed, _STREAM_DST, start, m), side="right")
        src = source_id(src_rank.astype(np.uint64))
        dst_idx = (a * dst_rank.astype(np.uint64) + c) % np.uint64(nd)

        k = np.flatnonzero(is_scan)
        if k.size:
            j = np.arange(n_scanned, n_scanned + k.size, dtype=np.uint64)
            who = j % np.uint64(model.n_scanners)
            step = j // np.uint64(model.n_scanners)
            src[k] = source_id(np.uint64(model.n_sources) + who)
            dst_idx[k] = (scanner_start[who] + step) % np.uint64(nd)
            n_scanned += k.size

        u_gap = stream_uniform(seed, _STREAM_GAP, start, m)
        gaps = 1 + np.floor(-np.log1p(-u_gap) * gap_scale).astype(np.uint64)
        ts = np.uint64(t_last) + np.cumsum(gaps, dtype=np.uint64)
        t_last = int(ts[-1])

        u_p = stream_uniform(seed, _STREAM_PROTO, start, m)
        proto = np.where(is_scan | (u_p < 0.8), 6, np.where(u_p < 0.95, 17, 1)).astype(np.uint8)
        yield RecordBatch(ts, src, np.uint64(model.dst_base) + dst_idx, proto)


def generate_trace(model: SynthModel, n_packets: int) -> RecordBatch:
    return RecordBatch.concat(list(iter_trace(model, n_packets)))


def format_csv(batch: RecordBatch) -> str:
    """Render records in the ``csv`` input format (with protocol column)."""
    if not len(batch):
        return ""
    rows = zip(batch.ts.tolist(), batch.src.tolist(), batch.dst.tolist(), batch.proto.tolist())
    return "\n".join(map("%d,%d,%d,%d".__mod__, rows)) + "\n"


def write_csv(batches, fh: TextIO) -> int:
    n = 0
    for b in batches:
        fh.write(format_csv(b))
        n += len(b)
    return n
