"""Packet-record parsing, valid-packet filtering, and fixed-size windowing.

Records travel through the pipeline as a columnar :class:`RecordBatch`
(numpy arrays) rather than one object per packet.  Iterating a batch yields
:class:`PacketRecord` values for callers that want them.

Two text formats are understood::

    csv     timestamp,src,dst[,proto]           decimal integers
    dotted  timestamp,a.b.c.d,e.f.g.h[,proto]   IPv4 dotted quads

Blank lines and anything after ``#`` are ignored.  Lines that fail to parse
are skipped and counted.
"""

from __future__ import annotations

import io
import logging
import os
import re
from dataclasses import dataclass
from typing import BinaryIO, Iterable, Iterator

import numpy as np
import pandas as pd

from .errors import DataError, UsageError

log = logging.getLogger(__name__)

FORMATS = ("csv", "dotted")
_U64_MAX = (1 << 64) - 1
_BLOCK_BYTES = 32 << 20
_COMMENT = re.compile(rb"#[^\n]*")


@dataclass(frozen=True, slots=True)
class PacketRecord:
    timestamp: int
    src: int
    dst: int
    proto: int = 0


class RecordBatch:
    """Columnar packet records: ``ts``, ``src``, ``dst`` (uint64) and ``proto`` (uint8)."""

    __slots__ = ("ts", "src", "dst", "proto")

    def __init__(self, ts, src, dst, proto=None):
        self.ts = np.asarray(ts, dtype=np.uint64)
        self.src = np.asarray(src, dtype=np.uint64)
        self.dst = np.asarray(dst, dtype=np.uint64)
        self.proto = (np.zeros(self.ts.size, np.uint8) if proto is None
                      else np.asarray(proto, dtype=np.uint8))
        n = self.ts.size
        if not (self.src.size == self.dst.size == self.proto.size == n):
            raise ValueError("record columns must have equal length")

    @classmethod
    def empty(cls) -> "RecordBatch":
        return cls(np.empty(0, np.uint64), np.empty(0, np.uint64), np.empty(0, np.uint64))

    @classmethod
    def from_records(cls, records: Iterable[PacketRecord | tuple]) -> "RecordBatch":
        rows = [r if isinstance(r, PacketRecord) else PacketRecord(*r) for r in records]
        if not rows:
            return cls.empty()
        return cls(
            [r.timestamp for r in rows], [r.src for r in rows],
            [r.dst for r in rows], [r.proto for r in rows],
        )

    @classmethod
    def concat(cls, batches: list["RecordBatch"]) -> "RecordBatch":
        batches = [b for b in batches if len(b)]
        if not batches:
            return cls.empty()
        if len(batches) == 1:
            return batches[0]
        return cls(*(np.concatenate([getattr(b, f) for b in batches]) for f in cls.__slots__))

    def __len__(self) -> int:
        return int(self.ts.size)

    def __getitem__(self, idx) -> "RecordBatch | PacketRecord":
        if isinstance(idx, (int, np.integer)):
            return PacketRecord(int(self.ts[idx]), int(self.src[idx]),
                                int(self.dst[idx]), int(self.proto[idx]))
        return RecordBatch(self.ts[idx], self.src[idx], self.dst[idx], self.proto[idx])

    def __iter__(self) -> Iterator[PacketRecord]:
        for t, s, d, p in zip(self.ts.tolist(), self.src.tolist(),
                              self.dst.tolist(), self.proto.tolist()):
            yield PacketRecord(t, s, d, p)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RecordBatch):
            return NotImplemented
        return all(np.array_equal(getattr(self, f), getattr(other, f)) for f in self.__slots__)

    def __repr__(self) -> str:
        return f"RecordBatch(n={len(self)})"


# -- parsing ------------------------------------------------------------------

def _parse_ipv4(text: str) -> int:
    parts = text.split(".")
    if len(parts) != 4:
        raise ValueError(text)
    value = 0
    for p in parts:
        octet = int(p)
        if not 0 <= octet <= 255 or not p.strip().isdigit():
            raise ValueError(text)
        value = (value << 8) | octet
    return value


def _parse_uint(text: str, limit: int = _U64_MAX) -> int:
    t = text.strip()
    if not t.isdigit():
        raise ValueError(text)
    v = int(t)
    if v > limit:
        raise ValueError(text)
    return v


def _slow_parse(block: bytes, fmt: str) -> tuple[RecordBatch, int]:
    """Line-by-line parser; the reference behaviour for malformed input."""
    addr = _parse_ipv4 if fmt == "dotted" else _parse_uint
    ts, src, dst, proto = [], [], [], []
    skipped = 0
    for raw in block.split(b"\n"):
        line = raw.split(b"#", 1)[0].decode("ascii", "replace").strip()
        if not line:
            continue
        fields = line.split(",")
        try:
            if len(fields) == 4 and fields[3].strip():
                p = _parse_uint(fields[3], 255)
            elif len(fields) == 3 or (len(fields) == 4 and not fields[3].strip()):
                p = 0
            else:
                raise ValueError(line)
            rec = (_parse_uint(fields[0]), addr(fields[1]), addr(fields[2]), p)
        except ValueError:
            skipped += 1
            continue
        ts.append(rec[0])
        src.append(rec[1])
        dst.append(rec[2])
        proto.append(rec[3])
    return RecordBatch(ts, src, dst, proto), skipped


def _fast_parse_csv(block: bytes) -> RecordBatch | None:
    """pandas C-engine parse; returns None when the block needs the strict parser.

    Only blocks made purely of digits, commas and line breaks (after removing
    comments) take this path, so signs, blanks and stray text always go
    through the strict parser.
    """
    if b"#" in block:
        block = _COMMENT.sub(b"", block)
    if block.translate(None, b"0123456789,\r\n"):
        return None
    try:
        df = pd.read_csv(
            io.BytesIO(block), header=None, names=["t", "s", "d", "p"], index_col=False,
            engine="c",
            dtype={"t": np.uint64, "s": np.uint64, "d": np.uint64, "p": np.float64},
        )
    except (ValueError, OverflowError, TypeError, pd.errors.ParserError):
        return None
    if df.empty:
        return RecordBatch.empty()
    p = df["p"].to_numpy()
    missing = np.isnan(p)
    if (~missing).any():
        q = p[~missing]
        if ((q != np.floor(q)) | (q < 0) | (q > 255)).any():
            return None
    p = np.where(missing, 0, p).astype(np.uint8)
    return RecordBatch(df["t"].to_numpy(), df["s"].to_numpy(), df["d"].to_numpy(), p)


def parse_block(block: bytes, fmt: str) -> tuple[RecordBatch, int]:
    """Parse an in-memory block of whole lines, returning ``(records, skipped)``."""
    if fmt not in FORMATS:
        raise UsageError(f"unknown input format {fmt!r}; expected one of {', '.join(FORMATS)}")
    if not block.strip():
        return RecordBatch.empty(), 0
    if fmt == "csv":
        batch = _fast_parse_csv(block)
        if batch is not None:
            return batch, 0
    return _slow_parse(block, fmt)


def _open_binary(source) -> tuple[BinaryIO, bool]:
    if isinstance(source, (bytes, bytearray, memoryview)):
        return io.BytesIO(bytes(source)), True
    if isinstance(source, (str, os.PathLike)):
        return open(source, "rb"), True
    return source, False


def iter_parse(source, fmt: str, block_bytes: int = _BLOCK_BYTES) -> Iterator[tuple[RecordBatch, int]]:
    """Stream ``(records, skipped)`` pairs from a path, bytes, or binary file object.

    Input is read in blocks of roughly ``block_bytes`` cut at line boundaries,
    so memory stays bounded for arbitrarily large traces.
    """
    if fmt not in FORMATS:
        raise UsageError(f"unknown input format {fmt!r}; expected one of {', '.join(FORMATS)}")
    fh, owned = _open_binary(source)
    try:
        carry = b""
        while True:
            chunk = fh.read(block_bytes)
            if not chunk:
                break
            data = carry + chunk
            cut = data.rfind(b"\n")
            if cut < 0:
                carry = data
                continue
            carry = data[cut + 1:]
            yield parse_block(data[: cut + 1], fmt)
        if carry:
            yield parse_block(carry, fmt)
    finally:
        if owned:
            fh.close()


def parse_records(source, fmt: str) -> tuple[RecordBatch, int]:
    """Parse a whole stream.  Returns the records and the malformed-line count."""
    batches, skipped = [], 0
    for batch, s in iter_parse(source, fmt):
        batches.append(batch)
        skipped += s
    return RecordBatch.concat(batches), skipped


def check_monotone(batch: RecordBatch, previous: int | None = None, offset: int = 0) -> None:
    """Raise :class:`DataError` if timestamps decrease (optionally across batches)."""
    if not len(batch):
        return
    if previous is not None and int(batch.ts[0]) < previous:
        raise DataError(f"timestamp decreases at record {offset}")
    bad = np.flatnonzero(batch.ts[1:] < batch.ts[:-1])
    if bad.size:
        raise DataError(f"timestamp decreases at record {offset + int(bad[0]) + 1}")


# -- filtering ----------------------------------------------------------------

@dataclass(frozen=True)
class FilterSpec:
    """Valid-packet criteria.  Every present clause must hold; ranges are inclusive."""

    allowed_protocols: frozenset[int] | None = None
    src_range: tuple[int, int] | None = None
    dst_range: tuple[int, int] | None = None
    time_range: tuple[int, int] | None = None

    def is_empty(self) -> bool:
        return all(v is None for v in (self.allowed_protocols, self.src_range,
                                       self.dst_range, self.time_range))

    def mask(self, batch: RecordBatch) -> np.ndarray:
        keep = np.ones(len(batch), dtype=bool)
        if self.allowed_protocols is not None:
            keep &= np.isin(batch.proto, np.fromiter(self.allowed_protocols, np.uint8))
        for col, rng in ((batch.src, self.src_range), (batch.dst, self.dst_range),
                         (batch.ts, self.time_range)):
            if rng is not None:
                lo, hi = rng
                keep &= (col >= np.uint64(lo)) & (col <= np.uint64(hi))
        return keep

    def accepts(self, record: PacketRecord) -> bool:
        if self.allowed_protocols is not None and record.proto not in self.allowed_protocols:
            return False
        for value, rng in ((record.src, self.src_range), (record.dst, self.dst_range),
                           (record.timestamp, self.time_range)):
            if rng is not None and not rng[0] <= value <= rng[1]:
                return False
        return True


def filter_valid(records: RecordBatch, spec: FilterSpec) -> RecordBatch:
    """Keep records accepted by the filter, preserving order."""
    if spec.is_empty():
        return records
    return records[spec.mask(records)]


# -- windowing ----------------------------------------------------------------

@dataclass(frozen=True)
class LeafWindow:
    index: int
    n_valid: int
    records: RecordBatch


class Windower:
    """Incrementally tile a record stream into contiguous windows of ``leaf_size``."""

    def __init__(self, leaf_size: int):
        if leaf_size < 1:
            raise UsageError("leaf_size must be a positive integer")
        self.leaf_size = leaf_size
        self.next_index = 0
        self._pending: list[RecordBatch] = []
        self._pending_n = 0

    @property
    def remainder(self) -> int:
        """Records buffered but not yet emitted (dropped if the stream ends now)."""
        return self._pending_n

    def push(self, batch: RecordBatch) -> list[LeafWindow]:
        if not len(batch):
            return []
        self._pending.append(batch)
        self._pending_n += len(batch)
        if self._pending_n < self.leaf_size:
            return []
        data = RecordBatch.concat(self._pending)
        n_full = len(data) // self.leaf_size
        out = []
        for k in range(n_full):
            sl = slice(k * self.leaf_size, (k + 1) * self.leaf_size)
            out.append(LeafWindow(self.next_index, self.leaf_size, data[sl]))
            self.next_index += 1
        rest = data[n_full * self.leaf_size:]
        self._pending = [rest] if len(rest) else []
        self._pending_n = len(rest)
        return out


def partition_windows(records: RecordBatch, leaf_size: int) -> tuple[list[LeafWindow], int]:
    """Split records into full windows; returns ``(windows, dropped_remainder)``."""
    w = Windower(leaf_size)
    windows = w.push(records)
    return windows, w.remainder
