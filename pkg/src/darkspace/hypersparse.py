"""Hypersparse traffic matrices over a 64-bit identifier space.

A :class:`TrafficMatrix` stores only its nonzero entries as three parallel
arrays (row id, column id, count) kept in row-major sorted order.  Storage and
every operation scale with the number of stored entries; no dense dimension
is ever materialised, so identifiers may span the full ``uint64`` range.

The ``.tmx`` container (see ``docs/tmx_format.md``) serialises a matrix as
delta-encoded LEB128 varint streams followed by a CRC-32 trailer.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import DecodeError

_U64 = np.uint64
_I64_MAX = np.iinfo(np.int64).max
_LOW32 = 1 << 32


@dataclass(frozen=True)
class MatrixMeta:
    """Provenance of a matrix: leaf-window index range and timestamp range.

    ``window_stop`` is exclusive.  Fields are ``None`` when unknown (for
    example a matrix built directly from triples).
    """

    window_start: int | None = None
    window_stop: int | None = None
    t_min: int | None = None
    t_max: int | None = None

    def combine(self, other: "MatrixMeta") -> "MatrixMeta":
        def lo(a, b):
            return b if a is None else a if b is None else min(a, b)

        def hi(a, b):
            return b if a is None else a if b is None else max(a, b)

        return MatrixMeta(
            lo(self.window_start, other.window_start),
            hi(self.window_stop, other.window_stop),
            lo(self.t_min, other.t_min),
            hi(self.t_max, other.t_max),
        )


class SparseVector:
    """Sparse map from 64-bit id to positive count, ids sorted ascending."""

    __slots__ = ("ids", "values")

    def __init__(self, ids: np.ndarray, values: np.ndarray):
        self.ids = np.asarray(ids, dtype=_U64)
        self.values = np.asarray(values, dtype=np.int64)

    def __len__(self) -> int:
        return int(self.ids.size)

    def __getitem__(self, key: int) -> int:
        i = int(np.searchsorted(self.ids, _U64(key)))
        if i < self.ids.size and int(self.ids[i]) == key:
            return int(self.values[i])
        return 0

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SparseVector):
            return NotImplemented
        return np.array_equal(self.ids, other.ids) and np.array_equal(self.values, other.values)

    def __repr__(self) -> str:
        return f"SparseVector({self.to_dict()!r})" if len(self) <= 8 else f"SparseVector(<{len(self)} entries>)"

    def to_dict(self) -> dict[int, int]:
        return dict(zip(self.ids.tolist(), self.values.tolist()))

    def total(self) -> int:
        return int(self.values.sum(dtype=np.int64))

    def max(self) -> int:
        return int(self.values.max()) if self.values.size else 0


class TrafficMatrix:
    """Immutable hypersparse counts matrix ``A(i, j)``.

    Entries are held as sorted ``rows``/``cols`` (``uint64``) and ``vals``
    (``int64``, all > 0).  Instances should be built with
    :func:`matrix_from_packets`, :func:`from_pairs` or :func:`from_triples`.
    """

    __slots__ = ("rows", "cols", "vals", "meta")

    def __init__(self, rows: np.ndarray, cols: np.ndarray, vals: np.ndarray,
                 meta: MatrixMeta | None = None):
        self.rows = rows
        self.cols = cols
        self.vals = vals
        self.meta = meta or MatrixMeta()
        for a in (rows, cols, vals):
            a.flags.writeable = False

    @classmethod
    def empty(cls, meta: MatrixMeta | None = None) -> "TrafficMatrix":
        return cls(np.empty(0, _U64), np.empty(0, _U64), np.empty(0, np.int64), meta)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TrafficMatrix):
            return NotImplemented
        return (
            np.array_equal(self.rows, other.rows)
            and np.array_equal(self.cols, other.cols)
            and np.array_equal(self.vals, other.vals)
            and self.meta == other.meta
        )

    def same_entries(self, other: "TrafficMatrix") -> bool:
        """Entry-map equality, ignoring provenance metadata."""
        return (
            np.array_equal(self.rows, other.rows)
            and np.array_equal(self.cols, other.cols)
            and np.array_equal(self.vals, other.vals)
        )

    def __repr__(self) -> str:
        return f"TrafficMatrix(nnz={nnz(self)}, total={total(self)}, meta={self.meta})"

    def __getitem__(self, key: tuple[int, int]) -> int:
        r, c = key
        lo = np.searchsorted(self.rows, _U64(r), side="left")
        hi = np.searchsorted(self.rows, _U64(r), side="right")
        j = lo + np.searchsorted(self.cols[lo:hi], _U64(c))
        if j < hi and int(self.cols[j]) == c:
            return int(self.vals[j])
        return 0

    def to_dict(self) -> dict[tuple[int, int], int]:
        return {(r, c): v for r, c, v in self.triples()}

    def triples(self) -> list[tuple[int, int, int]]:
        return list(zip(self.rows.tolist(), self.cols.tolist(), self.vals.tolist()))

    @property
    def nbytes(self) -> int:
        return self.rows.nbytes + self.cols.nbytes + self.vals.nbytes


# -- construction -----------------------------------------------------------

def _fits_32(rows: np.ndarray, cols: np.ndarray) -> bool:
    return rows.size == 0 or (int(rows.max()) < _LOW32 and int(cols.max()) < _LOW32)


def _reduce_sorted(rows, cols, vals):
    n = rows.size
    if n == 0:
        return rows, cols, vals
    new = np.empty(n, dtype=bool)
    new[0] = True
    np.not_equal(rows[1:], rows[:-1], out=new[1:])
    new[1:] |= cols[1:] != cols[:-1]
    starts = np.flatnonzero(new)
    if starts.size == n:
        return rows, cols, vals
    return rows[starts], cols[starts], np.add.reduceat(vals, starts)


def _canonical(rows, cols, vals, runs: bool = False):
    """Sort triples row-major and sum duplicates.

    With ``runs=True`` the input is a concatenation of already-sorted runs
    and a stable (run-merging) sort is used.
    """
    rows = np.asarray(rows, dtype=_U64)
    cols = np.asarray(cols, dtype=_U64)
    vals = np.asarray(vals, dtype=np.int64)
    if rows.size == 0:
        return rows, cols, vals
    if _fits_32(rows, cols):
        key = (rows << _U64(32)) | cols
        order = np.argsort(key, kind="stable" if runs else "quicksort")
        key = key[order]
        rows, cols = key >> _U64(32), key & _U64(0xFFFFFFFF)
    else:
        order = np.lexsort((cols, rows))
        rows, cols = rows[order], cols[order]
    return _reduce_sorted(rows, cols, vals[order])


def from_pairs(src: np.ndarray, dst: np.ndarray, meta: MatrixMeta | None = None) -> TrafficMatrix:
    """Count each (src, dst) pair; the result's total equals ``len(src)``."""
    src = np.asarray(src, dtype=_U64)
    dst = np.asarray(dst, dtype=_U64)
    if src.shape != dst.shape:
        raise ValueError("src and dst must have equal length")
    if src.size == 0:
        return TrafficMatrix.empty(meta)
    if _fits_32(src, dst):
        key = np.sort((src << _U64(32)) | dst)
        new = np.empty(key.size, dtype=bool)
        new[0] = True
        np.not_equal(key[1:], key[:-1], out=new[1:])
        starts = np.flatnonzero(new)
        counts = np.diff(np.append(starts, key.size)).astype(np.int64)
        key = key[starts]
        return TrafficMatrix(key >> _U64(32), key & _U64(0xFFFFFFFF), counts, meta)
    r, c, v = _canonical(src, dst, np.ones(src.size, np.int64))
    return TrafficMatrix(r, c, v, meta)


def from_triples(entries: Mapping[tuple[int, int], int] | Iterable[tuple[int, int, int]],
                 meta: MatrixMeta | None = None) -> TrafficMatrix:
    """Build a matrix from ``{(row, col): count}`` or ``(row, col, count)`` triples.

    Duplicate coordinates are summed; zero counts are dropped.
    """
    if isinstance(entries, Mapping):
        items = [(r, c, v) for (r, c), v in entries.items()]
    else:
        items = list(entries)
    if not items:
        return TrafficMatrix.empty(meta)
    r, c, v = (np.array(x, dtype=dt) for x, dt in zip(zip(*items), (_U64, _U64, np.int64)))
    if (v < 0).any():
        raise ValueError("counts must be nonnegative")
    keep = v > 0
    r, c, v = _canonical(r[keep], c[keep], v[keep])
    return TrafficMatrix(r, c, v, meta)


def matrix_from_packets(window) -> TrafficMatrix:
    """Aggregate one :class:`~darkspace.ingest.LeafWindow` into ``A_t``."""
    rec = window.records
    meta = MatrixMeta(
        window.index,
        window.index + 1,
        int(rec.ts[0]) if len(rec) else None,
        int(rec.ts[-1]) if len(rec) else None,
    )
    return from_pairs(rec.src, rec.dst, meta)


def merge(a: TrafficMatrix, b: TrafficMatrix) -> TrafficMatrix:
    """Entrywise sum of two matrices (the hierarchy's aggregation step)."""
    if total(a) + total(b) > _I64_MAX:
        raise OverflowError("merged packet count exceeds 64-bit range")
    meta = a.meta.combine(b.meta)
    if nnz(a) == 0:
        return TrafficMatrix(b.rows, b.cols, b.vals, meta)
    if nnz(b) == 0:
        return TrafficMatrix(a.rows, a.cols, a.vals, meta)
    r, c, v = _canonical(
        np.concatenate([a.rows, b.rows]),
        np.concatenate([a.cols, b.cols]),
        np.concatenate([a.vals, b.vals]),
        runs=True,
    )
    return TrafficMatrix(r, c, v, meta)


def relabel(a: TrafficMatrix, row_map, col_map=None) -> TrafficMatrix:
    """Apply id bijections (vectorised callables on uint64 arrays) to rows and columns."""
    col_map = col_map or row_map
    r, c, v = _canonical(row_map(a.rows), col_map(a.cols), a.vals)
    return TrafficMatrix(r, c, v, a.meta)


# -- reductions ---------------------------------------------------------------

def nnz(a: TrafficMatrix) -> int:
    return int(a.vals.size)


def total(a: TrafficMatrix) -> int:
    return int(a.vals.sum(dtype=np.int64))


def max_value(a: TrafficMatrix) -> int:
    return int(a.vals.max()) if a.vals.size else 0


def _row_starts(a: TrafficMatrix) -> np.ndarray:
    if a.rows.size == 0:
        return np.empty(0, np.intp)
    new = np.empty(a.rows.size, dtype=bool)
    new[0] = True
    np.not_equal(a.rows[1:], a.rows[:-1], out=new[1:])
    return np.flatnonzero(new)


def _group(keys: np.ndarray, vals: np.ndarray | None) -> SparseVector:
    if keys.size == 0:
        return SparseVector(np.empty(0, _U64), np.empty(0, np.int64))
    if vals is None:
        ids, counts = np.unique(keys, return_counts=True)
        return SparseVector(ids, counts)
    order = np.argsort(keys, kind="stable")
    k = keys[order]
    new = np.empty(k.size, dtype=bool)
    new[0] = True
    np.not_equal(k[1:], k[:-1], out=new[1:])
    starts = np.flatnonzero(new)
    return SparseVector(k[starts], np.add.reduceat(vals[order], starts))


def row_sums(a: TrafficMatrix) -> SparseVector:
    """Packets from each source: ``A 1``."""
    s = _row_starts(a)
    if s.size == 0:
        return _group(a.rows, None)
    return SparseVector(a.rows[s], np.add.reduceat(a.vals, s))


def row_support(a: TrafficMatrix) -> SparseVector:
    """Source fan-out: number of distinct columns per row, ``|A|_0 1``."""
    s = _row_starts(a)
    return SparseVector(a.rows[s], np.diff(np.append(s, a.rows.size)))


def col_sums(a: TrafficMatrix) -> SparseVector:
    """Packets to each destination: ``sum_i A(i, j)``."""
    return _group(a.cols, a.vals)


def col_support(a: TrafficMatrix) -> SparseVector:
    """Destination fan-in: number of distinct rows per column, ``sum_i |A(i, j)|_0``."""
    return _group(a.cols, None)


# -- varint codec -------------------------------------------------------------

_MAX_VARINT = 10


def encode_varints(values: np.ndarray) -> bytes:
    """LEB128-encode an array of unsigned 64-bit integers."""
    v = np.asarray(values, dtype=_U64)
    if v.size == 0:
        return b""
    nb = np.ones(v.size, dtype=np.intp)
    for k in range(1, _MAX_VARINT):
        nb += v >= _U64(1 << (7 * k))
    ends = np.cumsum(nb)
    starts = ends - nb
    out = np.empty(int(ends[-1]), dtype=np.uint8)
    for k in range(int(nb.max())):
        m = nb > k
        byte = ((v[m] >> _U64(7 * k)) & _U64(0x7F)).astype(np.uint8)
        byte[nb[m] > k + 1] |= 0x80
        out[starts[m] + k] = byte
    return out.tobytes()


def decode_varints(buf: np.ndarray, offset: int, count: int) -> tuple[np.ndarray, int]:
    """Decode ``count`` varints from ``buf`` (uint8 array) starting at ``offset``."""
    if count == 0:
        return np.empty(0, _U64), offset
    tail = buf[offset:]
    ends = np.flatnonzero(tail < 0x80)[:count]
    if ends.size < count:
        raise DecodeError("truncated varint stream", buf.size)
    starts = np.empty(count, dtype=np.intp)
    starts[0] = 0
    starts[1:] = ends[:-1] + 1
    lengths = ends - starts + 1
    if int(lengths.max()) > _MAX_VARINT:
        bad = int(starts[np.argmax(lengths > _MAX_VARINT)])
        raise DecodeError("varint longer than 10 bytes", offset + bad)
    wide = (lengths == _MAX_VARINT) & (tail[ends] > 1)
    if wide.any():
        raise DecodeError("varint exceeds 64 bits", offset + int(starts[np.argmax(wide)]))
    seg = tail[: int(ends[-1]) + 1]
    pos = np.arange(seg.size) - np.repeat(starts, lengths)
    parts = (seg & 0x7F).astype(_U64) << (_U64(7) * pos.astype(_U64))
    return np.add.reduceat(parts, starts), offset + seg.size


# -- .tmx container -----------------------------------------------------------

MAGIC = b"TMX\x00"
VERSION = 1
_F_WINDOW = 0x01
_F_TIME = 0x02
_HEADER = struct.Struct("<4sBB")


def serialize(a: TrafficMatrix) -> bytes:
    """Encode ``a`` as a ``.tmx`` container."""
    meta = a.meta
    flags = 0
    head: list[int] = []
    if meta.window_start is not None and meta.window_stop is not None:
        flags |= _F_WINDOW
        head += [meta.window_start, meta.window_stop]
    if meta.t_min is not None and meta.t_max is not None:
        flags |= _F_TIME
        head += [meta.t_min, meta.t_max]
    s = _row_starts(a)
    head += [int(s.size), nnz(a)]

    urows = a.rows[s]
    row_gap = np.diff(urows, prepend=_U64(0))
    row_len = np.diff(np.append(s, a.rows.size)).astype(_U64)
    col_delta = a.cols.copy()
    if a.cols.size:
        col_delta[1:] -= a.cols[:-1]
        col_delta[s] = a.cols[s]
    body = b"".join([
        _HEADER.pack(MAGIC, VERSION, flags),
        encode_varints(np.array(head, dtype=_U64)),
        encode_varints(row_gap),
        encode_varints(row_len),
        encode_varints(col_delta),
        encode_varints(a.vals.astype(_U64) - _U64(1)),
    ])
    return body + struct.pack("<I", zlib.crc32(body))


def deserialize(data: bytes) -> TrafficMatrix:
    """Decode a ``.tmx`` container produced by :func:`serialize`."""
    if len(data) < _HEADER.size + 4:
        raise DecodeError("container shorter than header", len(data))
    magic, version, flags = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise DecodeError("bad magic", 0)
    if version != VERSION:
        raise DecodeError(f"unsupported version {version}", 4)
    if flags & ~(_F_WINDOW | _F_TIME):
        raise DecodeError(f"unknown flags 0x{flags:02x}", 5)
    (crc,) = struct.unpack_from("<I", data, len(data) - 4)
    if zlib.crc32(data[:-4]) != crc:
        raise DecodeError("checksum mismatch", len(data) - 4)

    buf = np.frombuffer(data, dtype=np.uint8, count=len(data) - 4)
    n_head = 2 + 2 * bool(flags & _F_WINDOW) + 2 * bool(flags & _F_TIME)
    head, off = decode_varints(buf, _HEADER.size, n_head)
    head = [int(x) for x in head]
    meta_vals = [None, None, None, None]
    i = 0
    if flags & _F_WINDOW:
        meta_vals[0:2] = head[0:2]
        i = 2
    if flags & _F_TIME:
        meta_vals[2:4] = head[i:i + 2]
        i += 2
    n_rows, n_nz = head[i], head[i + 1]
    if n_rows > n_nz:
        raise DecodeError("row count exceeds entry count", _HEADER.size)

    row_gap, off = decode_varints(buf, off, n_rows)
    row_len, off_len = decode_varints(buf, off, n_rows)
    if int(row_len.sum(dtype=_U64)) != n_nz or (n_rows and int(row_len.min()) == 0):
        raise DecodeError("row lengths inconsistent with entry count", off)
    col_delta, off = decode_varints(buf, off_len, n_nz)
    vals, off = decode_varints(buf, off, n_nz)
    if off != buf.size:
        raise DecodeError("trailing bytes after entry streams", off)

    meta = MatrixMeta(*meta_vals)
    if n_nz == 0:
        return TrafficMatrix.empty(meta)
    if row_gap[1:].min(initial=1) == 0:
        raise DecodeError("row ids not strictly increasing", _HEADER.size)
    lens = row_len.astype(np.intp)
    starts = np.cumsum(lens) - lens
    within = np.ones(n_nz, dtype=bool)
    within[starts] = False
    if (col_delta[within] == 0).any():
        raise DecodeError("column ids not strictly increasing within a row", off_len)
    if int(vals.max()) >= 2**63 - 1:
        raise DecodeError("packet count exceeds int64", off_len)
    rows = np.repeat(np.cumsum(row_gap, dtype=_U64), lens)
    csum = np.cumsum(col_delta, dtype=_U64)
    # column deltas restart at each row: subtract the running sum before the row
    base = np.zeros(n_rows, dtype=_U64)
    base[1:] = csum[starts[1:] - 1]
    cols = csum - np.repeat(base, lens)
    vals = (vals + _U64(1)).astype(np.int64)
    return TrafficMatrix(rows, cols, vals, meta)


def bytes_per_packet(a: TrafficMatrix) -> float:
    n = total(a)
    return len(serialize(a)) / n if n else float("nan")
