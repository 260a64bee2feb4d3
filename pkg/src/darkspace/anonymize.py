"""Keyed, prefix-preserving identifier anonymization.

Output bit ``i`` (counting from the most significant bit) is input bit ``i``
XOR one pseudorandom bit derived from the key and the first ``i`` input bits.
Two identifiers that share exactly ``k`` leading bits therefore map to outputs
that share exactly ``k`` leading bits, and the map is a bijection on the
``domain_bits``-wide identifier space.

The pseudorandom function is pluggable; the default is keyed BLAKE2b over the
prefix length and value, which makes outputs stable for a given key.
"""

from __future__ import annotations

import hashlib
import os
import secrets
import struct
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import UsageError
from .ingest import RecordBatch

KEY_ENV = "DARKSPACE_ANON_KEY"

PRF = Callable[[bytes, int, int], int]
"""``prf(key_bytes, prefix_len, prefix_value) -> 0 or 1``."""

_PREFIX = struct.Struct(">BQ")


def blake2b_prf(key: bytes, prefix_len: int, prefix: int) -> int:
    digest = hashlib.blake2b(_PREFIX.pack(prefix_len, prefix), key=key, digest_size=1).digest()
    return digest[0] >> 7


@dataclass(frozen=True)
class AnonKey:
    key_bytes: bytes = field(repr=False)
    domain_bits: int = 32

    def __post_init__(self):
        if len(self.key_bytes) != 32:
            raise UsageError("anonymization key must be exactly 32 bytes")
        if not 1 <= self.domain_bits <= 64:
            raise UsageError("domain_bits must be in [1, 64]")

    @classmethod
    def from_hex(cls, text: str, domain_bits: int = 32) -> "AnonKey":
        text = text.strip()
        if len(text) != 64:
            raise UsageError("key file must hold exactly 64 hex characters")
        try:
            raw = bytes.fromhex(text)
        except ValueError:
            raise UsageError("key file is not valid hex") from None
        return cls(raw, domain_bits)

    @classmethod
    def from_file(cls, path: str | os.PathLike, domain_bits: int = 32) -> "AnonKey":
        with open(path, "r", encoding="ascii", errors="replace") as fh:
            return cls.from_hex(fh.read(), domain_bits)

    @classmethod
    def generate(cls, domain_bits: int = 32) -> "AnonKey":
        return cls(secrets.token_bytes(32), domain_bits)

    def to_hex(self) -> str:
        return self.key_bytes.hex()


class Anonymizer:
    """Prefix-preserving map for one key, with a vectorised array path."""

    def __init__(self, key: AnonKey, prf: PRF = blake2b_prf):
        self.key = key
        self.prf = prf
        self.bits = key.domain_bits

    def _check(self, lo: int, hi: int) -> None:
        if lo < 0 or hi >= 1 << self.bits:
            raise UsageError(f"identifier outside {self.bits}-bit anonymization domain")

    def address(self, addr: int) -> int:
        addr = int(addr)
        self._check(addr, addr)
        n, kb = self.bits, self.key.key_bytes
        out = 0
        for i in range(n):
            prefix = addr >> (n - i) if i else 0
            bit = (addr >> (n - 1 - i)) & 1
            out = (out << 1) | (bit ^ self.prf(kb, i, prefix))
        return out

    def array(self, addrs: np.ndarray) -> np.ndarray:
        """Anonymize an array of identifiers.

        Work is proportional to the number of distinct prefixes present, so
        repeated and clustered addresses are cheap.
        """
        a = np.asarray(addrs, dtype=np.uint64)
        if a.size == 0:
            return a.copy()
        uniq, inverse = np.unique(a, return_inverse=True)
        self._check(0, int(uniq[-1]))
        n, kb, prf = self.bits, self.key.key_bytes, self.prf
        out = np.zeros(uniq.size, dtype=np.uint64)
        for i in range(n):
            shift = np.uint64(n - 1 - i)
            inbit = (uniq >> shift) & np.uint64(1)
            if i == 0:
                flips = np.full(uniq.size, prf(kb, 0, 0), dtype=np.uint64)
            else:
                prefixes = uniq >> np.uint64(n - i)
                # uniq is sorted, so equal prefixes are contiguous
                starts = np.flatnonzero(np.diff(prefixes, prepend=prefixes[0] + np.uint64(1)) != 0)
                bits = np.fromiter((prf(kb, i, p) for p in prefixes[starts].tolist()),
                                   dtype=np.uint64, count=starts.size)
                flips = np.repeat(bits, np.diff(np.append(starts, uniq.size)))
            out |= (inbit ^ flips) << shift
        return out[inverse.reshape(a.shape)]


def anonymize_address(key: AnonKey, addr: int, prf: PRF = blake2b_prf) -> int:
    return Anonymizer(key, prf).address(addr)


def anonymize_records(key: AnonKey, records: RecordBatch, dst_key: AnonKey | None = None,
                      prf: PRF = blake2b_prf) -> RecordBatch:
    """Anonymize ``src`` and ``dst`` of every record; timestamps and protocol unchanged.

    Both endpoints use ``key`` unless a separate ``dst_key`` is given.
    """
    if not len(records):
        return records
    src_anon = Anonymizer(key, prf)
    if dst_key is None:
        both = src_anon.array(np.concatenate([records.src, records.dst]))
        src, dst = both[: len(records)], both[len(records):]
    else:
        src = src_anon.array(records.src)
        dst = Anonymizer(dst_key, prf).array(records.dst)
    return RecordBatch(records.ts, src, dst, records.proto)
