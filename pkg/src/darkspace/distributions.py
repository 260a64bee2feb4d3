"""Degree histograms and logarithmically binned probability distributions.

Bin ``i`` has upper edge ``2**i`` and covers the integer degrees
``(2**(i-1), 2**i]``; bin 0 holds degree 1 only.  With right-closed bins the
mass of bin ``i`` is exactly the difference of the cumulative distribution
at edges ``i`` and ``i - 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DataError
from .hypersparse import SparseVector


@dataclass(frozen=True)
class DegreeHistogram:
    degrees: np.ndarray  # sorted, strictly positive
    counts: np.ndarray   # n(d) > 0 for each degree

    @property
    def d_max(self) -> int:
        return int(self.degrees[-1]) if self.degrees.size else 0

    @property
    def n_entities(self) -> int:
        return int(self.counts.sum())

    def to_dict(self) -> dict[int, int]:
        return dict(zip(self.degrees.tolist(), self.counts.tolist()))

    def leaves(self) -> int:
        """Entities of degree 1."""
        return int(self.counts[0]) if self.degrees.size and self.degrees[0] == 1 else 0


@dataclass(frozen=True)
class BinnedDistribution:
    bin_edges: np.ndarray   # 2**i
    mass: np.ndarray        # pooled probability per bin
    cumulative: np.ndarray  # cumulative probability at each edge
    bin_counts: np.ndarray  # entities per bin (exact integers)

    @property
    def n_bins(self) -> int:
        return int(self.bin_edges.size)


@dataclass(frozen=True)
class DistributionStats:
    bin_edges: np.ndarray
    mean: np.ndarray
    stddev: np.ndarray
    n_windows: int


def degree_histogram(v: SparseVector | np.ndarray) -> DegreeHistogram:
    values = v.values if isinstance(v, SparseVector) else np.asarray(v, dtype=np.int64)
    if values.size and int(values.min()) <= 0:
        raise DataError("degrees must be positive")
    degrees, counts = np.unique(values, return_counts=True)
    return DegreeHistogram(degrees.astype(np.int64), counts.astype(np.int64))


def bin_index(degrees: np.ndarray) -> np.ndarray:
    """Logarithmic bin of each positive degree: ``ceil(log2(d))``."""
    d = np.asarray(degrees, dtype=np.int64)
    if d.size and int(d.max()) >= 1 << 53:
        return np.array([(int(x) - 1).bit_length() for x in d], dtype=np.int64)
    _, exp = np.frexp((d - 1).astype(np.float64))
    return exp.astype(np.int64)


def binned_distribution(h: DegreeHistogram) -> BinnedDistribution:
    if h.degrees.size == 0:
        raise DataError("cannot bin an empty histogram")
    idx = bin_index(h.degrees)
    n_bins = int(idx[-1]) + 1
    bin_counts = np.zeros(n_bins, dtype=np.int64)
    np.add.at(bin_counts, idx, h.counts)
    n = int(h.counts.sum())
    return BinnedDistribution(
        bin_edges=np.left_shift(1, np.arange(n_bins, dtype=np.int64)),
        mass=bin_counts / n,
        cumulative=np.cumsum(bin_counts) / n,
        bin_counts=bin_counts,
    )


def distribution_stats(dists: Sequence[BinnedDistribution]) -> DistributionStats:
    """Per-bin mean and population standard deviation across windows."""
    if not dists:
        raise DataError("need at least one distribution")
    width = max(d.n_bins for d in dists)
    stack = np.zeros((len(dists), width))
    for k, d in enumerate(dists):
        stack[k, : d.n_bins] = d.mass
    return DistributionStats(
        bin_edges=np.left_shift(1, np.arange(width, dtype=np.int64)),
        mean=stack.mean(axis=0),
        stddev=stack.std(axis=0),
        n_windows=len(dists),
    )


def vector_distribution(v: SparseVector) -> BinnedDistribution | None:
    """Binned distribution of a degree vector, or None when the vector is empty."""
    return binned_distribution(degree_histogram(v)) if len(v) else None
