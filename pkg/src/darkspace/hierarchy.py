"""Multi-temporal analysis by binary aggregation of leaf matrices.

Level 0 holds the leaf windows (``2**leaf_log2`` packets each).  Level ``k``
window ``i`` is ``merge(level[k-1][2i], level[k-1][2i+1])``, so pairing is
fixed by index and results do not depend on how merges are scheduled.
Quantities are computed once per matrix at every level; packet totals roll up
arithmetically, everything involving supports or maxima is recomputed on the
merged matrix.

Only two levels of matrices are alive at any time.  Leaves can be passed as
paths to ``.tmx`` files, in which case they are loaded inside the workers.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import Executor, ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .distributions import BinnedDistribution, DistributionStats, distribution_stats, vector_distribution
from .errors import DataError, UsageError
from .hypersparse import TrafficMatrix, deserialize, matrix_from_packets, merge, nnz, total
from .ingest import RecordBatch, partition_windows
from .quantities import DEGREE_QUANTITIES, WindowSummary, degree_vectors, summary_from_vectors

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class HierarchyConfig:
    leaf_log2: int = 17
    top_log2: int = 27
    summaries: bool = True
    distributions: bool = True
    # drop trailing leaves that do not fill a complete top-level window
    align_to_top: bool = True

    def validate(self) -> None:
        if not 0 < self.leaf_log2 <= self.top_log2 <= 40:
            raise UsageError("need 0 < leaf_log2 <= top_log2 <= 40")

    @property
    def leaf_size(self) -> int:
        return 1 << self.leaf_log2


@dataclass
class LevelResult:
    level: int
    n_v: int
    summaries: list[WindowSummary] = field(default_factory=list)
    distributions: dict[str, DistributionStats] = field(default_factory=dict)
    nnz: list[int] = field(default_factory=list)
    merge_ratios: list[float] = field(default_factory=list)
    dropped: int = 0  # windows at this level left unpaired for the next level

    @property
    def n_windows(self) -> int:
        return len(self.nnz)


@dataclass
class Hierarchy:
    levels: list[LevelResult]
    excluded_leaves: int = 0

    def __iter__(self):
        return iter(self.levels)

    def __len__(self) -> int:
        return len(self.levels)

    def __getitem__(self, k: int) -> LevelResult:
        return self.levels[k]


@dataclass
class _Node:
    matrix: TrafficMatrix
    summary: WindowSummary | None
    dists: dict[str, BinnedDistribution] | None
    ratio: float | None = None


def _analyze(a: TrafficMatrix, n_v: int, valid: int, want_summary: bool, want_dists: bool) -> _Node:
    summary = dists = None
    if want_summary or want_dists:
        dv = degree_vectors(a)
        if want_summary:
            summary = summary_from_vectors(dv, window_size=n_v, valid_packets=valid)
        if want_dists:
            dists = {q: vector_distribution(dv.vector(q)) for q in DEGREE_QUANTITIES}
    return _Node(a, summary, dists)


def _leaf_task(args) -> _Node:
    index, leaf, n_v, want_s, want_d = args
    if not isinstance(leaf, TrafficMatrix):
        with open(leaf, "rb") as fh:
            leaf = deserialize(fh.read())
    if total(leaf) != n_v:
        raise DataError(f"leaf {index} holds {total(leaf)} packets, expected {n_v}")
    return _analyze(leaf, n_v, n_v, want_s, want_d)


def _merge_task(args) -> _Node:
    left, right, valid, n_v, want_s, want_d = args
    m = merge(left, right)
    node = _analyze(m, n_v, valid, want_s, want_d)
    node.ratio = nnz(m) / (nnz(left) + nnz(right))
    return node


def _valid(node: _Node) -> int:
    return node.summary.valid_packets if node.summary is not None else total(node.matrix)


class _SerialExecutor:
    def map(self, fn, items):
        return map(fn, items)


def _collect(level: int, n_v: int, nodes: list[_Node], cfg: HierarchyConfig) -> LevelResult:
    res = LevelResult(level, n_v)
    res.nnz = [nnz(n.matrix) for n in nodes]
    res.merge_ratios = [n.ratio for n in nodes if n.ratio is not None]
    res.dropped = len(nodes) % 2
    if cfg.summaries:
        res.summaries = [n.summary for n in nodes]
    if cfg.distributions and nodes:
        for q in DEGREE_QUANTITIES:
            ds = [n.dists[q] for n in nodes if n.dists[q] is not None]
            if ds:
                res.distributions[q] = distribution_stats(ds)
    return res


def build_hierarchy(leaves: Sequence[TrafficMatrix | str | os.PathLike], cfg: HierarchyConfig = HierarchyConfig(),
                    workers: int = 1) -> Hierarchy:
    """Aggregate leaves pairwise up to ``2**top_log2`` packets per window."""
    cfg.validate()
    if workers < 1:
        raise UsageError("workers must be at least 1")
    leaves = list(leaves)
    max_up = cfg.top_log2 - cfg.leaf_log2
    excluded = 0
    if cfg.align_to_top and leaves:
        height = min(max_up, len(leaves).bit_length() - 1)
        block = 1 << height
        keep = len(leaves) // block * block
        excluded = len(leaves) - keep
        leaves = leaves[:keep]
        if excluded:
            log.info("excluding %d trailing leaves outside full %d-leaf blocks", excluded, block)
    if not leaves:
        return Hierarchy([], excluded)

    ws, wd = cfg.summaries, cfg.distributions
    pool: Executor | _SerialExecutor
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else _SerialExecutor()
    try:
        n_v = cfg.leaf_size
        nodes = list(pool.map(_leaf_task, [(i, leaf, n_v, ws, wd) for i, leaf in enumerate(leaves)]))
        levels = [_collect(0, n_v, nodes, cfg)]
        for k in range(1, max_up + 1):
            if len(nodes) < 2:
                break
            n_v <<= 1
            jobs = [(nodes[2 * i].matrix, nodes[2 * i + 1].matrix,
                     _valid(nodes[2 * i]) + _valid(nodes[2 * i + 1]), n_v, ws, wd)
                    for i in range(len(nodes) // 2)]
            nodes = list(pool.map(_merge_task, jobs))
            del jobs
            levels.append(_collect(k, n_v, nodes, cfg))
    finally:
        if isinstance(pool, ProcessPoolExecutor):
            pool.shutdown()
    return Hierarchy(levels, excluded)


def leaves_from_records(records: RecordBatch, leaf_size: int) -> tuple[list[TrafficMatrix], int]:
    windows, remainder = partition_windows(records, leaf_size)
    return [matrix_from_packets(w) for w in windows], remainder


def window_series(records: RecordBatch | Iterable[RecordBatch], cfg: HierarchyConfig = HierarchyConfig(),
                  workers: int = 1) -> Hierarchy:
    """Window, aggregate and analyze already filtered/anonymized records."""
    cfg.validate()
    if not isinstance(records, RecordBatch):
        records = RecordBatch.concat(list(records))
    leaves, _ = leaves_from_records(records, cfg.leaf_size)
    return build_hierarchy(leaves, cfg, workers)


def level_means(h: Hierarchy, field_name: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(window_size, mean, population std)`` of one summary field across levels."""
    nv, mean, std = [], [], []
    for lvl in h:
        vals = np.array([getattr(s, field_name) for s in lvl.summaries], dtype=np.float64)
        if vals.size:
            nv.append(lvl.n_v)
            mean.append(vals.mean())
            std.append(vals.std())
    return np.array(nv, dtype=np.float64), np.array(mean), np.array(std)
