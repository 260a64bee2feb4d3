"""Network quantities of a traffic matrix.

Every aggregate is a reduction over stored entries, so all of them are
unchanged by relabelling rows and columns (and hence by prefix-preserving
anonymization).

Destination packets and fan-in follow the summation definitions
``sum_i A(i, j)`` and ``sum_i |A(i, j)|_0`` respectively.
"""

from __future__ import annotations

from dataclasses import astuple, dataclass, fields

import numpy as np

from .hypersparse import (SparseVector, TrafficMatrix, col_sums, col_support, max_value,
                          nnz, row_sums, row_support, total)


@dataclass(frozen=True)
class WindowSummary:
    window_size: int
    valid_packets: int
    unique_links: int
    max_link_packets: int
    unique_sources: int
    max_source_packets: int
    max_source_fanout: int
    unique_destinations: int
    max_destination_packets: int
    max_destination_fanin: int

    def astuple(self) -> tuple[int, ...]:
        return astuple(self)


SUMMARY_FIELDS = tuple(f.name for f in fields(WindowSummary))

# summary field -> CSV column; order is the CSV column order after window_index
CSV_COLUMNS = {
    "window_size": "N_V",
    "valid_packets": "valid",
    "unique_links": "links",
    "max_link_packets": "max_link",
    "unique_sources": "srcs",
    "max_source_packets": "max_src_pkts",
    "max_source_fanout": "max_fanout",
    "unique_destinations": "dsts",
    "max_destination_packets": "max_dst_pkts",
    "max_destination_fanin": "max_fanin",
}
SUMMARY_HEADER = ("window_index",) + tuple(CSV_COLUMNS.values())


@dataclass(frozen=True)
class DegreeVectors:
    source_packets: SparseVector
    source_fanout: SparseVector
    link_packets: TrafficMatrix
    destination_packets: SparseVector
    destination_fanin: SparseVector

    def vector(self, quantity: str) -> SparseVector:
        """Degree values for ``quantity``; links are exposed as a vector of link counts."""
        if quantity == "link_packets":
            return SparseVector(np.arange(nnz(self.link_packets), dtype=np.uint64),
                                self.link_packets.vals)
        return getattr(self, quantity)


DEGREE_QUANTITIES = ("source_packets", "source_fanout", "link_packets",
                     "destination_fanin", "destination_packets")


def degree_vectors(a: TrafficMatrix) -> DegreeVectors:
    return DegreeVectors(row_sums(a), row_support(a), a, col_sums(a), col_support(a))


def summary_from_vectors(dv: DegreeVectors, window_size: int | None = None,
                         valid_packets: int | None = None) -> WindowSummary:
    a = dv.link_packets
    valid = total(a) if valid_packets is None else valid_packets
    return WindowSummary(
        window_size=valid if window_size is None else window_size,
        valid_packets=valid,
        unique_links=nnz(a),
        max_link_packets=max_value(a),
        unique_sources=len(dv.source_packets),
        max_source_packets=dv.source_packets.max(),
        max_source_fanout=dv.source_fanout.max(),
        unique_destinations=len(dv.destination_packets),
        max_destination_packets=dv.destination_packets.max(),
        max_destination_fanin=dv.destination_fanin.max(),
    )


def window_summary(a: TrafficMatrix, window_size: int | None = None) -> WindowSummary:
    """All aggregate quantities of ``a``.  An empty matrix gives an all-zero summary."""
    return summary_from_vectors(degree_vectors(a), window_size)


def summary_row(index: int, s: WindowSummary) -> list[int]:
    return [index, *s.astuple()]
