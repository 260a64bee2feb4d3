import numpy as np
from hypothesis import given
from hypothesis import strategies as st

import oracles
from conftest import pair_lists, random_pairs, wide_pair_lists
from darkspace.hypersparse import TrafficMatrix, col_sums, from_pairs, relabel, row_sums, total
from darkspace.quantities import (DEGREE_QUANTITIES, SUMMARY_FIELDS, SUMMARY_HEADER, WindowSummary,
                                  degree_vectors, summary_row, window_summary)


def _matrix(pairs):
    src = np.array([p[0] for p in pairs], dtype=np.uint64)
    dst = np.array([p[1] for p in pairs], dtype=np.uint64)
    return from_pairs(src, dst)


def test_worked_example():
    a, b, c, d = 1, 2, 3, 4
    s = window_summary(_matrix([(a, b), (a, b), (a, c), (d, b)]))
    assert s == WindowSummary(window_size=4, valid_packets=4, unique_links=3, max_link_packets=2,
                              unique_sources=2, max_source_packets=3, max_source_fanout=2,
                              unique_destinations=2, max_destination_packets=3,
                              max_destination_fanin=2)


def test_empty_window_is_all_zero():
    s = window_summary(TrafficMatrix.empty())
    assert s.astuple() == (0,) * len(SUMMARY_FIELDS)


def test_single_pair():
    s = window_summary(_matrix([(9, 9)]))
    assert s.astuple() == (1,) * len(SUMMARY_FIELDS)


def test_window_size_override():
    s = window_summary(_matrix([(1, 2)]), window_size=8)
    assert s.window_size == 8 and s.valid_packets == 1


def test_summary_row_layout():
    s = window_summary(_matrix([(1, 2)]))
    row = summary_row(3, s)
    assert len(row) == len(SUMMARY_HEADER) and row[0] == 3


@given(st.one_of(pair_lists, wide_pair_lists))
def test_summary_matches_oracle(pairs):
    s = window_summary(_matrix(pairs))
    assert s.__dict__ == oracles.summary(pairs)


@given(wide_pair_lists)
def test_degree_vectors_match_oracle(pairs):
    dv = degree_vectors(_matrix(pairs))
    ref = oracles.degree_vectors(pairs)
    for q in DEGREE_QUANTITIES:
        if q == "link_packets":
            assert dv.link_packets.to_dict() == ref[q]
        else:
            assert dv.vector(q).to_dict() == ref[q]


@given(pair_lists)
def test_three_routes_to_valid_packets(pairs):
    a = _matrix(pairs)
    assert total(a) == row_sums(a).total() == col_sums(a).total() == len(pairs)


@given(pair_lists, st.permutations(range(16)), st.permutations(range(16)))
def test_invariant_under_relabelling(pairs, pr, pc):
    a = _matrix(pairs)
    rt = np.array([1000 + v for v in pr], dtype=np.uint64)
    ct = np.array([2**40 + v for v in pc], dtype=np.uint64)
    b = relabel(a, lambda x: rt[x.astype(np.intp)], lambda x: ct[x.astype(np.intp)])
    assert window_summary(b) == window_summary(a)


def test_bounds_on_heavy_tailed_windows(rng):
    for _ in range(20):
        src, dst = random_pairs(rng, 4096, 2**20, zipf=1.6)
        s = window_summary(from_pairs(src, dst))
        assert s.max_source_packets >= s.max_link_packets
        assert s.max_destination_packets >= s.max_link_packets
        assert s.max_source_fanout <= s.unique_destinations
        assert s.max_destination_fanin <= s.unique_sources
        assert s.unique_links <= min(s.valid_packets, s.unique_sources * s.unique_destinations)


def test_single_pair_repeated():
    s = window_summary(_matrix([(5, 6)] * 37))
    assert (s.valid_packets, s.unique_links, s.max_link_packets) == (37, 1, 37)
    assert (s.unique_sources, s.unique_destinations, s.max_source_fanout, s.max_destination_fanin) == (1, 1, 1, 1)


def test_worked_example_degree_vectors():
    a, b, c, d = 1, 2, 3, 4
    dv = degree_vectors(_matrix([(a, b), (a, b), (a, c), (d, b)]))
    assert dv.source_packets.to_dict() == {a: 3, d: 1}
    assert dv.source_fanout.to_dict() == {a: 2, d: 1}
    assert dv.destination_fanin.to_dict() == {b: 2, c: 1}
    assert dv.destination_packets.to_dict() == {b: 3, c: 1}


@given(wide_pair_lists)
def test_vectors_consistent_with_summary(pairs):
    a = _matrix(pairs)
    dv, s = degree_vectors(a), window_summary(a)
    assert dv.source_fanout.max() == s.max_source_fanout
    assert len(dv.source_packets) == s.unique_sources
    assert len(dv.destination_fanin) == s.unique_destinations
