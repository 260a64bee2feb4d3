from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from darkspace.distributions import (bin_index, binned_distribution, degree_histogram,
                                     distribution_stats, vector_distribution)
from darkspace.errors import DataError
from darkspace.hypersparse import SparseVector

degree_lists = st.lists(st.one_of(st.integers(1, 40), st.integers(1, 2**40)), min_size=1, max_size=200)


def _dist(values):
    return binned_distribution(degree_histogram(np.array(values, dtype=np.int64)))


def test_histogram_examples():
    assert degree_histogram(np.array([3, 1])).to_dict() == {1: 1, 3: 1}
    h = degree_histogram(np.ones(50, dtype=np.int64))
    assert h.to_dict() == {1: 50} and h.leaves() == 50 and h.d_max == 1


def test_histogram_from_sparse_vector():
    v = SparseVector(np.array([5, 9], dtype=np.uint64), np.array([3, 1], dtype=np.int64))
    assert degree_histogram(v).to_dict() == {1: 1, 3: 1}


def test_nonpositive_degree_rejected():
    with pytest.raises(DataError):
        degree_histogram(np.array([1, 0]))


def test_binning_example():
    b = _dist([1, 1, 2, 3])
    assert b.bin_edges.tolist() == [1, 2, 4]
    assert b.mass.tolist() == [0.5, 0.25, 0.25]
    assert b.cumulative.tolist() == [0.5, 0.75, 1.0]


def test_bin_index_edges():
    d = np.array([1, 2, 3, 4, 5, 8, 9, 2**52, 2**52 + 1])
    assert bin_index(d).tolist() == [0, 1, 2, 2, 3, 3, 4, 52, 53]
    big = np.array([2**60, 2**60 + 1])
    assert bin_index(big).tolist() == [60, 61]


def test_empty_rejected():
    with pytest.raises(DataError):
        _dist([])
    with pytest.raises(DataError):
        distribution_stats([])
    assert vector_distribution(SparseVector(np.zeros(0, np.uint64), np.zeros(0, np.int64))) is None


@given(degree_lists)
def test_binning_matches_exact_oracle(values):
    b = _dist(values)
    exact = oracles.binned_exact(values)
    n = len(values)
    assert [Fraction(int(c), n) for c in b.bin_counts] == exact
    assert np.allclose(b.mass, [float(x) for x in exact], rtol=0, atol=1e-15)
    assert np.allclose(b.mass, oracles.binned_float_per_degree(values), rtol=0, atol=1e-12)


@given(degree_lists)
def test_normalised_and_cumulative(values):
    b = _dist(values)
    assert abs(b.mass.sum() - 1.0) < 1e-12
    assert b.cumulative[-1] == 1.0
    assert (np.diff(b.cumulative) >= 0).all()
    assert np.allclose(np.diff(b.cumulative), b.mass[1:], atol=1e-12)


def test_power_law_slope(rng):
    exponent = 1.9
    sample = rng.zipf(exponent, 100_000)
    b = _dist(sample)
    # independent oracle: analytic bin masses of the untruncated zeta pmf
    d = np.arange(1, 2**16 + 1, dtype=np.float64)
    pmf = d ** -exponent
    idx = np.array([(int(x) - 1).bit_length() for x in d])
    mass = np.bincount(idx, weights=pmf)
    bins = np.arange(2, 11)
    assert (b.bin_counts[bins] >= 30).all()
    x = np.log2(b.bin_edges[bins].astype(float))
    fit = np.polyfit(x, np.log2(b.mass[bins]), 1)[0]
    analytic = np.polyfit(x, np.log2(mass[bins]), 1)[0]
    assert abs(fit - analytic) <= 0.15
    assert abs(analytic - (1 - exponent)) < 0.1  # asymptote, bent by low bins


def _from_mass(mass):
    n = 1000
    counts = np.rint(np.array(mass) * n).astype(np.int64)
    values = np.concatenate([np.full(c, 1 << i) for i, c in enumerate(counts)])
    return _dist(values)


def test_stats_mean_and_population_std():
    st_ = distribution_stats([_from_mass([0.4, 0.6]), _from_mass([0.6, 0.4])])
    assert np.allclose(st_.mean, [0.5, 0.5]) and np.allclose(st_.stddev, [0.1, 0.1])
    assert st_.n_windows == 2


def test_stats_pads_missing_bins():
    st_ = distribution_stats([_from_mass([1.0]), _from_mass([0.5, 0.5])])
    assert st_.bin_edges.tolist() == [1, 2]
    assert np.allclose(st_.mean, [0.75, 0.25]) and np.allclose(st_.stddev, [0.25, 0.25])


def test_stationary_windows_have_small_spread(rng):
    dists = [_dist(rng.zipf(2.0, 20_000)) for _ in range(32)]
    st_ = distribution_stats(dists)
    assert abs(st_.mean.sum() - 1.0) < 1e-12
    head = st_.mean > 0.01
    assert (st_.stddev[head] < 0.2 * st_.mean[head]).all()


def test_single_distribution_stats():
    b = _dist([1, 1, 2, 3])
    st_ = distribution_stats([b])
    assert np.array_equal(st_.mean, b.mass) and not st_.stddev.any()


def test_leaf_only_binning():
    b = _dist([1] * 50)
    assert b.mass.tolist() == [1.0] and b.bin_counts.tolist() == [50]


@given(degree_lists)
def test_histogram_matches_sort_and_group(values):
    h = degree_histogram(np.array(values, dtype=np.int64))
    assert h.to_dict() == oracles.histogram(values)
    assert int((h.degrees * h.counts).sum()) == sum(values)
