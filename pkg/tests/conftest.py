import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

U64 = 2**64 - 1

small_ids = st.integers(0, 15)
wide_ids = st.one_of(st.integers(0, 40), st.integers(2**32, 2**32 + 40), st.integers(U64 - 40, U64))
pair_lists = st.lists(st.tuples(small_ids, small_ids), max_size=200)
wide_pair_lists = st.lists(st.tuples(wide_ids, wide_ids), max_size=120)


@pytest.fixture
def rng():
    return np.random.default_rng(20190601)


def random_pairs(rng, n, n_ids, zipf=None):
    """Random (src, dst) id pairs; heavy-tailed when ``zipf`` is an exponent."""
    if zipf is None:
        src = rng.integers(0, n_ids, n)
        dst = rng.integers(0, n_ids, n)
    else:
        src = np.minimum(rng.zipf(zipf, n), n_ids) - 1
        dst = np.minimum(rng.zipf(zipf, n), n_ids) - 1
    return src.astype(np.uint64), dst.astype(np.uint64)


# -- acceptance reporting -------------------------------------------------------

ACCEPTANCE_RESULTS: dict[int, tuple[str, bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        name, ok, detail = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"criterion {n} [{'PASS' if ok else 'FAIL'}] {name}: {detail}")
