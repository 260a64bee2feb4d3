import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from darkspace.errors import DataError, UsageError
from darkspace.ingest import (FilterSpec, PacketRecord, RecordBatch, Windower, check_monotone,
                              filter_valid, iter_parse, parse_records, partition_windows)


def test_csv_line_maps_fields():
    batch, skipped = parse_records(b"1560000000000000,167772161,2886729728\n", "csv")
    assert list(batch) == [PacketRecord(1560000000000000, 167772161, 2886729728, 0)]
    assert skipped == 0


def test_empty_stream():
    batch, skipped = parse_records(b"", "csv")
    assert len(batch) == 0 and skipped == 0


def test_dotted_quads_big_endian():
    batch, _ = parse_records(b"5,10.0.0.1,172.16.0.0,17\n", "dotted")
    assert list(batch) == [PacketRecord(5, 167772161, 2886729728, 17)]


def test_unknown_format_is_usage_error():
    with pytest.raises(UsageError):
        parse_records(b"1,2,3\n", "pcap")


def test_comments_blank_lines_and_optional_proto():
    text = b"# header comment\n\n1,2,3\n2,4,5,6 # trailing\n\n"
    batch, skipped = parse_records(text, "csv")
    assert [(r.timestamp, r.proto) for r in batch] == [(1, 0), (2, 6)]
    assert skipped == 0


CORRUPT = [b"garbage", b"1,2", b"1,2,3,4,5", b"1,-2,3", b"1,2,3,999", b"1,2,x", b"1,2,3,6.5",
           b"1,18446744073709551616,3"]


def test_malformed_lines_counted_and_skipped(rng):
    good = [f"{1000 + i},{rng.integers(0, 2**32)},{rng.integers(0, 2**32)}".encode() for i in range(1000)]
    lines = list(good)
    for k, pos in enumerate((17, 500, 999)):
        lines.insert(pos + k, CORRUPT[k % len(CORRUPT)])
    text = b"\n".join(lines) + b"\n"
    batch, skipped = parse_records(text, "csv")
    # independent line scan: a line is good iff it is one of the generated ones
    expected_good = [ln for ln in text.split(b"\n") if ln and ln in set(good)]
    assert len(batch) == len(expected_good) == 1000
    assert skipped == 3
    assert [f"{r.timestamp},{r.src},{r.dst}".encode() for r in batch] == good


@pytest.mark.parametrize("bad", CORRUPT)
def test_each_corruption_kind_is_rejected(bad):
    batch, skipped = parse_records(b"1,2,3\n" + bad + b"\n4,5,6\n", "csv")
    assert skipped == 1 and [r.timestamp for r in batch] == [1, 4]


@pytest.mark.parametrize("bad", [b"1,10.0.0,1.2.3.4", b"1,10.0.0.256,1.2.3.4", b"1,a.b.c.d,1.2.3.4"])
def test_dotted_corruption(bad):
    batch, skipped = parse_records(b"1,1.2.3.4,5.6.7.8\n" + bad + b"\n", "dotted")
    assert skipped == 1 and len(batch) == 1


def test_block_streaming_matches_whole_parse(rng):
    lines = [f"{i},{rng.integers(0, 99)},{rng.integers(0, 99)}" for i in range(5000)]
    text = ("\n".join(lines)).encode()  # no trailing newline
    whole, _ = parse_records(text, "csv")
    parts = list(iter_parse(io.BytesIO(text), "csv", block_bytes=997))
    assert RecordBatch.concat([b for b, _ in parts]) == whole
    assert len(whole) == 5000


def test_file_path_input(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("1,2,3\n2,3,4\n")
    batch, _ = parse_records(p, "csv")
    assert len(batch) == 2


def test_unreadable_stream():
    with pytest.raises(OSError):
        parse_records("/nonexistent/trace.csv", "csv")


def test_monotone_check():
    check_monotone(RecordBatch([1, 1, 2], [0, 0, 0], [0, 0, 0]))
    with pytest.raises(DataError, match="record 2"):
        check_monotone(RecordBatch([1, 3, 2], [0, 0, 0], [0, 0, 0]))
    with pytest.raises(DataError):
        check_monotone(RecordBatch([1], [0], [0]), previous=5)


# -- filtering ------------------------------------------------------------------

records_st = st.lists(
    st.tuples(st.integers(0, 50), st.integers(0, 20), st.integers(0, 20), st.sampled_from([1, 6, 17])),
    max_size=80,
).map(lambda rs: RecordBatch.from_records(sorted(rs)))

filters_st = st.builds(
    FilterSpec,
    allowed_protocols=st.none() | st.frozensets(st.sampled_from([1, 6, 17])),
    src_range=st.none() | st.tuples(st.integers(0, 10), st.integers(10, 20)),
    dst_range=st.none() | st.tuples(st.integers(0, 10), st.integers(10, 20)),
    time_range=st.none() | st.tuples(st.integers(0, 25), st.integers(25, 50)),
)


@given(records_st)
def test_empty_filter_accepts_all(batch):
    assert filter_valid(batch, FilterSpec()) == batch


@given(records_st, filters_st)
def test_filter_matches_linear_scan_and_is_idempotent(batch, spec):
    out = filter_valid(batch, spec)
    assert list(out) == [r for r in batch if spec.accepts(r)]
    assert filter_valid(out, spec) == out
    assert len(out) + int((~spec.mask(batch)).sum()) == len(batch)


def test_protocol_filter_example():
    batch = RecordBatch.from_records([(1, 1, 1, 6), (2, 2, 2, 17), (3, 3, 3, 6), (4, 4, 4, 17)])
    out = filter_valid(batch, FilterSpec(allowed_protocols=frozenset({6})))
    assert [r.timestamp for r in out] == [1, 3]


def test_time_range_excludes_everything():
    batch = RecordBatch.from_records([(1, 1, 1), (2, 2, 2)])
    assert len(filter_valid(batch, FilterSpec(time_range=(10, 20)))) == 0


# -- windowing ------------------------------------------------------------------

def _batch(n):
    i = np.arange(n, dtype=np.uint64)
    return RecordBatch(i, i % np.uint64(7), i % np.uint64(5))


@pytest.mark.parametrize("n, windows, remainder", [
    (2**18, 2, 0),
    (300_000, 2, 300_000 - 2 * 131_072),
    (100, 0, 100),
])
def test_partition_counts(n, windows, remainder):
    ws, rem = partition_windows(_batch(n), 2**17)
    assert (len(ws), rem) == (windows, remainder)
    assert all(w.n_valid == len(w.records) == 2**17 for w in ws)
    assert [w.index for w in ws] == list(range(windows))


def test_zero_leaf_size():
    with pytest.raises(UsageError):
        partition_windows(_batch(3), 0)


@given(st.lists(st.integers(0, 40), max_size=12), st.integers(1, 17))
def test_streamed_windows_tile_the_stream(chunks, leaf):
    total = sum(chunks)
    data = _batch(total)
    w = Windower(leaf)
    out, pos = [], 0
    for c in chunks:
        out += w.push(data[pos:pos + c])
        pos += c
    assert len(out) == total // leaf and w.remainder == total % leaf
    joined = RecordBatch.concat([x.records for x in out])
    assert joined == data[: len(out) * leaf]
    assert [x.index for x in out] == list(range(len(out)))
