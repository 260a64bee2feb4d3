"""Single-worker ingest throughput: parse, filter, window and build leaf matrices.

    python scripts/bench_ingest.py --log2-packets 22
"""

import argparse
import io
import time

from darkspace.hypersparse import matrix_from_packets, serialize
from darkspace.ingest import FilterSpec, Windower, filter_valid, iter_parse
from darkspace.synth import REFERENCE_MODEL, format_csv, generate_trace


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--log2-packets", type=int, default=22)
    p.add_argument("--leaf-log2", type=int, default=17)
    p.add_argument("--repeats", type=int, default=3)
    args = p.parse_args()

    data = format_csv(generate_trace(REFERENCE_MODEL, 1 << args.log2_packets)).encode()
    spec = FilterSpec(allowed_protocols=frozenset({1, 6, 17}))
    print(f"{len(data) / 2**20:.0f} MiB of csv")
    for r in range(args.repeats):
        t0 = time.perf_counter()
        w = Windower(1 << args.leaf_log2)
        n = size = 0
        for batch, _ in iter_parse(io.BytesIO(data), "csv"):
            n += len(batch)
            for win in w.push(filter_valid(batch, spec)):
                size += len(serialize(matrix_from_packets(win)))
        dt = time.perf_counter() - t0
        print(f"run {r}: {n / dt / 1e6:.2f}M packets/s, {w.next_index} leaves, {size / n:.2f} bytes/packet")


if __name__ == "__main__":
    main()
