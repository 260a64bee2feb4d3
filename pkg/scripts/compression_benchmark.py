"""Serialized size of leaf matrices across window sizes and traffic mixes.

    python scripts/compression_benchmark.py
"""

import argparse

from darkspace.hierarchy import leaves_from_records
from darkspace.hypersparse import bytes_per_packet, nnz
from darkspace.synth import REFERENCE_MODEL, SynthModel, generate_trace

MIXES = {
    "reference": REFERENCE_MODEL,
    "no scanners": SynthModel(scan_fraction=0.0),
    "scanners only": SynthModel(scan_fraction=1.0),
    "light tail": SynthModel(source_exponent=1.1, dest_exponent=1.01),
}


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--leaf-log2", type=int, nargs="+", default=[14, 17, 20])
    p.add_argument("--windows", type=int, default=4)
    args = p.parse_args()

    print(f"{'mix':<14}{'N_V':>8}{'nnz/N_V':>10}{'bytes/pkt':>11}")
    for name, model in MIXES.items():
        for k in args.leaf_log2:
            leaves, _ = leaves_from_records(generate_trace(model, args.windows << k), 1 << k)
            bpp = sum(bytes_per_packet(a) for a in leaves) / len(leaves)
            density = sum(nnz(a) for a in leaves) / (len(leaves) << k)
            print(f"{name:<14}{'2**' + str(k):>8}{density:>10.3f}{bpp:>11.2f}")


if __name__ == "__main__":
    main()
