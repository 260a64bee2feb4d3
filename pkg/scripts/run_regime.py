"""Scaling regime of the reference synthetic model.

Generates a heavy-tailed trace, builds the window hierarchy in memory, and
prints the fitted exponents of every summary column plus the normalized
unique-source curve.

    python scripts/run_regime.py --log2-packets 22 --leaf-log2 14
"""

import argparse
import time
from dataclasses import dataclass

from darkspace import export
from darkspace.hierarchy import HierarchyConfig, window_series
from darkspace.scaling import NORMS, normalize_curve
from darkspace.synth import REFERENCE_MODEL, SynthModel, generate_trace


@dataclass
class RegimeConfig:
    log2_packets: int = 22
    leaf_log2: int = 14
    seed: int = 0
    workers: int = 1


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    for name, default in vars(RegimeConfig()).items():
        p.add_argument("--" + name.replace("_", "-"), type=int, default=default)
    cfg = RegimeConfig(**vars(p.parse_args()))

    model = SynthModel(**{**REFERENCE_MODEL.to_dict(), "seed": cfg.seed})
    t0 = time.perf_counter()
    rec = generate_trace(model, 1 << cfg.log2_packets)
    t1 = time.perf_counter()
    h = window_series(rec, HierarchyConfig(cfg.leaf_log2, cfg.log2_packets, distributions=False), cfg.workers)
    t2 = time.perf_counter()
    print(f"generated {len(rec)} packets in {t1 - t0:.1f}s, hierarchy of {len(h)} levels in {t2 - t1:.1f}s")

    series = export.scaling_series([(lvl.level, lvl.summaries) for lvl in h])
    fits = export.fit_series(series)
    print(f"{'quantity':<14}" + "".join(f"{n:>10}" for n in NORMS) + f"{'d_alpha':>10}")
    for name, f in fits.items():
        if not name.endswith("_std"):
            print(f"{name:<14}" + "".join(f"{f.alpha[n]:>10.3f}" for n in NORMS) + f"{f.delta_alpha:>10.1e}")

    print("\nunique sources divided by N_V**alpha (squared fit), reference 2**17:")
    curve = normalize_curve(series["srcs"], fits["srcs"].alpha["squared"])
    for pt in curve:
        print(f"  N_V=2**{int(pt.n_v).bit_length() - 1:<3} {pt.value:12.1f} +- {pt.spread:.1f}")
    print("\nmean merge ratio per level:",
          " ".join(f"{sum(lvl.merge_ratios) / len(lvl.merge_ratios):.4f}" for lvl in h if lvl.merge_ratios))


if __name__ == "__main__":
    main()
