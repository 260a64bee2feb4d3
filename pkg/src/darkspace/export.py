"""On-disk products: per-level CSVs, fit tables, and the JSON report.

Directory layout of a run::

    <run>/ingest.json
    <run>/level_0/leaf_000000.tmx ...
    <run>/level_<k>/summaries.csv
    <run>/level_<k>/dist_<quantity>.csv
    <run>/hierarchy.json
    <run>/fits.csv
    <run>/report.json

Floats are written with ``repr`` so output bytes are reproducible.
"""

from __future__ import annotations

import csv
import io
import json
import os
import re
from pathlib import Path

import numpy as np

from .distributions import DistributionStats
from .hierarchy import Hierarchy, LevelResult
from .quantities import CSV_COLUMNS, SUMMARY_HEADER, WindowSummary
from .scaling import NORMS, ScalingFit, ScalingPoint, fit_all_norms

DIST_HEADER = ("quantity", "bin_index", "d_i", "D_mean", "D_std", "n_windows")
FIT_HEADER = ("quantity", "norm", "alpha", "beta", "residual", "delta_alpha")
LEAF_DIR = "level_0"
_LEVEL_RE = re.compile(r"level_(\d+)$")


def level_dir(root: str | os.PathLike, k: int) -> Path:
    return Path(root) / f"level_{k}"


def leaf_path(root: str | os.PathLike, index: int) -> Path:
    return Path(root) / LEAF_DIR / f"leaf_{index:06d}.tmx"


def list_leaves(root: str | os.PathLike) -> list[Path]:
    return sorted((Path(root) / LEAF_DIR).glob("leaf_*.tmx"))


def _write_rows(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    path.write_text(buf.getvalue())


def _fmt(x: float) -> str:
    return repr(float(x))


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def write_level(root: str | os.PathLike, lvl: LevelResult) -> None:
    d = level_dir(root, lvl.level)
    d.mkdir(parents=True, exist_ok=True)
    _write_rows(d / "summaries.csv", SUMMARY_HEADER,
                ([i, *s.astuple()] for i, s in enumerate(lvl.summaries)))
    for q, st in lvl.distributions.items():
        _write_rows(d / f"dist_{q}.csv", DIST_HEADER, dist_rows(q, st))


def dist_rows(quantity: str, st: DistributionStats):
    for i, (edge, m, s) in enumerate(zip(st.bin_edges.tolist(), st.mean, st.stddev)):
        yield [quantity, i, edge, _fmt(m), _fmt(s), st.n_windows]


def hierarchy_manifest(h: Hierarchy, leaf_log2: int, top_log2: int) -> dict:
    return {
        "leaf_log2": leaf_log2,
        "top_log2": top_log2,
        "excluded_leaves": h.excluded_leaves,
        "levels": [
            {
                "level": lvl.level,
                "N_V": lvl.n_v,
                "n_windows": lvl.n_windows,
                "dropped": lvl.dropped,
                "nnz_mean": float(np.mean(lvl.nnz)) if lvl.nnz else 0.0,
                "merge_ratio_mean": float(np.mean(lvl.merge_ratios)) if lvl.merge_ratios else None,
            }
            for lvl in h
        ],
    }


def write_hierarchy(root: str | os.PathLike, h: Hierarchy, leaf_log2: int, top_log2: int) -> None:
    Path(root).mkdir(parents=True, exist_ok=True)
    for lvl in h:
        write_level(root, lvl)
    write_json(Path(root) / "hierarchy.json", hierarchy_manifest(h, leaf_log2, top_log2))


def level_dirs(root: str | os.PathLike) -> list[tuple[int, Path]]:
    out = []
    for p in Path(root).iterdir():
        m = _LEVEL_RE.match(p.name)
        if m and (p / "summaries.csv").exists():
            out.append((int(m.group(1)), p))
    return sorted(out)


def read_summaries(path: str | os.PathLike) -> list[WindowSummary]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != SUMMARY_HEADER:
        raise ValueError(f"{path}: unexpected summaries header")
    return [WindowSummary(*(int(x) for x in r[1:])) for r in rows[1:]]


def read_dist(path: str | os.PathLike) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        {"bin_index": int(r["bin_index"]), "d_i": int(r["d_i"]), "D_mean": float(r["D_mean"]),
         "D_std": float(r["D_std"]), "n_windows": int(r["n_windows"])}
        for r in rows
    ]


def scaling_series(levels: list[tuple[int, list[WindowSummary]]]) -> dict[str, list[ScalingPoint]]:
    """Mean and population-std series of every summary column across levels.

    Keys are the CSV column names; ``<col>_std`` holds the spread series.
    """
    series: dict[str, list[ScalingPoint]] = {}
    levels = [(k, s) for k, s in levels if s]
    for field, col in CSV_COLUMNS.items():
        if field == "window_size":
            continue
        mean_pts, std_pts = [], []
        for _, summaries in levels:
            nv = summaries[0].window_size
            v = np.array([getattr(s, field) for s in summaries], dtype=np.float64)
            mean_pts.append(ScalingPoint(nv, float(v.mean()), float(v.std())))
            std_pts.append(ScalingPoint(nv, float(v.std()), 0.0))
        series[col] = mean_pts
        series[f"{col}_std"] = std_pts
    return series


def fit_series(series: dict[str, list[ScalingPoint]]) -> dict[str, ScalingFit]:
    """Fit every series that has at least two points, all strictly positive."""
    fits = {}
    for name, pts in series.items():
        if len(pts) >= 2 and all(p.value > 0 for p in pts):
            fits[name] = fit_all_norms(pts)
    return fits


def fit_rows(fits: dict[str, ScalingFit]):
    for name, f in fits.items():
        for norm in NORMS:
            yield [name, norm, _fmt(f.alpha[norm]), _fmt(f.beta[norm]), _fmt(f.residual[norm]),
                   _fmt(f.delta_alpha)]


def fit_records(fits: dict[str, ScalingFit]) -> list[dict]:
    keys = ("quantity", "norm", "alpha", "beta", "residual", "delta_alpha")
    return [dict(zip(keys, [r[0], r[1], *map(float, r[2:])])) for r in fit_rows(fits)]


def write_fits(path: str | os.PathLike, fits: dict[str, ScalingFit]) -> None:
    _write_rows(Path(path), FIT_HEADER, fit_rows(fits))


def read_fits(path: str | os.PathLike) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        {"quantity": r["quantity"], "norm": r["norm"], "alpha": float(r["alpha"]),
         "beta": float(r["beta"]), "residual": float(r["residual"]),
         "delta_alpha": float(r["delta_alpha"])}
        for r in rows
    ]
