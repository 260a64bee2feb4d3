"""``darkspace`` command line: synth, ingest, analyze, fit, report.

Exit status 0 on success, 1 usage error, 2 data/validation error, 3 I/O
error.  Failures print one line to stderr::

    darkspace: error=<kind> status=<n> message=<JSON string>
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__, export
from .anonymize import KEY_ENV, AnonKey, anonymize_records
from .errors import DarkspaceError, DataError, UsageError
from .hierarchy import HierarchyConfig, build_hierarchy
from .hypersparse import matrix_from_packets, serialize
from .ingest import FORMATS, FilterSpec, Windower, check_monotone, filter_valid, iter_parse
from .synth import SynthModel, iter_trace, write_csv

log = logging.getLogger("darkspace")

SCHEMA_PATH = Path(__file__).parent / "schemas" / "report.schema.json"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    input: Path
    out: Path
    fmt: str = "csv"
    anon_key: Path | None = None
    dst_anon_key: Path | None = None
    no_anon: bool = False
    anon_bits: int = 32
    filter: FilterSpec = field(default_factory=FilterSpec)
    hierarchy: HierarchyConfig = field(default_factory=HierarchyConfig)
    workers: int = 1

    def validate(self) -> None:
        if self.workers < 1:
            raise UsageError("--workers must be at least 1")
        self.hierarchy.validate()

    def keys(self) -> tuple[AnonKey | None, AnonKey | None]:
        if self.no_anon:
            return None, None
        path = self.anon_key or (Path(os.environ[KEY_ENV]) if os.environ.get(KEY_ENV) else None)
        if path is None:
            log.warning("no anonymization key configured; leaves hold raw identifiers")
            return None, None
        key = AnonKey.from_file(path, self.anon_bits)
        dst = AnonKey.from_file(self.dst_anon_key, self.anon_bits) if self.dst_anon_key else None
        return key, dst


# -- argument helpers ---------------------------------------------------------

def _range(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}") from None
    if lo > hi:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return lo, hi


def _protocols(text: str) -> frozenset[int]:
    try:
        return frozenset(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_common(p: argparse.ArgumentParser, input_default: str, out_default: str | None) -> None:
    p.add_argument("--input", default=input_default)
    p.add_argument("--out", default=out_default)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--leaf-log2", type=int, default=None)
    p.add_argument("--top-log2", type=int, default=27)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="darkspace", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", help="JSON file of option defaults (flags win)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic trace in csv format")
    p.add_argument("--packets", type=int, default=1 << 20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="trace.csv", help="output file, '-' for stdout")
    d = SynthModel()
    p.add_argument("--n-sources", type=int, default=d.n_sources)
    p.add_argument("--n-destinations", type=int, default=d.n_destinations)
    p.add_argument("--source-exponent", type=float, default=d.source_exponent)
    p.add_argument("--dest-exponent", type=float, default=d.dest_exponent)
    p.add_argument("--scan-fraction", type=float, default=d.scan_fraction)
    p.add_argument("--n-scanners", type=int, default=d.n_scanners)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="parse, filter, anonymize and window records into .tmx leaves")
    _add_common(p, "trace.csv", "run")
    p.add_argument("--format", dest="fmt", choices=FORMATS, default="csv")
    p.add_argument("--anon-key", type=Path, default=None, help=f"key file (or ${KEY_ENV})")
    p.add_argument("--dst-anon-key", type=Path, default=None, help="separate key for destinations")
    p.add_argument("--no-anon", action="store_true")
    p.add_argument("--anon-bits", type=int, default=32)
    p.add_argument("--protocols", type=_protocols, default=None)
    p.add_argument("--src-range", type=_range, default=None)
    p.add_argument("--dst-range", type=_range, default=None)
    p.add_argument("--time-range", type=_range, default=None)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("analyze", help="aggregate leaves and write per-level summaries and distributions")
    _add_common(p, "run", None)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("fit", help="fit scaling relations to per-level summaries")
    _add_common(p, "run", None)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("report", help="bundle summaries, distributions and fits into one JSON file")
    _add_common(p, "run", None)
    p.set_defaults(func=cmd_report)
    return parser


def _load_config(argv: list[str]) -> dict:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return {}
    with open(known.config) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in data.items()}


def parse_args(argv: list[str]) -> argparse.Namespace:
    parser = build_parser()
    defaults = _load_config(argv)
    if defaults:
        for action in parser._subparsers._group_actions:
            for sp in action.choices.values():
                dests = {a.dest: a for a in sp._actions}
                for k, v in defaults.items():
                    if k in dests:
                        a = dests[k]
                        if a.type is not None and isinstance(v, str):
                            v = a.type(v)
                        elif a.type is _range and isinstance(v, list):
                            v = tuple(v)
                        elif a.type is _protocols and isinstance(v, list):
                            v = frozenset(v)
                        sp.set_defaults(**{k: v})
    return parser.parse_args(argv)


def _run_config(args) -> RunConfig:
    leaf = args.leaf_log2 if args.leaf_log2 is not None else 17
    cfg = RunConfig(
        input=Path(args.input),
        out=Path(args.out if args.out is not None else args.input),
        fmt=getattr(args, "fmt", "csv"),
        anon_key=getattr(args, "anon_key", None),
        dst_anon_key=getattr(args, "dst_anon_key", None),
        no_anon=getattr(args, "no_anon", False),
        anon_bits=getattr(args, "anon_bits", 32),
        filter=FilterSpec(
            allowed_protocols=getattr(args, "protocols", None),
            src_range=getattr(args, "src_range", None),
            dst_range=getattr(args, "dst_range", None),
            time_range=getattr(args, "time_range", None),
        ),
        hierarchy=HierarchyConfig(leaf_log2=leaf, top_log2=args.top_log2),
        workers=args.workers,
    )
    cfg.validate()
    return cfg


# -- subcommands --------------------------------------------------------------

def cmd_synth(args) -> int:
    model = SynthModel(
        n_sources=args.n_sources, n_destinations=args.n_destinations,
        source_exponent=args.source_exponent, dest_exponent=args.dest_exponent,
        scan_fraction=args.scan_fraction, n_scanners=args.n_scanners, seed=args.seed,
    )
    if args.out == "-":
        n = write_csv(iter_trace(model, args.packets), sys.stdout)
    else:
        with open(args.out, "w", newline="\n") as fh:
            n = write_csv(iter_trace(model, args.packets), fh)
    log.info("wrote %d packets to %s", n, args.out)
    return 0


def cmd_ingest(args) -> int:
    cfg = _run_config(args)
    if not cfg.input.exists():
        raise FileNotFoundError(f"input not found: {cfg.input}")
    key, dst_key = cfg.keys()
    leaf_dir = cfg.out / export.LEAF_DIR
    leaf_dir.mkdir(parents=True, exist_ok=True)
    for stale in export.list_leaves(cfg.out):
        stale.unlink()

    windower = Windower(cfg.hierarchy.leaf_size)
    parsed = skipped = kept = 0
    last_ts = None
    for batch, bad in iter_parse(cfg.input, cfg.fmt):
        check_monotone(batch, last_ts, parsed)
        if len(batch):
            last_ts = int(batch.ts[-1])
        parsed += len(batch)
        skipped += bad
        batch = filter_valid(batch, cfg.filter)
        kept += len(batch)
        if key is not None:
            batch = anonymize_records(key, batch, dst_key)
        for w in windower.push(batch):
            export.leaf_path(cfg.out, w.index).write_bytes(serialize(matrix_from_packets(w)))

    manifest = {
        "format": cfg.fmt,
        "leaf_log2": cfg.hierarchy.leaf_log2,
        "parsed": parsed,
        "skipped": skipped,
        "filtered_out": parsed - kept,
        "windows": windower.next_index,
        "remainder": windower.remainder,
        "anonymized": key is not None,
        "separate_dst_key": dst_key is not None,
    }
    export.write_json(cfg.out / "ingest.json", manifest)
    log.info("ingest: %s", manifest)
    return 0


def _leaf_log2(args, root: Path) -> int:
    manifest = root / "ingest.json"
    recorded = json.loads(manifest.read_text())["leaf_log2"] if manifest.exists() else None
    if args.leaf_log2 is not None and recorded is not None and args.leaf_log2 != recorded:
        raise UsageError(f"--leaf-log2 {args.leaf_log2} contradicts ingest leaf_log2 {recorded}")
    return args.leaf_log2 if args.leaf_log2 is not None else (recorded or 17)


def cmd_analyze(args) -> int:
    root = Path(args.input)
    leaves = export.list_leaves(root)
    if not leaves:
        if not root.exists():
            raise FileNotFoundError(f"input directory not found: {root}")
        raise DataError(f"no leaf matrices under {root / export.LEAF_DIR}")
    args.leaf_log2 = _leaf_log2(args, root)
    cfg = _run_config(args)
    for _, d in export.level_dirs(cfg.out) if cfg.out.exists() else []:
        for f in [d / "summaries.csv", *d.glob("dist_*.csv")]:
            f.unlink()
    h = build_hierarchy(leaves, cfg.hierarchy, cfg.workers)
    export.write_hierarchy(cfg.out, h, cfg.hierarchy.leaf_log2, cfg.hierarchy.top_log2)
    log.info("analyze: %d levels from %d leaves", len(h), len(leaves))
    return 0


def _levels(root: Path):
    dirs = export.level_dirs(root) if root.exists() else []
    if not dirs:
        raise DataError(f"no level summaries under {root}; run analyze first")
    return [(k, export.read_summaries(d / "summaries.csv")) for k, d in dirs]


def cmd_fit(args) -> int:
    root = Path(args.input)
    levels = _levels(root)
    if len([s for _, s in levels if s]) < 2:
        raise DataError("scaling fits need at least two window sizes")
    fits = export.fit_series(export.scaling_series(levels))
    out = Path(args.out) if args.out else root
    out.mkdir(parents=True, exist_ok=True)
    export.write_fits(out / "fits.csv", fits)
    log.info("fit: %d series", len(fits))
    return 0


def build_report(root: Path) -> dict:
    levels = _levels(root)
    dirs = dict(export.level_dirs(root))
    fits_path = root / "fits.csv"
    if fits_path.exists():
        fits = export.read_fits(fits_path)
    else:
        fits = export.fit_records(export.fit_series(export.scaling_series(levels)))
    for f in fits:
        f["alpha_fraction"] = f["alpha"] - 1.0
    report = {
        "schema": "darkspace-report/1",
        "ingest": json.loads((root / "ingest.json").read_text()) if (root / "ingest.json").exists() else None,
        "hierarchy": json.loads((root / "hierarchy.json").read_text()) if (root / "hierarchy.json").exists() else None,
        "levels": [],
        "fits": fits,
    }
    for k, summaries in levels:
        d = dirs[k]
        report["levels"].append({
            "level": k,
            "N_V": summaries[0].window_size if summaries else 0,
            "summaries": [dict(zip(export.SUMMARY_HEADER, [i, *s.astuple()]))
                          for i, s in enumerate(summaries)],
            "distributions": {p.stem[len("dist_"):]: export.read_dist(p)
                              for p in sorted(d.glob("dist_*.csv"))},
        })
    return report


def cmd_report(args) -> int:
    root = Path(args.input)
    out = Path(args.out) if args.out else root
    out.mkdir(parents=True, exist_ok=True)
    export.write_json(out / "report.json", build_report(root))
    return 0


# -- entry point --------------------------------------------------------------

def _fail(kind: str, status: int, message: str) -> int:
    print(f"darkspace: error={kind} status={status} message={json.dumps(message)}", file=sys.stderr)
    return status


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(name)s: %(levelname)s %(message)s", stream=sys.stderr)
        return args.func(args)
    except DarkspaceError as exc:
        return _fail(exc.kind, exc.exit_code, str(exc))
    except argparse.ArgumentTypeError as exc:
        return _fail("usage", 1, str(exc))
    except OSError as exc:
        return _fail("io", 3, str(exc))


if __name__ == "__main__":
    sys.exit(main())
