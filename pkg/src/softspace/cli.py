"""Command-line front end wiring ingestion, statistics, and exports.

Subcommands: ingest (logs -> dataset CSVs), analyze (logs or dataset ->
report + exports), export (dataset + report -> colored graph), report
(report JSON -> tables and figures), synth (generate a test log).

Configuration precedence is flags > config file (--config or the
SOFTSPACE_CONFIG environment variable) > built-in defaults. The effective
configuration is embedded in every report.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Sequence

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import space_model, spatial_stats, synth, trace_ingest, viz_export
from .errors import (
    DegenerateVariance,
    EmptySpace,
    EmptyWeights,
    IoFailure,
    MalformedRecord,
    NonpositiveM,
    SoftspaceError,
    SynthError,
    TooFewZones,
    ZeroVariance,
)
from .space_model import SoftwareSpaceDataset, WeightsMode
from .spatial_stats import InferenceMethod, MMode
from .trace_ingest import FieldMap, IngestSummary, Strictness

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_STATS = 4
EXIT_IO = 5

ENV_CONFIG = "SOFTSPACE_CONFIG"

REPORT_FORMATS = ("json", "csv", "md")
EXTRA_FORMATS = ("dot", "graphml", "scatter", "timeseries")


@dataclass
class RunConfig:
    """Effective analysis settings after flag/config/default resolution."""

    field_map: FieldMap
    strictness: Strictness
    weights: WeightsMode
    m_mode: MMode
    inference: InferenceMethod
    alpha: float
    permutations: int
    seed: int | None
    fdr: bool
    only_significant: bool
    day_offset: int
    out_dir: Path
    formats: tuple[str, ...]

    def parameters(self) -> dict:
        return {
            "weights_mode": self.weights.value,
            "m_mode": self.m_mode.value,
            "inference": self.inference.value,
            "alpha": self.alpha,
            "permutations": self.permutations,
            "seed": self.seed,
            "fdr": self.fdr,
            "only_significant": self.only_significant,
            "day_offset_minutes": self.day_offset,
            "strictness": self.strictness.value,
            "field_map": {
                "time": self.field_map.time,
                "thread": self.field_map.thread,
                "class": self.field_map.class_,
                "method": self.field_map.method,
                "event": self.field_map.event,
                "entry_value": self.field_map.entry_value,
                "exit_value": self.field_map.exit_value,
            },
        }


def _load_config_file(explicit: str | None) -> dict:
    path = explicit or os.environ.get(ENV_CONFIG)
    if not path:
        return {}
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise IoFailure(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ValueError(f"bad config {path}: {exc}") from exc


def _field_map(args: argparse.Namespace, config: dict) -> FieldMap:
    fm = FieldMap()
    for key, value in config.get("field_map", {}).items():
        fm = fm.with_override(str(key), str(value))
    for pair in args.field_map or []:
        key, sep, value = pair.partition("=")
        if not sep or not value.strip():
            raise ValueError(f"--field-map expects key=value, got {pair!r}")
        fm = fm.with_override(key.strip(), value.strip())
    return fm


def _pick(flag, config: dict, key: str, default):
    if flag is not None:
        return flag
    if key in config:
        return config[key]
    return default


def _run_config(args: argparse.Namespace, config: dict) -> RunConfig:
    section = config.get("analyze", {})
    weights = WeightsMode(_pick(getattr(args, "weights", None), section, "weights", "row"))
    m_mode = MMode(_pick(getattr(args, "m_mode", None), section, "m_mode", "standard"))
    inference = InferenceMethod(_pick(getattr(args, "inference", None), section, "inference", "perm"))
    alpha = float(_pick(getattr(args, "alpha", None), section, "alpha", 0.05))
    permutations = int(_pick(getattr(args, "perms", None), section, "perms", 999))
    seed = _pick(getattr(args, "seed", None), section, "seed", None)
    fdr = bool(_pick(getattr(args, "fdr", None), section, "fdr", False))
    only_significant = bool(getattr(args, "only_significant", False))
    day_offset = int(_pick(getattr(args, "day_offset", None), section, "day_offset", 0))
    formats = _parse_formats(getattr(args, "format", None) or section.get("format", "json"))
    strictness = Strictness.STRICT if getattr(args, "strict", False) else Strictness.LENIENT
    return RunConfig(
        field_map=_field_map(args, config),
        strictness=strictness,
        weights=weights,
        m_mode=m_mode,
        inference=inference,
        alpha=alpha,
        permutations=permutations,
        seed=int(seed) if seed is not None else None,
        fdr=fdr,
        only_significant=only_significant,
        day_offset=day_offset,
        out_dir=Path(getattr(args, "out_dir", ".") or "."),
        formats=formats,
    )


def _parse_formats(raw: str) -> tuple[str, ...]:
    tokens = tuple(t.strip() for t in raw.split(",") if t.strip())
    allowed = set(REPORT_FORMATS) | set(EXTRA_FORMATS)
    for token in tokens:
        if token != "all" and token not in allowed:
            raise ValueError(f"unknown format {token!r} (expected {', '.join(sorted(allowed))} or all)")
    if "all" in tokens:
        return REPORT_FORMATS + EXTRA_FORMATS
    return tokens or ("json",)


def _read_events(
    paths: Sequence[str], strictness: Strictness, field_map: FieldMap
) -> tuple[list[trace_ingest.TraceEvent], IngestSummary]:
    events: list[trace_ingest.TraceEvent] = []
    summary = IngestSummary()
    threads: set[str] = set()
    for path in paths:
        try:
            with open(path, "rb") as fh:
                part, part_summary = trace_ingest.parse_log(fh, strictness, field_map)
        except OSError as exc:
            raise IoFailure(f"cannot read {path}: {exc}") from exc
        events.extend(part)
        summary.events_parsed += part_summary.events_parsed
        summary.events_rejected += part_summary.events_rejected
        threads.update(e.thread_id for e in part)
    summary.threads_seen = len(threads)
    return events, summary


def _dataset_from_events(events) -> tuple[SoftwareSpaceDataset, IngestSummary]:
    edges, counts, recon = trace_ingest.reconstruct_calls(events)
    return space_model.build_dataset(edges, counts), recon


def _load_dataset(matrix_path: str, counts_path: str) -> SoftwareSpaceDataset:
    try:
        weights = space_model.load_matrix_csv(matrix_path)
        counts = space_model.load_counts_csv(counts_path)
    except OSError as exc:
        raise IoFailure(f"cannot read dataset: {exc}") from exc
    vector = [counts.get(label, 0) for label in weights.labels]
    missing = [label for label, v in zip(weights.labels, vector) if v < 1]
    if missing:
        raise ValueError(f"counts file lacks executed counts for: {', '.join(missing)}")
    return SoftwareSpaceDataset(weights=weights, counts=np.asarray(vector, dtype=np.int64))


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _print_summary(summary: IngestSummary, ds: SoftwareSpaceDataset | None) -> None:
    parts = [
        f"parsed={summary.events_parsed}",
        f"rejected={summary.events_rejected}",
        f"unmatched_exits={summary.unmatched_exits}",
        f"unclosed_entries={summary.unclosed_entries}",
        f"threads={summary.threads_seen}",
    ]
    if ds is not None:
        parts.append(f"zones={ds.n}")
        parts.append(f"edges={len(ds.weights.neighbor_pairs())}")
    print("softspace: " + " ".join(parts), file=sys.stderr)


def cmd_ingest(args: argparse.Namespace) -> int:
    config = _load_config_file(args.config)
    run = _run_config(args, config)
    events, parse_summary = _read_events(args.input, run.strictness, run.field_map)
    ds, recon_summary = _dataset_from_events(events)
    out_dir = run.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    space_model.save_matrix_csv(ds.weights, out_dir / "matrix.csv")
    space_model.save_counts_csv(ds.labels, ds.counts, out_dir / "counts.csv")
    _print_summary(parse_summary.merged(recon_summary), ds)
    return EXIT_OK


def _analyze_dataset(ds: SoftwareSpaceDataset, run: RunConfig) -> viz_export.AnalysisReport:
    analyzed = ds.row_standardized() if run.weights is WeightsMode.ROW_STANDARDIZED else ds
    global_result = spatial_stats.global_moran(analyzed)
    terms = spatial_stats.local_moran(analyzed, run.m_mode)
    records = spatial_stats.classify_clusters(
        analyzed,
        terms,
        alpha=run.alpha,
        method=run.inference,
        replications=run.permutations,
        seed=run.seed,
        fdr=run.fdr,
    )
    return viz_export.build_report(global_result, records, run.parameters())


def cmd_analyze(args: argparse.Namespace) -> int:
    config = _load_config_file(args.config)
    run = _run_config(args, config)
    if bool(args.input) == bool(args.matrix):
        raise ValueError("analyze needs either --input logs or --matrix/--counts, not both")
    if bool(args.matrix) != bool(args.counts):
        raise ValueError("--matrix and --counts go together")

    series = None
    summary = None
    if args.input:
        events, parse_summary = _read_events(args.input, run.strictness, run.field_map)
        ds, recon_summary = _dataset_from_events(events)
        summary = parse_summary.merged(recon_summary)
        series = trace_ingest.daily_series(events, run.day_offset)
    else:
        ds = _load_dataset(args.matrix, args.counts)

    report = _analyze_dataset(ds, run)
    analyzed = ds.row_standardized() if run.weights is WeightsMode.ROW_STANDARDIZED else ds
    out_dir = run.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)

    written = []
    for fmt in run.formats:
        if fmt in REPORT_FORMATS:
            path = out_dir / f"report.{fmt}"
            _write(path, viz_export.export_report(report, fmt))
            written.append(path)
    if "json" not in run.formats:
        path = out_dir / "report.json"
        _write(path, viz_export.export_report(report, "json"))
        written.append(path)
    if "dot" in run.formats:
        path = out_dir / "graph.dot"
        _write(path, viz_export.export_dot(analyzed, report.zones, run.only_significant))
        written.append(path)
    if "graphml" in run.formats:
        path = out_dir / "graph.graphml"
        _write(path, viz_export.export_graphml(analyzed, report.zones, run.only_significant))
        written.append(path)
    if "scatter" in run.formats:
        rows = viz_export.moran_scatter(analyzed, report.zones)
        _write(out_dir / "scatter.csv", viz_export.export_scatter_csv(rows))
        viz_export.render_scatter_figure(report.zones, out_dir / "scatter.svg")
        written.extend([out_dir / "scatter.csv", out_dir / "scatter.svg"])
    if series is not None:
        _write(out_dir / "timeseries.csv", viz_export.export_timeseries(series))
        written.append(out_dir / "timeseries.csv")
        if "timeseries" in run.formats:
            viz_export.render_timeseries_figure(series, out_dir / "timeseries.png")
            written.append(out_dir / "timeseries.png")
    elif "timeseries" in run.formats:
        raise ValueError("timeseries output needs log input (--input), not a prebuilt dataset")

    if summary is not None:
        _print_summary(summary, ds)
    print(f"softspace: wrote {', '.join(str(p) for p in written)}", file=sys.stderr)
    return EXIT_OK


def cmd_export(args: argparse.Namespace) -> int:
    ds = _load_dataset(args.matrix, args.counts)
    try:
        report = viz_export.report_from_json(Path(args.report).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailure(f"cannot read report {args.report}: {exc}") from exc
    if tuple(r.zone for r in report.zones) != ds.labels:
        raise ValueError("report zones do not match the dataset's module labels")
    if args.graph_format == "dot":
        text = viz_export.export_dot(ds, report.zones, args.only_significant)
    else:
        text = viz_export.export_graphml(ds, report.zones, args.only_significant)
    _write(Path(args.out), text)
    print(f"softspace: wrote {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    try:
        report = viz_export.report_from_json(Path(args.report).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailure(f"cannot read report {args.report}: {exc}") from exc
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = [out_dir / "report.md", out_dir / "zones.csv", out_dir / "scatter.csv"]
    _write(out_dir / "report.md", viz_export.export_report(report, "md"))
    _write(out_dir / "zones.csv", viz_export.export_report(report, "csv"))
    rows = [(r.zone, r.deviation, r.lag, r.cluster.value) for r in report.zones]
    _write(out_dir / "scatter.csv", viz_export.export_scatter_csv(rows))
    viz_export.render_scatter_figure(report.zones, out_dir / "scatter.svg")
    viz_export.render_scatter_figure(report.zones, out_dir / "scatter.png")
    written.extend([out_dir / "scatter.svg", out_dir / "scatter.png"])
    if args.timeseries:
        series = _load_series(args.timeseries)
        viz_export.render_timeseries_figure(series, out_dir / "timeseries.png")
        written.append(out_dir / "timeseries.png")
    print(f"softspace: wrote {', '.join(str(p) for p in written)}", file=sys.stderr)
    return EXIT_OK


def _load_series(path: str) -> dict[date, int]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["day", "total_count"]:
                raise ValueError(f"{path}: expected header day,total_count")
            return {date.fromisoformat(row[0]): int(row[1]) for row in reader if row}
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc


def cmd_synth(args: argparse.Namespace) -> int:
    trace = synth.generate(
        topology=synth.Topology(args.topology),
        n=args.n,
        pattern=synth.CountPattern(args.pattern),
        threads=args.threads,
        seed=args.seed,
    )
    _write(Path(args.out), trace.jsonl())
    written = [args.out]
    if args.manifest:
        _write(Path(args.manifest), json.dumps(trace.manifest(), indent=2, sort_keys=True) + "\n")
        written.append(args.manifest)
    print(f"softspace: wrote {', '.join(written)}", file=sys.stderr)
    if trace.planted:
        print(f"softspace: planted zone {trace.planted}", file=sys.stderr)
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="TOML config path (default: $SOFTSPACE_CONFIG)")
    parser.add_argument(
        "--field-map",
        action="append",
        metavar="KEY=VALUE",
        help="rename a log field (time, thread, class, method, event, entry_value, exit_value)",
    )
    parser.add_argument("--strict", action="store_true", help="fail on the first malformed record")
    parser.add_argument("--out-dir", default=".", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="softspace",
        description="Spatial statistics over software execution traces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="logs -> proximity matrix and counts CSVs")
    p_ingest.add_argument("--input", nargs="+", required=True, metavar="LOG")
    _add_common(p_ingest)
    p_ingest.set_defaults(func=cmd_ingest)

    p_analyze = sub.add_parser("analyze", help="logs or dataset -> analysis report and exports")
    p_analyze.add_argument("--input", nargs="+", metavar="LOG")
    p_analyze.add_argument("--matrix", help="proximity matrix CSV (with --counts)")
    p_analyze.add_argument("--counts", help="execution counts CSV (with --matrix)")
    p_analyze.add_argument("--weights", choices=[m.value for m in WeightsMode])
    p_analyze.add_argument("--m-mode", dest="m_mode", choices=[m.value for m in MMode])
    p_analyze.add_argument("--inference", choices=[m.value for m in InferenceMethod])
    p_analyze.add_argument("--alpha", type=float)
    p_analyze.add_argument("--perms", type=int, help="permutation replications (default 999)")
    p_analyze.add_argument("--seed", type=int, help="RNG seed; required for permutation inference")
    p_analyze.add_argument("--fdr", action="store_true", default=None, help="Benjamini-Hochberg significance flags")
    p_analyze.add_argument("--only-significant", action="store_true", help="color only significant zones in graph exports")
    p_analyze.add_argument("--day-offset", dest="day_offset", type=int, help="day boundary offset, minutes from UTC")
    p_analyze.add_argument(
        "--format",
        help=f"comma list of outputs: {', '.join(REPORT_FORMATS + EXTRA_FORMATS)}, or all (default json)",
    )
    _add_common(p_analyze)
    p_analyze.set_defaults(func=cmd_analyze)

    p_export = sub.add_parser("export", help="dataset + report -> colored dependency graph")
    p_export.add_argument("--matrix", required=True)
    p_export.add_argument("--counts", required=True)
    p_export.add_argument("--report", required=True, help="report JSON from analyze")
    p_export.add_argument("--graph-format", choices=("dot", "graphml"), default="dot")
    p_export.add_argument("--only-significant", action="store_true")
    p_export.add_argument("--out", required=True)
    p_export.set_defaults(func=cmd_export)

    p_report = sub.add_parser("report", help="report JSON -> Markdown, CSVs, and figures")
    p_report.add_argument("--report", required=True, help="report JSON from analyze")
    p_report.add_argument("--timeseries", help="timeseries CSV to render alongside")
    p_report.add_argument("--out-dir", default=".")
    p_report.set_defaults(func=cmd_report)

    p_synth = sub.add_parser("synth", help="generate a synthetic execution log")
    p_synth.add_argument("--topology", choices=[t.value for t in synth.Topology], required=True)
    p_synth.add_argument("--n", type=int, required=True, help="number of modules")
    p_synth.add_argument("--pattern", choices=[p.value for p in synth.CountPattern], required=True)
    p_synth.add_argument("--threads", type=int, default=1)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--out", default="synth.jsonl")
    p_synth.add_argument("--manifest", help="also write ground-truth manifest JSON")
    p_synth.set_defaults(func=cmd_synth)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MalformedRecord as exc:
        print(f"softspace: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (DegenerateVariance, EmptyWeights, TooFewZones, NonpositiveM, EmptySpace, ZeroVariance) as exc:
        print(f"softspace: degenerate statistics: {exc}", file=sys.stderr)
        return EXIT_STATS
    except IoFailure as exc:
        print(f"softspace: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, SynthError) as exc:
        print(f"softspace: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SoftspaceError as exc:
        print(f"softspace: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
