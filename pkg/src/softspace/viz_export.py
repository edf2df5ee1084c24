"""Exports: colored dependency graphs, scatter data, reports, and figures.

Everything here is pure serialization; identical inputs produce byte-identical
output. Graph layout is left to external renderers (Graphviz etc.), we emit
structure and color only.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Mapping, Sequence, Union
from xml.sax.saxutils import escape

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .space_model import SoftwareSpaceDataset
from .spatial_stats import ClusterLabel, GlobalMoranResult, LocalMoranRecord

__all__ = [
    "ColorScheme",
    "AnalysisReport",
    "build_report",
    "export_dot",
    "export_graphml",
    "moran_scatter",
    "export_scatter_csv",
    "export_report",
    "report_from_json",
    "export_timeseries",
    "render_scatter_figure",
    "render_timeseries_figure",
]

LABEL_ORDER = (
    ClusterLabel.HOT_SPOT,
    ClusterLabel.COOL_SPOT,
    ClusterLabel.HIGH_VALUE_OUTLIER,
    ClusterLabel.LOW_VALUE_OUTLIER,
    ClusterLabel.NEUTRAL,
    ClusterLabel.ISOLATED,
)

LABEL_TITLES = {
    ClusterLabel.HOT_SPOT: "Hot spot",
    ClusterLabel.COOL_SPOT: "Cool spot",
    ClusterLabel.HIGH_VALUE_OUTLIER: "High-value outlier",
    ClusterLabel.LOW_VALUE_OUTLIER: "Low-value outlier",
    ClusterLabel.NEUTRAL: "Neutral",
    ClusterLabel.ISOLATED: "Isolated",
}

# keeps SVG ids and metadata stable across runs
matplotlib.rcParams["svg.hashsalt"] = "softspace"


@dataclass(frozen=True)
class ColorScheme:
    """Cluster label to fill color, overridable per label."""

    colors: Mapping[ClusterLabel, str] = field(
        default_factory=lambda: {
            ClusterLabel.HOT_SPOT: "red",
            ClusterLabel.COOL_SPOT: "blue",
            ClusterLabel.HIGH_VALUE_OUTLIER: "gray",
            ClusterLabel.LOW_VALUE_OUTLIER: "green",
            ClusterLabel.NEUTRAL: "white",
            ClusterLabel.ISOLATED: "white",
        }
    )

    def color_for(self, label: ClusterLabel) -> str:
        return self.colors[label]

    def with_overrides(self, overrides: Mapping[str, str]) -> "ColorScheme":
        colors = dict(self.colors)
        for name, color in overrides.items():
            colors[ClusterLabel(name)] = color
        return ColorScheme(colors=colors)


@dataclass(frozen=True)
class AnalysisReport:
    """Everything a run produced: global index, per-zone records, and tables."""

    global_result: GlobalMoranResult
    zones: tuple[LocalMoranRecord, ...]
    cluster_table: tuple[dict, ...]
    significance_table: dict
    parameters: dict


def build_report(
    global_result: GlobalMoranResult,
    records: Sequence[LocalMoranRecord],
    parameters: Mapping[str, object],
) -> AnalysisReport:
    """Aggregate per-zone records into the cluster and significance tables."""
    total = len(records)
    cluster_rows = []
    sig_rows = []
    for label in LABEL_ORDER:
        members = [r for r in records if r.cluster is label]
        cluster_rows.append(
            {
                "label": label.value,
                "count": len(members),
                "percent": 100.0 * len(members) / total if total else 0.0,
            }
        )
        sig_rows.append(
            {
                "label": label.value,
                "significant_count": sum(1 for r in members if r.significant),
            }
        )
    total_significant = sum(row["significant_count"] for row in sig_rows)
    significance_table = {
        "rows": sig_rows,
        "total_significant": total_significant,
        "total_percent": 100.0 * total_significant / total if total else 0.0,
        "zone_count": total,
    }
    return AnalysisReport(
        global_result=global_result,
        zones=tuple(records),
        cluster_table=tuple(cluster_rows),
        significance_table=significance_table,
        parameters=dict(parameters),
    )


def _dot_quote(name: str) -> str:
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_dot(
    ds: SoftwareSpaceDataset,
    records: Sequence[LocalMoranRecord],
    only_significant: bool = False,
    scheme: ColorScheme | None = None,
    size_by_count: bool = False,
) -> str:
    """Undirected dependency graph in DOT, nodes filled with cluster colors.

    With ``only_significant`` every zone that did not pass the significance
    test is drawn white; the graph structure itself never changes. With
    ``size_by_count`` node area tracks the execution count.
    """
    scheme = scheme or ColorScheme()
    max_count = int(ds.counts.max()) if size_by_count else 0
    lines = ["graph software_space {", "  node [shape=circle, style=filled];"]
    for record, count in zip(records, ds.counts):
        color = scheme.color_for(record.cluster)
        if only_significant and not record.significant:
            color = "white"
        attrs = [f'fillcolor="{color}"']
        if size_by_count:
            width = 0.5 + math.sqrt(int(count) / max_count)
            attrs.append(f'width={width:.3f}, fixedsize=true')
        lines.append(f"  {_dot_quote(record.zone)} [{', '.join(attrs)}];")
    for i, j in ds.weights.neighbor_pairs():
        lines.append(f"  {_dot_quote(ds.labels[i])} -- {_dot_quote(ds.labels[j])};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_graphml(
    ds: SoftwareSpaceDataset,
    records: Sequence[LocalMoranRecord],
    only_significant: bool = False,
    scheme: ColorScheme | None = None,
) -> str:
    """GraphML twin of :func:`export_dot` with cluster/color/count node attributes."""
    scheme = scheme or ColorScheme()
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">',
        '  <key id="cluster" for="node" attr.name="cluster" attr.type="string"/>',
        '  <key id="color" for="node" attr.name="color" attr.type="string"/>',
        '  <key id="count" for="node" attr.name="count" attr.type="long"/>',
        '  <graph id="software_space" edgedefault="undirected">',
    ]
    for record, count in zip(records, ds.counts):
        color = scheme.color_for(record.cluster)
        if only_significant and not record.significant:
            color = "white"
        out.append(f'    <node id="{escape(record.zone)}">')
        out.append(f'      <data key="cluster">{escape(record.cluster.value)}</data>')
        out.append(f'      <data key="color">{escape(color)}</data>')
        out.append(f'      <data key="count">{int(count)}</data>')
        out.append("    </node>")
    for i, j in ds.weights.neighbor_pairs():
        out.append(f'    <edge source="{escape(ds.labels[i])}" target="{escape(ds.labels[j])}"/>')
    out.extend(["  </graph>", "</graphml>", ""])
    return "\n".join(out)


def moran_scatter(
    ds: SoftwareSpaceDataset,
    records: Sequence[LocalMoranRecord],
) -> list[tuple[str, float, float, str]]:
    """Scatter-plot table: one (zone, deviation, lag, quadrant) row per zone.

    The quadrant column repeats the zone's cluster label; for zones with
    nonzero deviation and lag it coincides with the scatter quadrant.
    """
    return [(r.zone, r.deviation, r.lag, r.cluster.value) for r in records]


def export_scatter_csv(rows: Sequence[tuple[str, float, float, str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["zone", "deviation", "lag", "quadrant"])
    for zone, deviation, lag, quadrant in rows:
        writer.writerow([zone, repr(deviation), repr(lag), quadrant])
    return buf.getvalue()


def _report_dict(report: AnalysisReport) -> dict:
    return {
        "global": {
            "i_value": report.global_result.i_value,
            "n": report.global_result.n,
            "s0": report.global_result.s0,
            "mean_y": report.global_result.mean_y,
        },
        "zones": [
            {
                "zone": r.zone,
                "i_local": r.i_local,
                "deviation": r.deviation,
                "lag": r.lag,
                "m_constant": r.m_constant,
                "e_null": r.e_null,
                "var_null": r.var_null,
                "z": r.z,
                "p_value": r.p_value,
                "cluster": r.cluster.value,
                "significant": r.significant,
            }
            for r in report.zones
        ],
        "cluster_table": list(report.cluster_table),
        "significance_table": report.significance_table,
        "parameters": report.parameters,
    }


def report_from_json(text: str) -> AnalysisReport:
    """Rebuild a report from its canonical JSON form."""
    data = json.loads(text)
    global_result = GlobalMoranResult(
        i_value=data["global"]["i_value"],
        n=data["global"]["n"],
        s0=data["global"]["s0"],
        mean_y=data["global"]["mean_y"],
    )
    zones = tuple(
        LocalMoranRecord(
            zone=z["zone"],
            i_local=z["i_local"],
            deviation=z["deviation"],
            lag=z["lag"],
            m_constant=z["m_constant"],
            e_null=z["e_null"],
            var_null=z["var_null"],
            z=z["z"],
            p_value=z["p_value"],
            cluster=ClusterLabel(z["cluster"]),
            significant=z["significant"],
        )
        for z in data["zones"]
    )
    return AnalysisReport(
        global_result=global_result,
        zones=zones,
        cluster_table=tuple(data["cluster_table"]),
        significance_table=data["significance_table"],
        parameters=data["parameters"],
    )


def _zones_csv(report: AnalysisReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        [
            "zone",
            "i_local",
            "deviation",
            "lag",
            "m_constant",
            "e_null",
            "var_null",
            "z",
            "p_value",
            "cluster",
            "significant",
        ]
    )
    for r in report.zones:
        writer.writerow(
            [
                r.zone,
                repr(r.i_local),
                repr(r.deviation),
                repr(r.lag),
                repr(r.m_constant),
                repr(r.e_null),
                repr(r.var_null),
                repr(r.z),
                repr(r.p_value),
                r.cluster.value,
                str(r.significant).lower(),
            ]
        )
    return buf.getvalue()


def _markdown(report: AnalysisReport) -> str:
    g = report.global_result
    alpha = report.parameters.get("alpha", 0.05)
    scheme = ColorScheme()
    lines = [
        "# Software space analysis",
        "",
        f"Global Moran's I: {g.i_value:.6f} (N = {g.n}, S0 = {g.s0:g}, mean count = {g.mean_y:g})",
        "",
        "## Spatial clusters",
        "",
        "| Cluster type (color) | Zones |",
        "| --- | ---: |",
    ]
    for row in report.cluster_table:
        label = ClusterLabel(row["label"])
        title = f"{LABEL_TITLES[label]} ({scheme.color_for(label)})"
        lines.append(f"| {title} | {row['count']} ({row['percent']:.0f}%) |")
    lines.append(f"| No. of zones | {len(report.zones)} (100%) |")
    sig = report.significance_table
    lines.extend(
        [
            "",
            f"## Statistically significant zones (p <= {alpha:g})",
            "",
            "| Cluster type | Significant zones |",
            "| --- | ---: |",
        ]
    )
    for row in sig["rows"]:
        label = ClusterLabel(row["label"])
        lines.append(f"| {LABEL_TITLES[label]} | {row['significant_count']} |")
    lines.append(f"| Sum | {sig['total_significant']} ({sig['total_percent']:.0f}%) |")
    lines.append(f"| No. of zones | {sig['zone_count']} (100%) |")
    lines.append("")
    return "\n".join(lines)


def export_report(report: AnalysisReport, format: str = "json") -> str:
    """Serialize a report as canonical JSON, zone-per-row CSV, or Markdown tables."""
    if format == "json":
        return json.dumps(_report_dict(report), indent=2, sort_keys=True) + "\n"
    if format == "csv":
        return _zones_csv(report)
    if format == "md":
        return _markdown(report)
    raise ValueError(f"unknown report format {format!r} (expected json, csv, or md)")


def export_timeseries(series: Mapping[date, int]) -> str:
    """Daily totals as ``day,total_count`` CSV, gap days included as zeros."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["day", "total_count"])
    for day, count in series.items():
        writer.writerow([day.isoformat(), str(count)])
    return buf.getvalue()


PathLike = Union[str, Path]


def _save_deterministic(fig: plt.Figure, path: PathLike) -> None:
    suffix = Path(path).suffix.lower()
    if suffix == ".svg":
        fig.savefig(path, format="svg", metadata={"Date": None})
    elif suffix == ".png":
        fig.savefig(path, format="png", metadata={"Software": None})
    else:
        fig.savefig(path)
    plt.close(fig)


def render_scatter_figure(
    records: Sequence[LocalMoranRecord],
    path: PathLike,
    scheme: ColorScheme | None = None,
) -> None:
    """Scatter of count deviation vs spatial lag with quadrant axes at zero."""
    scheme = scheme or ColorScheme()
    fig, ax = plt.subplots(figsize=(6.0, 6.0))
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.axvline(0.0, color="black", linewidth=0.8)
    seen: list[ClusterLabel] = []
    for label in LABEL_ORDER:
        xs = [r.deviation for r in records if r.cluster is label]
        ys = [r.lag for r in records if r.cluster is label]
        if not xs:
            continue
        seen.append(label)
        ax.scatter(
            xs,
            ys,
            c=scheme.color_for(label),
            edgecolors="black",
            linewidths=0.5,
            label=LABEL_TITLES[label],
        )
    ax.set_xlabel("count deviation from mean")
    ax.set_ylabel("spatial lag of deviation")
    if seen:
        ax.legend(loc="best")
    fig.tight_layout()
    _save_deterministic(fig, path)


def render_timeseries_figure(series: Mapping[date, int], path: PathLike) -> None:
    """Daily total execution counts over the observed span."""
    days = list(series.keys())
    counts = list(series.values())
    fig, ax = plt.subplots(figsize=(8.0, 4.0))
    ax.plot(days, counts, marker="o", markersize=3, linewidth=1.0)
    ax.set_xlabel("day")
    ax.set_ylabel("total execution count")
    fig.autofmt_xdate()
    fig.tight_layout()
    _save_deterministic(fig, path)
