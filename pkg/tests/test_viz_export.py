import json
import re
from datetime import date
from pathlib import Path

import numpy as np
import pytest

from softspace.space_model import SoftwareSpaceDataset
from softspace.spatial_stats import (
    ClusterLabel,
    InferenceMethod,
    classify_clusters,
    global_moran,
    local_moran,
)
from softspace.viz_export import (
    ColorScheme,
    build_report,
    export_dot,
    export_graphml,
    export_report,
    export_scatter_csv,
    export_timeseries,
    moran_scatter,
    render_scatter_figure,
    render_timeseries_figure,
    report_from_json,
)

from conftest import grid_dataset, weights_from_dense

DATA = Path(__file__).parent / "data"

PARAMETERS = {
    "weights_mode": "row",
    "m_mode": "standard",
    "inference": "perm",
    "alpha": 0.05,
    "permutations": 999,
    "seed": 42,
}


def ten_zone_fixture():
    """2x5 grid with a dispersed count pattern touching several cluster kinds."""
    values = [19, 87, 1, 79, 17, 23, 29, 91, 26, 23]
    ds = grid_dataset(2, 5, values, row_std=True)
    terms = local_moran(ds)
    records = classify_clusters(
        ds, terms, alpha=0.05, method=InferenceMethod.PERMUTATION, replications=999, seed=42
    )
    report = build_report(global_moran(ds), records, PARAMETERS)
    return ds, records, report


def schematic_3zone():
    dense = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float)
    w = weights_from_dense(dense, labels=("A", "B", "D"))
    ds = SoftwareSpaceDataset(weights=w, counts=np.array([3, 4, 1]))
    terms = local_moran(ds)
    records = classify_clusters(ds, terms, method=InferenceMethod.PERMUTATION, seed=7)
    return ds, records


class TestExportDot:
    def test_schematic_has_three_nodes_two_edges(self):
        ds, records = schematic_3zone()
        dot = export_dot(ds, records)
        assert dot.count("fillcolor") == 3
        assert dot.count("--") == 2
        assert '"A" -- "B";' in dot
        assert '"B" -- "D";' in dot

    def test_node_colors_match_scheme(self):
        ds, records, _ = ten_zone_fixture()
        scheme = ColorScheme()
        dot = export_dot(ds, records, only_significant=False, scheme=scheme)
        for record in records:
            pattern = rf'"{record.zone}" \[fillcolor="(\w+)"\]'
            color = re.search(pattern, dot).group(1)
            assert color == scheme.color_for(record.cluster)

    def test_only_significant_filter_whitens_but_keeps_structure(self):
        ds, records, _ = ten_zone_fixture()
        plain = export_dot(ds, records)
        filtered = export_dot(ds, records, only_significant=True)
        assert plain.count("--") == filtered.count("--")
        for record in records:
            color = re.search(rf'"{record.zone}" \[fillcolor="(\w+)"\]', filtered).group(1)
            if not record.significant:
                assert color == "white"
            else:
                assert color == ColorScheme().color_for(record.cluster)

    def test_all_white_when_nothing_significant(self):
        ds, records = schematic_3zone()
        assert not any(r.significant for r in records)
        filtered = export_dot(ds, records, only_significant=True)
        assert filtered.count('fillcolor="white"') == 3

    def test_golden_snapshot(self):
        ds, records, _ = ten_zone_fixture()
        dot = export_dot(ds, records)
        assert dot == (DATA / "ten_zone_graph.dot").read_text(encoding="utf-8")

    def test_byte_identical_across_runs(self):
        ds, records, _ = ten_zone_fixture()
        assert export_dot(ds, records) == export_dot(ds, records)

    def test_size_by_count_scales_width(self):
        ds, records = schematic_3zone()
        dot = export_dot(ds, records, size_by_count=True)
        assert "fixedsize=true" in dot
        widths = [float(m) for m in re.findall(r"width=([\d.]+)", dot)]
        assert len(widths) == 3 and max(widths) > min(widths)

    def test_custom_scheme_override(self):
        ds, records = schematic_3zone()
        scheme = ColorScheme().with_overrides({"HotSpot": "#ff0000"})
        assert scheme.color_for(ClusterLabel.HOT_SPOT) == "#ff0000"
        assert scheme.color_for(ClusterLabel.COOL_SPOT) == "blue"


class TestExportGraphml:
    def test_structure_and_cluster_attribute(self):
        ds, records, _ = ten_zone_fixture()
        xml = export_graphml(ds, records)
        assert xml.count("<node ") == 10
        assert xml.count("<edge ") == len(ds.weights.neighbor_pairs())
        for record in records:
            assert f'<data key="cluster">{record.cluster.value}</data>' in xml

    def test_deterministic(self):
        ds, records, _ = ten_zone_fixture()
        assert export_graphml(ds, records) == export_graphml(ds, records)


class TestMoranScatter:
    def test_quadrant_equals_cluster_label(self):
        ds, records, _ = ten_zone_fixture()
        rows = moran_scatter(ds, records)
        assert len(rows) == ds.n
        for (zone, deviation, lag, quadrant), record in zip(rows, records):
            assert zone == record.zone
            assert quadrant == record.cluster.value
            if deviation > 0 and lag > 0:
                assert quadrant == "HotSpot"
            if deviation < 0 and lag < 0:
                assert quadrant == "CoolSpot"

    def test_five_value_vector_accepted(self):
        # classic five-zone example shape: y = [95, 55, 60, 83, 32]
        dense = np.zeros((5, 5))
        dense[0, 1] = dense[1, 0] = dense[0, 2] = dense[2, 0] = 1.0
        dense[1, 3] = dense[3, 1] = dense[2, 4] = dense[4, 2] = 1.0
        w = weights_from_dense(dense, labels=tuple("ABCDE"), row_std=True)
        ds = SoftwareSpaceDataset(weights=w, counts=np.array([95, 55, 60, 83, 32]))
        records = classify_clusters(ds, local_moran(ds), method=InferenceMethod.ANALYTIC)
        rows = moran_scatter(ds, records)
        assert [r[0] for r in rows] == list("ABCDE")

    def test_scatter_csv_round_shape(self):
        ds, records, _ = ten_zone_fixture()
        text = export_scatter_csv(moran_scatter(ds, records))
        lines = text.strip().splitlines()
        assert lines[0] == "zone,deviation,lag,quadrant"
        assert len(lines) == ds.n + 1


class TestReport:
    def test_tables_aggregate_counts_and_percentages(self):
        _, _, report = ten_zone_fixture()
        total = sum(row["count"] for row in report.cluster_table)
        assert total == 10
        assert sum(row["percent"] for row in report.cluster_table) == pytest.approx(100.0)
        sig = report.significance_table
        assert sig["zone_count"] == 10
        by_label = {row["label"]: row for row in report.cluster_table}
        for row in sig["rows"]:
            assert row["significant_count"] <= by_label[row["label"]]["count"]

    def test_two_of_ten_significant_reads_twenty_percent(self):
        _, _, report = ten_zone_fixture()
        sig = report.significance_table
        assert sig["total_significant"] == 2
        assert sig["total_percent"] == pytest.approx(20.0)
        md = export_report(report, "md")
        assert "| Sum | 2 (20%) |" in md

    def test_alpha_to_zero_gives_empty_totals(self):
        ds, records, _ = ten_zone_fixture()
        terms = local_moran(ds)
        strict = classify_clusters(
            ds, terms, alpha=1e-9, method=InferenceMethod.PERMUTATION, replications=999, seed=42
        )
        report = build_report(global_moran(ds), strict, {**PARAMETERS, "alpha": 1e-9})
        assert report.significance_table["total_significant"] == 0
        md = export_report(report, "md")
        assert "| Sum | 0 (0%) |" in md

    def test_parameters_round_trip_through_json(self):
        _, _, report = ten_zone_fixture()
        text = export_report(report, "json")
        loaded = report_from_json(text)
        assert loaded.parameters == report.parameters
        assert loaded.parameters["alpha"] == 0.05
        assert loaded.parameters["permutations"] == 999
        assert loaded.parameters["seed"] == 42
        assert export_report(loaded, "json") == text

    def test_zone_records_round_trip_through_json(self):
        _, _, report = ten_zone_fixture()
        loaded = report_from_json(export_report(report, "json"))
        assert loaded.zones == report.zones
        assert loaded.global_result == report.global_result

    def test_csv_has_one_row_per_zone(self):
        _, _, report = ten_zone_fixture()
        lines = export_report(report, "csv").strip().splitlines()
        assert len(lines) == 11
        assert lines[0].startswith("zone,i_local,deviation,lag,m_constant,e_null")

    def test_markdown_golden(self):
        _, _, report = ten_zone_fixture()
        md = export_report(report, "md")
        assert md == (DATA / "ten_zone_report.md").read_text(encoding="utf-8")

    def test_unknown_format_rejected(self):
        _, _, report = ten_zone_fixture()
        with pytest.raises(ValueError):
            export_report(report, "pdf")


class TestTimeseries:
    def test_csv_with_gap_zeros(self):
        series = {date(2025, 1, 5): 4, date(2025, 1, 6): 0, date(2025, 1, 7): 9}
        text = export_timeseries(series)
        assert text.splitlines() == [
            "day,total_count",
            "2025-01-05,4",
            "2025-01-06,0",
            "2025-01-07,9",
        ]


class TestFigures:
    def test_scatter_svg_byte_identical(self, tmp_path):
        _, records, _ = ten_zone_fixture()
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        render_scatter_figure(records, a)
        render_scatter_figure(records, b)
        assert a.read_bytes() == b.read_bytes()
        assert b"<svg" in a.read_bytes()

    def test_scatter_png_byte_identical(self, tmp_path):
        _, records, _ = ten_zone_fixture()
        a, b = tmp_path / "a.png", tmp_path / "b.png"
        render_scatter_figure(records, a)
        render_scatter_figure(records, b)
        assert a.read_bytes() == b.read_bytes()

    def test_timeseries_png_byte_identical(self, tmp_path):
        series = {date(2025, 1, 5): 4, date(2025, 1, 6): 0, date(2025, 1, 7): 9}
        a, b = tmp_path / "a.png", tmp_path / "b.png"
        render_timeseries_figure(series, a)
        render_timeseries_figure(series, b)
        assert a.read_bytes() == b.read_bytes()
