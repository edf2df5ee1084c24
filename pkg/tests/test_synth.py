import numpy as np
import pytest

from softspace.errors import SynthError
from softspace.space_model import build_dataset
from softspace.spatial_stats import global_moran
from softspace.synth import CountPattern, Topology, generate
from softspace.trace_ingest import parse_log, reconstruct_calls


def round_trip(trace):
    events, parse_summary = parse_log(iter(trace.jsonl().splitlines()))
    assert parse_summary.events_rejected == 0
    edges, counts, summary = reconstruct_calls(events)
    return edges, counts, summary


class TestRoundTrip:
    @pytest.mark.parametrize("topology", list(Topology))
    @pytest.mark.parametrize("pattern", list(CountPattern))
    def test_lossless_for_every_shape(self, topology, pattern):
        for seed in (0, 1, 2):
            trace = generate(topology, 12, pattern, threads=3, seed=seed)
            edges, counts, summary = round_trip(trace)
            assert counts == trace.counts
            undirected = {tuple(sorted((e.caller, e.callee))) for e in edges}
            assert undirected == set(trace.edges)
            assert summary.unmatched_exits == 0
            assert summary.unclosed_entries == 0

    def test_reconstructed_dataset_equals_intended(self):
        trace = generate(Topology.GRID, 16, CountPattern.PLANTED_HOT_SPOT, threads=2, seed=5)
        edges, counts, _ = round_trip(trace)
        rebuilt = build_dataset(edges, counts)
        intended = trace.intended_dataset()
        assert rebuilt.labels == intended.labels
        assert np.array_equal(rebuilt.counts, intended.counts)
        assert np.array_equal(
            rebuilt.weights.matrix.toarray(), intended.weights.matrix.toarray()
        )


class TestTopologies:
    def test_god_object_has_full_degree_hub(self):
        trace = generate(Topology.GOD_OBJECT, 20, CountPattern.UNIFORM, seed=3)
        ds = trace.intended_dataset()
        assert ds.weights.degrees().max() == 19

    def test_grid_checkerboard_yields_negative_autocorrelation(self):
        trace = generate(Topology.GRID, 16, CountPattern.CHECKERBOARD, seed=1)
        ds = trace.intended_dataset().row_standardized()
        assert global_moran(ds).i_value < 0

    def test_grid_block_yields_positive_autocorrelation(self):
        trace = generate(Topology.GRID, 16, CountPattern.BLOCK, seed=1)
        ds = trace.intended_dataset().row_standardized()
        assert global_moran(ds).i_value > 0

    def test_tree_has_n_minus_one_edges(self):
        trace = generate(Topology.TREE, 15, CountPattern.UNIFORM, seed=9)
        assert len(trace.edges) == 14

    def test_planted_zone_recorded(self):
        hot = generate(Topology.GRID, 25, CountPattern.PLANTED_HOT_SPOT, seed=11)
        low = generate(Topology.GRID, 25, CountPattern.PLANTED_LOW_OUTLIER, seed=11)
        assert hot.planted in hot.labels
        assert low.counts[low.planted] == 1
        assert generate(Topology.GRID, 25, CountPattern.UNIFORM, seed=11).planted is None


class TestDeterminismAndValidation:
    def test_same_seed_same_bytes(self):
        a = generate(Topology.RANDOM, 14, CountPattern.UNIFORM, threads=4, seed=42)
        b = generate(Topology.RANDOM, 14, CountPattern.UNIFORM, threads=4, seed=42)
        assert a.jsonl() == b.jsonl()
        assert a.manifest() == b.manifest()

    def test_different_seed_different_log(self):
        a = generate(Topology.RANDOM, 14, CountPattern.UNIFORM, seed=1)
        b = generate(Topology.RANDOM, 14, CountPattern.UNIFORM, seed=2)
        assert a.jsonl() != b.jsonl()

    def test_threads_appear_in_log(self):
        trace = generate(Topology.GRID, 9, CountPattern.UNIFORM, threads=3, seed=0)
        threads = {rec["thread"] for rec in trace.records}
        assert threads == {"t00", "t01", "t02"}

    @pytest.mark.parametrize("n, threads", [(1, 1), (0, 1), (5, 0)])
    def test_bad_parameters_rejected(self, n, threads):
        with pytest.raises(SynthError):
            generate(Topology.GRID, n, CountPattern.UNIFORM, threads=threads, seed=0)

    def test_timestamps_are_monotonic_milliseconds(self):
        trace = generate(Topology.GRID, 9, CountPattern.UNIFORM, threads=2, seed=0)
        times = [rec["time"] for rec in trace.records]
        assert times == sorted(times)
        assert times[0].endswith("+00:00")
