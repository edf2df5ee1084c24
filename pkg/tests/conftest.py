import json

import numpy as np
import pytest
from scipy import sparse

from softspace.space_model import (
    SoftwareSpaceDataset,
    SpatialWeights,
    WeightsMode,
    build_dataset,
    row_standardize,
)
from softspace.trace_ingest import CallEdge


def record(time, thread, cls, method="m1", event="entry", **extra):
    rec = {"time": time, "thread": thread, "class": cls, "method": method, "event": event}
    rec.update(extra)
    return json.dumps(rec)


def schematic_lines():
    """Eight entry records over three threads: A calls B (twice in thread 202,
    where B then runs twice in a row and calls D), plus two short A->B traces.
    Expected: edges {A->B, B->D}, counts A=3, B=4, D=1."""
    seq = [
        ("202", "A"),
        ("202", "B"),
        ("202", "B"),
        ("202", "D"),
        ("216", "A"),
        ("216", "B"),
        ("311", "A"),
        ("311", "B"),
    ]
    return [
        record(f"2025-01-05T10:00:00.{i:03d}+00:00", thread, cls)
        for i, (thread, cls) in enumerate(seq)
    ]


def fig4_lines():
    """Four-record entry/exit trace of a single thread: A.m1 wraps B.m2."""
    return [
        record("2025-01-05T10:00:00.000+00:00", "216", "A", "m1", "entry"),
        record("2025-01-05T10:00:00.010+00:00", "216", "B", "m2", "entry"),
        record("2025-01-05T10:00:00.020+00:00", "216", "B", "m2", "exit"),
        record("2025-01-05T10:00:00.030+00:00", "216", "A", "m1", "exit"),
    ]


@pytest.fixture
def schematic_jsonl(tmp_path):
    path = tmp_path / "schematic.jsonl"
    path.write_text("\n".join(schematic_lines()) + "\n", encoding="utf-8")
    return path


def grid_dataset(rows, cols, values, row_std=False):
    """Rook-adjacency grid over row-major zone labels with given count values."""
    n = rows * cols
    labels = [f"g{i:02d}" for i in range(n)]
    edges = []
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                edges.append(CallEdge(labels[i], labels[i + 1]))
            if r + 1 < rows:
                edges.append(CallEdge(labels[i], labels[i + cols]))
    from softspace.space_model import build_weights

    weights = build_weights(edges, labels)
    if row_std:
        weights = row_standardize(weights)
    return SoftwareSpaceDataset(weights=weights, counts=np.asarray(values, dtype=np.int64))


def weights_from_dense(dense, labels=None, row_std=False):
    dense = np.asarray(dense, dtype=float)
    labels = tuple(labels or (f"z{i:02d}" for i in range(dense.shape[0])))
    w = SpatialWeights(labels=labels, matrix=sparse.csr_matrix(dense), mode=WeightsMode.BINARY)
    return row_standardize(w) if row_std else w


def random_connected_dataset(rng, n=None, row_std=True):
    """Random spanning tree plus extra edges; counts never all equal, no isolated zone."""
    n = int(n if n is not None else rng.integers(3, 51))
    labels = [f"z{i:02d}" for i in range(n)]
    pairs = set()
    for i in range(1, n):
        pairs.add((int(rng.integers(0, i)), i))
    for _ in range(int(rng.integers(0, n))):
        a, b = (int(v) for v in rng.integers(0, n, size=2))
        if a != b:
            pairs.add((min(a, b), max(a, b)))
    counts = rng.integers(1, 100, size=n)
    while np.unique(counts).size < 2:
        counts = rng.integers(1, 100, size=n)
    ds = build_dataset([CallEdge(labels[a], labels[b]) for a, b in pairs], dict(zip(labels, counts.tolist())))
    return ds.row_standardized() if row_std else ds


def naive_global_moran(ds):
    """Independent O(N^2) evaluation with plain Python loops over a dense matrix."""
    dense = ds.weights.matrix.toarray()
    y = [float(v) for v in ds.counts]
    n = len(y)
    ybar = sum(y) / n
    s0 = num = den = 0.0
    for i in range(n):
        den += (y[i] - ybar) ** 2
        for j in range(n):
            s0 += dense[i][j]
            num += dense[i][j] * (y[j] - ybar) * (y[i] - ybar)
    return (n / s0) * (num / den)
