"""The software space dataset: proximity matrix over executed modules plus counts.

Modules observed in the call reconstruction become zones. Zones are adjacent
when a call relationship exists between them in either direction, giving a
symmetric 0/1 proximity matrix with a zero diagonal. The execution count
vector holds the sample value for each zone.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence, Union

import numpy as np
from scipy import sparse

from .errors import EmptySpace, UnknownModule
from .trace_ingest import CallEdge

__all__ = [
    "WeightsMode",
    "SpatialWeights",
    "SoftwareSpaceDataset",
    "build_weights",
    "row_standardize",
    "build_dataset",
    "save_matrix_csv",
    "load_matrix_csv",
    "save_counts_csv",
    "load_counts_csv",
]

ROW_SUM_TOL = 1e-12


class WeightsMode(Enum):
    BINARY = "binary"
    ROW_STANDARDIZED = "row"


@dataclass(frozen=True)
class SpatialWeights:
    """Symmetric-by-construction proximity weights over ordered zone labels.

    Binary mode stores 0/1 adjacency. Row-standardized mode divides each
    nonzero row by its sum (rows of isolated zones stay zero), which makes
    the matrix generally asymmetric; symmetry is a property of the binary
    source only.
    """

    labels: tuple[str, ...]
    matrix: sparse.csr_matrix
    mode: WeightsMode

    @property
    def n(self) -> int:
        return len(self.labels)

    def row_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=1)).ravel()

    def squared_row_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.multiply(self.matrix).sum(axis=1)).ravel()

    def degrees(self) -> np.ndarray:
        """Neighbor count per zone (nonzero entries per row)."""
        return np.diff(self.matrix.indptr)

    def total_weight(self) -> float:
        """S0, the sum of all weights."""
        return float(self.matrix.sum())

    def neighbor_pairs(self) -> list[tuple[int, int]]:
        """Unordered adjacent index pairs (i < j), by nonzero structure."""
        coo = self.matrix.tocoo()
        return sorted({(min(i, j), max(i, j)) for i, j in zip(coo.row, coo.col)})


def build_weights(edges: Iterable[CallEdge], modules: Sequence[str]) -> SpatialWeights:
    """Binary proximity matrix from call edges over an ordered module list.

    w_ij = w_ji = 1 when a call was observed in either direction between
    distinct modules; the diagonal stays zero and call frequencies are
    ignored (adjacency is unweighted). Raises :class:`UnknownModule` for an
    edge endpoint missing from ``modules``.
    """
    labels = tuple(modules)
    index = {label: i for i, label in enumerate(labels)}
    rows: list[int] = []
    cols: list[int] = []
    for edge in edges:
        for endpoint in (edge.caller, edge.callee):
            if endpoint not in index:
                raise UnknownModule(f"edge endpoint {endpoint!r} is not a known module")
        i, j = index[edge.caller], index[edge.callee]
        if i == j:
            continue
        rows.extend((i, j))
        cols.extend((j, i))
    data = np.ones(len(rows), dtype=np.float64)
    matrix = sparse.csr_matrix((data, (rows, cols)), shape=(len(labels), len(labels)))
    # repeated or bidirectional edges were summed during construction; clamp to 1
    matrix.data[:] = 1.0
    return SpatialWeights(labels=labels, matrix=matrix, mode=WeightsMode.BINARY)


def row_standardize(weights: SpatialWeights) -> SpatialWeights:
    """Divide each nonzero row by its sum; zero rows are preserved."""
    if weights.mode is not WeightsMode.BINARY:
        raise ValueError("row standardization expects binary weights")
    sums = weights.row_sums()
    scale = np.divide(1.0, sums, out=np.zeros_like(sums), where=sums > 0)
    matrix = sparse.diags(scale).dot(weights.matrix).tocsr()
    return SpatialWeights(labels=weights.labels, matrix=matrix, mode=WeightsMode.ROW_STANDARDIZED)


@dataclass(frozen=True)
class SoftwareSpaceDataset:
    """Proximity weights plus the aligned execution count vector."""

    weights: SpatialWeights
    counts: np.ndarray

    @property
    def labels(self) -> tuple[str, ...]:
        return self.weights.labels

    @property
    def n(self) -> int:
        return self.weights.n

    def row_standardized(self) -> "SoftwareSpaceDataset":
        if self.weights.mode is WeightsMode.ROW_STANDARDIZED:
            return self
        return SoftwareSpaceDataset(weights=row_standardize(self.weights), counts=self.counts)


def build_dataset(
    edges: Iterable[CallEdge],
    counts: Mapping[str, int],
) -> SoftwareSpaceDataset:
    """Assemble the dataset from call edges and execution counts.

    Only executed modules (count >= 1) become zones, ordered lexicographically
    by label. Edges touching a module without a count are dropped; executed
    modules left without edges stay as zero-degree zones. Raises
    :class:`EmptySpace` when nothing was executed.
    """
    executed = sorted(label for label, count in counts.items() if count >= 1)
    if not executed:
        raise EmptySpace("no module was executed")
    known = set(executed)
    kept = [e for e in edges if e.caller in known and e.callee in known]
    weights = build_weights(kept, executed)
    vector = np.array([counts[label] for label in executed], dtype=np.int64)
    return SoftwareSpaceDataset(weights=weights, counts=vector)


PathLike = Union[str, Path]


def save_matrix_csv(weights: SpatialWeights, path: PathLike) -> None:
    """Write the proximity matrix with a header row and a label column."""
    dense = weights.matrix.toarray()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["module", *weights.labels])
        for label, row in zip(weights.labels, dense):
            if weights.mode is WeightsMode.BINARY:
                cells = [str(int(v)) for v in row]
            else:
                cells = [repr(float(v)) for v in row]
            writer.writerow([label, *cells])


def load_matrix_csv(path: PathLike) -> SpatialWeights:
    """Read a binary proximity matrix written by :func:`save_matrix_csv`."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or len(header) < 2:
            raise ValueError(f"{path}: expected a header row with module labels")
        labels = tuple(header[1:])
        dense = np.zeros((len(labels), len(labels)), dtype=np.float64)
        for i, row in enumerate(reader):
            if len(row) != len(labels) + 1:
                raise ValueError(f"{path}: row {i + 2} has {len(row)} cells, expected {len(labels) + 1}")
            if row[0] != labels[i]:
                raise ValueError(f"{path}: row label {row[0]!r} does not match column label {labels[i]!r}")
            dense[i] = [float(cell) for cell in row[1:]]
    if not np.array_equal(dense, dense.T):
        raise ValueError(f"{path}: matrix is not symmetric")
    if np.trace(np.abs(dense)) != 0:
        raise ValueError(f"{path}: diagonal must be zero")
    if not np.all(np.isin(dense, (0.0, 1.0))):
        raise ValueError(f"{path}: cells must be 0 or 1")
    matrix = sparse.csr_matrix(dense)
    return SpatialWeights(labels=labels, matrix=matrix, mode=WeightsMode.BINARY)


def save_counts_csv(labels: Sequence[str], counts: Sequence[int], path: PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["module", "count"])
        for label, count in zip(labels, counts):
            writer.writerow([label, str(int(count))])


def load_counts_csv(path: PathLike) -> dict[str, int]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["module", "count"]:
            raise ValueError(f"{path}: expected header module,count")
        return {row[0]: int(row[1]) for row in reader if row}
