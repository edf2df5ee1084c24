"""Synthetic execution-log generator for tests and demos.

Builds a target call topology and per-module execution counts, then emits
well-nested per-thread entry/exit traces that reconstruct to exactly that
topology and exactly those counts. A depth-first walk of a spanning tree
covers every module with a single entry; each non-tree edge is realized by a
brief nested visit hosted on one endpoint, charged to the other; remaining
count budget is spent on standalone single-module traces.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from enum import Enum

import numpy as np

from .errors import SynthError
from .space_model import SoftwareSpaceDataset, build_dataset
from .trace_ingest import CallEdge

__all__ = ["Topology", "CountPattern", "SyntheticTrace", "generate"]

BASE_TIME = datetime(2025, 1, 5, 0, 0, 0, tzinfo=timezone.utc)


class Topology(Enum):
    GRID = "grid"
    TREE = "tree"
    GOD_OBJECT = "godobject"
    RANDOM = "random"


class CountPattern(Enum):
    BLOCK = "block"
    CHECKERBOARD = "checkerboard"
    UNIFORM = "uniform"
    PLANTED_HOT_SPOT = "planted-hotspot"
    PLANTED_LOW_OUTLIER = "planted-low-outlier"


@dataclass(frozen=True)
class SyntheticTrace:
    """Generated log records plus the ground truth they encode."""

    topology: Topology
    pattern: CountPattern
    n: int
    threads: int
    seed: int
    labels: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]
    counts: dict[str, int]
    planted: str | None
    records: tuple[dict, ...]

    def jsonl(self) -> str:
        return "".join(json.dumps(rec) + "\n" for rec in self.records)

    def manifest(self) -> dict:
        return {
            "topology": self.topology.value,
            "pattern": self.pattern.value,
            "n": self.n,
            "threads": self.threads,
            "seed": self.seed,
            "labels": list(self.labels),
            "edges": [list(pair) for pair in self.edges],
            "counts": self.counts,
            "planted": self.planted,
        }

    def intended_dataset(self) -> SoftwareSpaceDataset:
        edges = [CallEdge(a, b) for a, b in self.edges]
        return build_dataset(edges, self.counts)


def _grid_dims(n: int) -> tuple[int, int]:
    rows = int(np.sqrt(n))
    while rows > 1 and n % rows:
        rows -= 1
    return rows, n // rows


def _adjacency(topology: Topology, n: int, rng: np.random.Generator) -> set[tuple[int, int]]:
    edges: set[tuple[int, int]] = set()
    if topology is Topology.GRID:
        rows, cols = _grid_dims(n)
        for r in range(rows):
            for c in range(cols):
                i = r * cols + c
                if c + 1 < cols:
                    edges.add((i, i + 1))
                if r + 1 < rows:
                    edges.add((i, i + cols))
    elif topology is Topology.TREE:
        for i in range(1, n):
            parent = int(rng.integers(0, i))
            edges.add((parent, i))
    elif topology is Topology.GOD_OBJECT:
        edges.update((0, i) for i in range(1, n))
    else:
        for i in range(1, n):
            parent = int(rng.integers(0, i))
            edges.add((parent, i))
        for _ in range(n // 2):
            a, b = (int(v) for v in rng.integers(0, n, size=2))
            if a != b:
                edges.add((min(a, b), max(a, b)))
    return edges


def _bfs_parity(n: int, neighbors: list[list[int]]) -> list[int]:
    parity = [-1] * n
    parity[0] = 0
    queue = [0]
    while queue:
        u = queue.pop(0)
        for v in neighbors[u]:
            if parity[v] < 0:
                parity[v] = parity[u] ^ 1
                queue.append(v)
    return [max(p, 0) for p in parity]


def _counts(
    pattern: CountPattern,
    topology: Topology,
    n: int,
    neighbors: list[list[int]],
    rng: np.random.Generator,
) -> tuple[list[int], int | None]:
    low, high = 5, 20
    if pattern is CountPattern.BLOCK:
        return [low if i < n // 2 else high for i in range(n)], None
    if pattern is CountPattern.CHECKERBOARD:
        if topology is Topology.GRID:
            rows, cols = _grid_dims(n)
            parity = [(i // cols + i % cols) % 2 for i in range(n)]
        else:
            parity = _bfs_parity(n, neighbors)
        return [low if p == 0 else high for p in parity], None
    if pattern is CountPattern.UNIFORM:
        return [int(v) for v in rng.integers(5, 101, size=n)], None
    # planted patterns: pick a well-connected center deterministically
    if topology is Topology.GRID:
        rows, cols = _grid_dims(n)
        center = (rows // 2) * cols + cols // 2
    else:
        center = max(range(n), key=lambda i: (len(neighbors[i]), -i))
    values = [int(v) for v in rng.integers(5, 16, size=n)]
    for v in neighbors[center]:
        values[v] = int(rng.integers(70, 101))
    if pattern is CountPattern.PLANTED_HOT_SPOT:
        values[center] = int(rng.integers(70, 101))
    else:
        values[center] = 1
    return values, center


def _spanning_tree(n: int, neighbors: list[list[int]]) -> tuple[list[list[int]], set[tuple[int, int]]]:
    """BFS tree from node 0: children lists plus the set of tree edge pairs."""
    children: list[list[int]] = [[] for _ in range(n)]
    tree_edges: set[tuple[int, int]] = set()
    visited = [False] * n
    visited[0] = True
    queue = [0]
    while queue:
        u = queue.pop(0)
        for v in neighbors[u]:
            if not visited[v]:
                visited[v] = True
                children[u].append(v)
                tree_edges.add((min(u, v), max(u, v)))
                queue.append(v)
    if not all(visited):
        raise SynthError("topology is not connected")
    return children, tree_edges


def generate(
    topology: Topology,
    n: int,
    pattern: CountPattern,
    threads: int = 1,
    seed: int = 0,
) -> SyntheticTrace:
    """Deterministically generate a synthetic log for the given shape.

    The reconstructed call edges of the emitted trace equal the topology's
    adjacency exactly, and the reconstructed execution counts equal the
    pattern's values exactly. Raises :class:`SynthError` when the requested
    combination cannot be realized (a zone's count is too small to host its
    share of call relationships).
    """
    if n < 2:
        raise SynthError(f"need at least 2 modules, got {n}")
    if threads < 1:
        raise SynthError(f"need at least 1 thread, got {threads}")
    rng = np.random.default_rng(seed)
    width = len(str(n - 1))
    labels = tuple(f"m{i:0{width}d}" for i in range(n))
    edge_set = _adjacency(topology, n, rng)
    neighbors: list[list[int]] = [[] for _ in range(n)]
    for a, b in sorted(edge_set):
        neighbors[a].append(b)
        neighbors[b].append(a)
    targets, planted = _counts(pattern, topology, n, neighbors, rng)
    children, tree_edges = _spanning_tree(n, neighbors)

    # charge each non-tree edge to the endpoint with the most remaining budget
    extras: list[list[int]] = [[] for _ in range(n)]  # host -> guests to visit
    slack = [t - 1 for t in targets]
    for a, b in sorted(edge_set - tree_edges):
        guest, host = (a, b) if slack[a] >= slack[b] else (b, a)
        if slack[guest] < 1:
            raise SynthError(
                f"count {targets[guest]} at {labels[guest]} is too small for its call relationships"
            )
        slack[guest] -= 1
        extras[host].append(guest)

    # depth-first cover: one entry per module plus brief guest visits
    cover: list[tuple[str, str]] = []
    stack: list[tuple[int, bool]] = [(0, False)]
    while stack:
        u, closing = stack.pop()
        if closing:
            cover.append((labels[u], "exit"))
            continue
        cover.append((labels[u], "entry"))
        for guest in extras[u]:
            cover.append((labels[guest], "entry"))
            cover.append((labels[guest], "exit"))
        stack.append((u, True))
        for child in reversed(children[u]):
            stack.append((child, False))

    queues: list[list[tuple[str, str]]] = [[] for _ in range(threads)]
    queues[0].extend(cover)
    slot = 1 % threads
    for i in range(n):
        for _ in range(slack[i]):
            queues[slot].append((labels[i], "entry"))
            queues[slot].append((labels[i], "exit"))
            slot = (slot + 1) % threads

    # deterministic interleave; each thread's own order is preserved
    records: list[dict] = []
    pending: list[tuple[int, list[tuple[str, str]]]] = [
        (tid, list(reversed(q))) for tid, q in enumerate(queues) if q
    ]
    tick = 0
    while pending:
        k = int(rng.integers(0, len(pending))) if len(pending) > 1 else 0
        tid, queue = pending[k]
        class_name, kind = queue.pop()
        records.append(
            {
                "time": (BASE_TIME + timedelta(milliseconds=tick)).isoformat(timespec="milliseconds"),
                "thread": f"t{tid:02d}",
                "class": class_name,
                "method": "run",
                "event": kind,
            }
        )
        tick += 1
        if not queue:
            pending.pop(k)

    edges = tuple(sorted((labels[a], labels[b]) for a, b in sorted(edge_set)))
    counts = {labels[i]: targets[i] for i in range(n)}
    return SyntheticTrace(
        topology=topology,
        pattern=pattern,
        n=n,
        threads=threads,
        seed=seed,
        labels=labels,
        edges=edges,
        counts=counts,
        planted=labels[planted] if planted is not None else None,
        records=tuple(records),
    )
