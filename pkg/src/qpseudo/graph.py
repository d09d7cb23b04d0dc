"""Undirected graphs: ingestion, shortest paths and small synthetic families."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, shortest_path

from .errors import GraphFormatError


@dataclass
class Graph:
    """Simple undirected graph on nodes ``0..n_nodes-1``.

    ``edges`` is an ``(m, 2)`` int array with ``u < v`` per row, sorted and
    free of duplicates and self-loops.
    """

    n_nodes: int
    edges: np.ndarray
    features: np.ndarray | None = None
    labels: np.ndarray | None = None
    report: dict = field(default_factory=dict)

    def __post_init__(self):
        self.edges = canonical_edges(self.edges, self.n_nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def adjacency(self) -> sp.csr_matrix:
        n = self.n_nodes
        e = self.edges
        A = sp.coo_matrix((np.ones(2 * len(e)), (np.r_[e[:, 0], e[:, 1]], np.r_[e[:, 1], e[:, 0]])),
                          shape=(n, n))
        return A.tocsr()

    def dense_adjacency(self) -> np.ndarray:
        A = np.zeros((self.n_nodes, self.n_nodes), dtype=bool)
        A[self.edges[:, 0], self.edges[:, 1]] = True
        A[self.edges[:, 1], self.edges[:, 0]] = True
        return A

    def neighbors(self, u: int) -> np.ndarray:
        A = self.adjacency()
        return np.sort(A.indices[A.indptr[u]:A.indptr[u + 1]])

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n_nodes)

    def hop_distances(self) -> np.ndarray:
        """All-pairs BFS distances (``inf`` across components)."""
        return shortest_path(self.adjacency(), unweighted=True, directed=False)

    def is_connected(self) -> bool:
        return connected_components(self.adjacency(), directed=False)[0] <= 1

    def largest_component(self) -> "Graph":
        _, comp = connected_components(self.adjacency(), directed=False)
        keep = np.flatnonzero(comp == np.bincount(comp).argmax())
        return self.subgraph(keep)

    def subgraph(self, nodes) -> "Graph":
        nodes = np.asarray(nodes, dtype=int)
        remap = -np.ones(self.n_nodes, dtype=int)
        remap[nodes] = np.arange(len(nodes))
        e = remap[self.edges]
        e = e[(e >= 0).all(axis=1)]
        feats = None if self.features is None else self.features[nodes]
        labels = None if self.labels is None else self.labels[nodes]
        return Graph(len(nodes), e, feats, labels)

    def permuted(self, perm) -> "Graph":
        """Relabel node ``i`` as ``perm[i]``."""
        perm = np.asarray(perm, dtype=int)
        inv = np.argsort(perm)
        feats = None if self.features is None else self.features[inv]
        labels = None if self.labels is None else self.labels[inv]
        return Graph(self.n_nodes, perm[self.edges], feats, labels)


def canonical_edges(edges, n_nodes: int) -> np.ndarray:
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if e.size and (e.min() < 0 or e.max() >= n_nodes):
        raise GraphFormatError(f"edge endpoint outside [0, {n_nodes})")
    e = e[e[:, 0] != e[:, 1]]
    e = np.sort(e, axis=1)
    return np.unique(e, axis=0) if len(e) else e.reshape(0, 2)


# ----------------------------------------------------------------------------
# file ingestion

def _read_edge_file(path: Path) -> tuple[list[tuple[int, int]], int]:
    pairs, self_loops = [], 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.split()
            if len(parts) < 2:
                raise GraphFormatError(f"{path}:{lineno}: expected 'u v', got {line.rstrip()!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError as exc:
                raise GraphFormatError(f"{path}:{lineno}: non-integer node id in {line.rstrip()!r}") from exc
            if u < 0 or v < 0:
                raise GraphFormatError(f"{path}:{lineno}: negative node id")
            if u == v:
                self_loops += 1
                continue
            pairs.append((u, v))
    return pairs, self_loops


def load_graph(edge_path, feature_path=None, label_path=None, n_nodes: int | None = None) -> Graph:
    """Read a whitespace edge list plus optional CSV features and ``id,label`` rows.

    Node ids are the integers in the files.  The node count is ``n_nodes`` if
    given, else the feature row count, else one past the largest id seen.
    Self-loops are dropped and counted in ``graph.report``.
    """
    edge_path = Path(edge_path)
    pairs, self_loops = _read_edge_file(edge_path)
    feats = None
    if feature_path is not None:
        try:
            feats = np.loadtxt(feature_path, delimiter=",", dtype=float, ndmin=2)
        except ValueError as exc:
            raise GraphFormatError(f"{feature_path}: {exc}") from exc
    label_rows = None
    if label_path is not None:
        label_rows = []
        with open(label_path, encoding="utf-8", newline="") as fh:
            for lineno, row in enumerate(csv.reader(fh), 1):
                if not row or not "".join(row).strip():
                    continue
                if lineno == 1 and not row[0].strip().lstrip("-").isdigit():
                    continue  # header
                if len(row) != 2:
                    raise GraphFormatError(f"{label_path}:{lineno}: expected 'id,label'")
                try:
                    label_rows.append((int(row[0]), int(row[1])))
                except ValueError as exc:
                    raise GraphFormatError(f"{label_path}:{lineno}: {exc}") from exc

    max_id = max((max(p) for p in pairs), default=-1)
    if label_rows:
        max_id = max(max_id, max(i for i, _ in label_rows))
    if n_nodes is None:
        n_nodes = len(feats) if feats is not None else max_id + 1
    if max_id >= n_nodes:
        raise GraphFormatError(f"node id {max_id} out of range for {n_nodes} nodes")
    if feats is not None and len(feats) != n_nodes:
        raise GraphFormatError(f"feature file has {len(feats)} rows, expected {n_nodes}")
    labels = None
    if label_rows is not None:
        labels = -np.ones(n_nodes, dtype=int)
        for i, lab in label_rows:
            if i < 0:
                raise GraphFormatError(f"negative node id {i} in label file")
            labels[i] = lab
    n_raw = len(pairs)
    g = Graph(n_nodes, np.array(pairs, dtype=np.int64).reshape(-1, 2), feats, labels)
    g.report = {"self_loops_dropped": self_loops,
                "duplicates_dropped": n_raw - g.n_edges,
                "n_nodes": n_nodes, "n_edges": g.n_edges}
    return g


def write_edges(graph: Graph, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for u, v in graph.edges:
            fh.write(f"{u} {v}\n")


# ----------------------------------------------------------------------------
# synthetic graphs

def balanced_tree(branching: int, depth: int) -> Graph:
    """Complete ``branching``-ary tree of the given depth (BFS numbering)."""
    n = sum(branching ** d for d in range(depth + 1))
    child = np.arange(1, n)
    return Graph(n, np.stack([(child - 1) // branching, child], axis=1))


def cycle_graph(n: int) -> Graph:
    i = np.arange(n)
    return Graph(n, np.stack([i, (i + 1) % n], axis=1))


def path_graph(n: int) -> Graph:
    i = np.arange(n - 1)
    return Graph(n, np.stack([i, i + 1], axis=1))


def star_graph(leaves: int) -> Graph:
    i = np.arange(1, leaves + 1)
    return Graph(leaves + 1, np.stack([np.zeros_like(i), i], axis=1))


def complete_graph(n: int) -> Graph:
    iu = np.triu_indices(n, 1)
    return Graph(n, np.stack(iu, axis=1))


def cycle_augmented_tree(n_nodes: int = 95, extra: int | None = None, seed: int = 0) -> Graph:
    """A balanced binary tree grown to ``n_nodes`` nodes plus cycle-closing edges.

    Each extra edge joins two nodes at the same depth, creating cycles while
    keeping the hierarchy.  ``extra`` defaults to ``n_nodes // 10``.
    """
    rng = np.random.default_rng(seed)
    child = np.arange(1, n_nodes)
    tree = np.stack([(child - 1) // 2, child], axis=1)
    depth = np.floor(np.log2(np.arange(n_nodes) + 1)).astype(int)
    extra = n_nodes // 10 if extra is None else extra
    existing = {tuple(e) for e in tree}
    added: list[tuple[int, int]] = []
    candidates = [(u, v) for u in range(n_nodes) for v in range(u + 1, n_nodes)
                  if depth[u] == depth[v] and depth[u] >= 2 and (u, v) not in existing]
    order = rng.permutation(len(candidates))
    for idx in order[:extra]:
        added.append(candidates[idx])
    edges = np.concatenate([tree, np.array(added, dtype=int).reshape(-1, 2)])
    return Graph(n_nodes, edges)


def random_graph(n: int, p: float, rng: np.random.Generator) -> Graph:
    iu = np.triu_indices(n, 1)
    keep = rng.random(len(iu[0])) < p
    return Graph(n, np.stack([iu[0][keep], iu[1][keep]], axis=1))


def random_tree(n: int, rng: np.random.Generator) -> Graph:
    """Uniform random recursive tree: node i attaches to a uniform earlier node."""
    if n <= 1:
        return Graph(max(n, 0), np.zeros((0, 2), dtype=int))
    child = np.arange(1, n)
    parent = np.array([rng.integers(0, c) for c in child])
    return Graph(n, np.stack([parent, child], axis=1))
