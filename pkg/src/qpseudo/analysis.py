"""Graph diagnostics: sampled sectional curvature and Gromov delta-hyperbolicity."""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .graph import Graph

DELTA_BIN = 0.5
EXACT_DELTA_MAX_NODES = 200

# Published maximum delta values for common benchmark graphs, printed next to
# a computed value when the dataset name is known.
REFERENCE_MAX_DELTA = {"airport": 1.0, "pubmed": 3.5, "citeseer": 4.5, "cora": 11.0}


@dataclass
class Histogram:
    left: np.ndarray
    right: np.ndarray
    mass: np.ndarray

    def rows(self):
        return zip(self.left.tolist(), self.right.tolist(), self.mass.tolist())


def write_histogram_csv(hist: Histogram, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin_left", "bin_right", "mass"])
        for row in hist.rows():
            w.writerow([repr(float(v)) for v in row])


def _histogram(values: np.ndarray, width: float) -> Histogram:
    values = np.asarray(values, dtype=float)
    lo = math.floor(values.min() / width) * width
    hi = (math.floor(values.max() / width) + 1) * width
    edges = np.arange(round((hi - lo) / width) + 1) * width + lo
    counts, _ = np.histogram(values, bins=edges)
    return Histogram(edges[:-1], edges[1:], counts / counts.sum())


def _prepare(graph: Graph) -> tuple[Graph, np.ndarray]:
    g = graph if graph.is_connected() else graph.largest_component()
    return g, g.hop_distances()


# ----------------------------------------------------------------------------
# sectional curvature

@dataclass
class CurvatureReport:
    values: np.ndarray
    mean: float
    std: float
    histogram: Histogram
    exhaustive: bool


def _midpoint_triples(g: Graph, D: np.ndarray) -> np.ndarray:
    """All (m, b, c) with b < c both adjacent to m and d(b, c) = 2."""
    out = []
    for m in range(g.n_nodes):
        nb = g.neighbors(m)
        for b, c in itertools.combinations(nb.tolist(), 2):
            if D[b, c] == 2:
                out.append((m, b, c))
    return np.array(out, dtype=np.int64).reshape(-1, 3)


def curvature_value(D: np.ndarray, m, b, c, a):
    """(d(a,m)^2 + d(b,c)^2/4 - (d(a,b)^2 + d(a,c)^2)/2) / (2 d(a,m))."""
    dam = D[a, m]
    return (dam**2 + D[b, c] ** 2 / 4.0 - (D[a, b] ** 2 + D[a, c] ** 2) / 2.0) / (2.0 * dam)


def sectional_curvature(graph: Graph, n_samples: int = 10_000, rng: np.random.Generator | None = None,
                        exhaustive: bool = False, bin_width: float = 0.25) -> CurvatureReport:
    """Triangle-midpoint curvature samples over the largest connected component.

    A sample is a node ``m`` with two non-adjacent neighbours ``b``, ``c``
    (so ``m`` is the exact midpoint of a shortest b-c path) and a reference
    node ``a != m``.  Triples are drawn uniformly, then ``a`` uniformly.
    ``exhaustive`` enumerates every (triple, a) combination instead.
    """
    if not exhaustive and n_samples <= 0:
        raise ValueError("n_samples must be positive")
    g, D = _prepare(graph)
    triples = _midpoint_triples(g, D)
    if len(triples) == 0:
        raise ValueError("graph has no node with two non-adjacent neighbours")
    n = g.n_nodes
    if exhaustive:
        t_idx = np.repeat(np.arange(len(triples)), n)
        a = np.tile(np.arange(n), len(triples))
        keep = a != triples[t_idx, 0]
        t_idx, a = t_idx[keep], a[keep]
    else:
        rng = np.random.default_rng(0) if rng is None else rng
        t_idx = rng.integers(0, len(triples), n_samples)
        a = (triples[t_idx, 0] + rng.integers(1, n, n_samples)) % n
    m, b, c = triples[t_idx].T
    vals = curvature_value(D, m, b, c, a)
    return CurvatureReport(vals, float(vals.mean()), float(vals.std()), _histogram(vals, bin_width),
                           exhaustive)


# ----------------------------------------------------------------------------
# delta hyperbolicity

@dataclass
class HyperbolicityReport:
    histogram: Histogram
    max_delta: float
    n_quadruples: int
    mode: str
    reference_max_delta: float | None = None


def four_point_delta(D: np.ndarray, x, y, z, w):
    """Half the gap between the two largest of the three pairwise distance sums."""
    s = np.sort(np.stack([D[x, y] + D[z, w], D[x, z] + D[y, w], D[x, w] + D[y, z]]), axis=0)
    return (s[2] - s[1]) / 2.0


def _delta_counts(deltas: np.ndarray) -> dict[float, int]:
    keys, counts = np.unique(np.round(np.asarray(deltas) / DELTA_BIN) * DELTA_BIN, return_counts=True)
    return dict(zip(keys.tolist(), counts.tolist()))


def _exact_counts(D: np.ndarray) -> dict[float, int]:
    n = len(D)
    totals: dict[float, int] = {}
    for i in range(n):
        for j in range(i + 1, n - 2):
            k, l = np.triu_indices(n - j - 1, 1)
            k, l = k + j + 1, l + j + 1
            for key, cnt in _delta_counts(four_point_delta(D, i, j, k, l)).items():
                totals[key] = totals.get(key, 0) + cnt
    return totals


def _report(counts: dict[float, int], mode: str, dataset: str | None) -> HyperbolicityReport:
    keys = np.array(sorted(counts))
    total = sum(counts.values())
    left = np.arange(0.0, keys.max() + DELTA_BIN, DELTA_BIN)
    mass = np.array([counts.get(float(v), 0) for v in left], dtype=float) / total
    ref = REFERENCE_MAX_DELTA.get(dataset.lower()) if dataset else None
    return HyperbolicityReport(Histogram(left, left + DELTA_BIN, mass), float(keys.max()), total,
                               mode, ref)


def delta_hyperbolicity(graph: Graph, mode: str = "sampled", n_quadruples: int = 10_000,
                        rng: np.random.Generator | None = None,
                        dataset: str | None = None) -> HyperbolicityReport:
    """Four-point delta distribution over the largest connected component.

    ``exact`` enumerates every 4-subset (at most 200 nodes).  ``sampled``
    draws distinct 4-subsets without replacement and becomes exhaustive once
    ``n_quadruples`` reaches the number of subsets.
    """
    g, D = _prepare(graph)
    n = g.n_nodes
    if n < 4:
        raise ValueError("delta hyperbolicity needs at least 4 nodes")
    if mode == "exact":
        if n > EXACT_DELTA_MAX_NODES:
            raise ValueError(f"exact mode is limited to {EXACT_DELTA_MAX_NODES} nodes, graph has {n}")
        return _report(_exact_counts(D), "exact", dataset)
    if mode != "sampled":
        raise ValueError(f"unknown mode {mode!r}")
    if n_quadruples <= 0:
        raise ValueError("n_quadruples must be positive")
    total = math.comb(n, 4)
    if n_quadruples >= total:
        quads = np.fromiter(itertools.chain.from_iterable(itertools.combinations(range(n), 4)),
                            dtype=np.int64, count=4 * total).reshape(-1, 4)
    else:
        rng = np.random.default_rng(0) if rng is None else rng
        seen: set[tuple[int, ...]] = set()
        while len(seen) < n_quadruples:
            batch = np.sort(_random_quads(rng, n, n_quadruples), axis=1)
            for q in map(tuple, batch.tolist()):
                if len(seen) >= n_quadruples:
                    break
                seen.add(q)
        quads = np.array(sorted(seen), dtype=np.int64)
    deltas = four_point_delta(D, *quads.T)
    return _report(_delta_counts(deltas), "sampled", dataset)


def _random_quads(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    q = rng.integers(0, n, (2 * k, 4))
    q = q[(np.diff(np.sort(q, axis=1), axis=1) > 0).all(axis=1)]
    return q[:k]
