"""Evaluation metrics: reconstruction mAP, ROC-AUC, F1 and distortion."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.stats import rankdata

from .graph import Graph


@dataclass(frozen=True)
class MapReport:
    value: float
    n_evaluated: int
    n_isolated: int


def map_report(D, graph: Graph) -> MapReport:
    """Mean average precision of graph neighbours ranked by distance.

    For node ``u`` and neighbour ``v`` the ball ``R(u, v)`` holds every node
    other than ``u`` whose distance to ``u`` is at most ``D[u, v]``, so tied
    non-neighbours count against the score.  Isolated nodes are skipped.
    """
    D = np.asarray(D, dtype=float)
    n = graph.n_nodes
    if D.shape != (n, n):
        raise ValueError(f"distance matrix must be {n}x{n}, got {D.shape}")
    A = graph.adjacency()
    total, used = 0.0, 0
    for u in range(n):
        nbrs = np.sort(A.indices[A.indptr[u]:A.indptr[u + 1]])
        if len(nbrs) == 0:
            continue
        others = np.sort(np.delete(D[u], u))
        dn = D[u, nbrs]
        ball = np.searchsorted(others, dn, side="right")
        hits = np.searchsorted(np.sort(dn), dn, side="right")
        # sequential sums keep the result bit-identical to the literal double loop
        total += sum((hits / ball).tolist()) / len(nbrs)
        used += 1
    value = total / used if used else float("nan")
    return MapReport(value, used, n - used)


def map_metric(D, graph: Graph) -> float:
    return map_report(D, graph).value


def map_bruteforce(D, graph: Graph) -> float:
    """Direct transcription of the per-node precision sum, used as an oracle."""
    D = np.asarray(D, dtype=float)
    adj = graph.dense_adjacency()
    scores = []
    for u in range(graph.n_nodes):
        nbrs = [v for v in range(graph.n_nodes) if adj[u, v]]
        if not nbrs:
            continue
        acc = 0.0
        for v in nbrs:
            ball = [w for w in range(graph.n_nodes) if w != u and D[u, w] <= D[u, v]]
            acc += sum(1 for w in ball if adj[u, w]) / len(ball)
        scores.append(acc / len(nbrs))
    return sum(scores) / len(scores) if scores else float("nan")


def roc_auc(scores, labels) -> float:
    """Area under the ROC curve as the Mann-Whitney statistic (ties count one half)."""
    scores = np.asarray(scores, dtype=float).ravel()
    labels = np.asarray(labels).ravel().astype(bool)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC-AUC needs at least one positive and one negative")
    ranks = rankdata(scores)
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def f1_scores(pred, labels, n_classes: int | None = None) -> tuple[float, float]:
    """(micro-F1, macro-F1) for single-label predictions."""
    pred = np.asarray(pred, dtype=int).ravel()
    labels = np.asarray(labels, dtype=int).ravel()
    if pred.shape != labels.shape:
        raise ValueError("pred and labels differ in length")
    if labels.size == 0:
        raise ValueError("empty label set")
    C = int(max(pred.max(), labels.max()) + 1) if n_classes is None else n_classes
    conf = np.zeros((C, C), dtype=np.int64)
    np.add.at(conf, (labels, pred), 1)
    tp = np.diag(conf).astype(float)
    fp = conf.sum(axis=0) - tp
    fn = conf.sum(axis=1) - tp
    micro = tp.sum() / max(tp.sum() + 0.5 * (fp.sum() + fn.sum()), 1e-300)
    denom = 2 * tp + fp + fn
    present = denom > 0
    per_class = np.where(present, 2 * tp / np.where(present, denom, 1.0), 0.0)
    macro = float(per_class[present].mean()) if present.any() else 0.0
    return float(micro), macro


@dataclass(frozen=True)
class DistortionReport:
    value: float
    sampled: bool
    stderr: float = 0.0


def distortion(D, graph: Graph, max_exact_nodes: int = 2000, n_samples: int = 100_000,
               rng: np.random.Generator | None = None) -> DistortionReport:
    """(1/|V|^2) * sum over ordered pairs u != v of ((d(u,v) / d_G(u,v))^2 - 1)^2.

    ``D`` is a dense distance matrix or a callable ``D(us, vs) -> distances``.
    Graphs above ``max_exact_nodes`` are estimated from uniform pair samples.
    """
    n = graph.n_nodes
    hop = graph.hop_distances()
    if not np.all(np.isfinite(hop)):
        raise ValueError("distortion needs a connected graph")
    pair_fn: Callable = D if callable(D) else (lambda us, vs: np.asarray(D)[us, vs])
    if n <= max_exact_nodes:
        us, vs = np.nonzero(~np.eye(n, dtype=bool))
        terms = ((pair_fn(us, vs) / hop[us, vs]) ** 2 - 1.0) ** 2
        return DistortionReport(float(terms.sum() / n**2), False)
    rng = np.random.default_rng(0) if rng is None else rng
    us = rng.integers(0, n, n_samples)
    vs = (us + rng.integers(1, n, n_samples)) % n
    terms = ((pair_fn(us, vs) / hop[us, vs]) ** 2 - 1.0) ** 2
    factor = (n - 1) / n
    return DistortionReport(float(terms.mean() * factor), True,
                            float(terms.std(ddof=1) / np.sqrt(n_samples) * factor))
