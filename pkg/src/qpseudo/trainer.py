"""Full-batch training loops, data splits, negative sampling and checkpoints."""

from __future__ import annotations

import dataclasses
import hashlib
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .errors import DivergenceError, PreconditionError
from .graph import Graph
from .metrics import f1_scores, map_report, roc_auc
from .models import build_model
from .qgcn import (
    ModelConfig,
    aggregation_matrix,
    cross_entropy,
    fermi_dirac,
    link_loss,
    reconstruction_loss_from_distances,
)

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
TASKS = ("reconstruct", "linkpred", "nodeclass")
FULL_BATCH_MAX_EDGES = 5000
ALL_NEGATIVES_MAX_NODES = 2000


@dataclass
class TrainConfig:
    task: str = "reconstruct"
    epochs: int = 500
    lr: float = 0.01
    curvature_lr: float = 1e-4
    weight_decay: float = 0.0
    dropout: float = 0.0
    seed: int = 0
    split: tuple = (0.85, 0.05, 0.10)
    patience: int = 100
    model: str = "qgcn"
    batch_edges: int = FULL_BATCH_MAX_EDGES
    grad_clip: float | None = None

    def __post_init__(self):
        self.split = tuple(float(f) for f in self.split)
        if self.task not in TASKS:
            raise ValueError(f"task must be one of {TASKS}, got {self.task!r}")
        if not self.lr > 0 or not self.curvature_lr > 0:
            raise ValueError("learning rates must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if len(self.split) != 3 or min(self.split) < 0 or abs(sum(self.split) - 1.0) > 1e-9:
            raise ValueError(f"split fractions must be three non-negative numbers summing to 1, got {self.split}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")


def config_dict(model_config: ModelConfig, train_config: TrainConfig) -> dict:
    return {"model": dataclasses.asdict(model_config), "train": dataclasses.asdict(train_config)}


def config_hash(model_config: ModelConfig, train_config: TrainConfig) -> str:
    blob = json.dumps(config_dict(model_config, train_config), sort_keys=True, default=list)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# ----------------------------------------------------------------------------
# optimiser

@dataclass
class AdamState:
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: dict, grads: dict, state: AdamState, lr: float, weight_decay: float = 0.0,
              curvature_lr: float | None = None, is_curvature=lambda name: False,
              b1: float = 0.9, b2: float = 0.999, eps: float = 1e-8) -> tuple[dict, AdamState]:
    """One bias-corrected Adam update with L2 weight decay folded into the gradient.

    Parameters flagged by ``is_curvature`` use ``curvature_lr`` and no decay.
    """
    state.step += 1
    t = state.step
    out = {}
    for name, p in params.items():
        g = np.asarray(grads.get(name, np.zeros_like(p)), dtype=float)
        curv = is_curvature(name)
        if weight_decay and not curv:
            g = g + weight_decay * p
        m = b1 * state.m.get(name, np.zeros_like(p)) + (1 - b1) * g
        v = b2 * state.v.get(name, np.zeros_like(p)) + (1 - b2) * g * g
        state.m[name], state.v[name] = m, v
        rate = curvature_lr if (curv and curvature_lr is not None) else lr
        mhat = m / (1 - b1**t)
        vhat = v / (1 - b2**t)
        out[name] = p - rate * mhat / (np.sqrt(vhat) + eps)
    return out, state


def clip_global_norm(grads: list, max_norm: float) -> list:
    """Rescale a gradient list so its joint Euclidean norm is at most ``max_norm``."""
    norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))
    if norm <= max_norm:
        return grads
    return [g * (max_norm / norm) for g in grads]


# ----------------------------------------------------------------------------
# sampling and splits

def negative_sample(graph: Graph, u: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Up to ``k`` distinct nodes that are neither ``u`` nor adjacent to it."""
    if k < 1:
        raise ValueError("k must be at least 1")
    banned = np.zeros(graph.n_nodes, dtype=bool)
    banned[graph.neighbors(u)] = True
    banned[u] = True
    pool = np.flatnonzero(~banned)
    if pool.size == 0:
        raise PreconditionError(f"node {u} has no non-neighbours")
    if pool.size <= k:
        return pool
    return np.sort(rng.choice(pool, size=k, replace=False))


def _sample_non_edges(n: int, count: int, forbidden: set, rng: np.random.Generator) -> np.ndarray:
    out: list[tuple[int, int]] = []
    seen = set(forbidden)
    max_pairs = n * (n - 1) // 2 - len(forbidden)
    count = min(count, max_pairs)
    while len(out) < count:
        u, v = (int(a) for a in rng.integers(0, n, 2))
        if u == v:
            continue
        key = (min(u, v), max(u, v))
        if key in seen:
            continue
        seen.add(key)
        out.append(key)
    return np.array(out, dtype=np.int64).reshape(-1, 2)


@dataclass
class Split:
    """Edge split for link prediction or node masks for classification."""

    train: np.ndarray
    val: np.ndarray
    test: np.ndarray
    val_neg: np.ndarray | None = None
    test_neg: np.ndarray | None = None


def split_edges(graph: Graph, fractions, rng: np.random.Generator) -> Split:
    m = graph.n_edges
    perm = rng.permutation(m)
    n_val = int(round(fractions[1] * m))
    n_test = int(round(fractions[2] * m))
    val = graph.edges[np.sort(perm[:n_val])]
    test = graph.edges[np.sort(perm[n_val:n_val + n_test])]
    train = graph.edges[np.sort(perm[n_val + n_test:])]
    true = {tuple(e) for e in graph.edges}
    negs = _sample_non_edges(graph.n_nodes, n_val + n_test, true, rng)
    return Split(train, val, test, negs[:n_val], negs[n_val:])


def split_nodes(labels: np.ndarray, fractions, rng: np.random.Generator) -> Split:
    labelled = np.flatnonzero(np.asarray(labels) >= 0)
    perm = rng.permutation(labelled)
    n_train = int(round(fractions[0] * len(perm)))
    n_val = int(round(fractions[1] * len(perm)))
    n = len(labels)
    masks = []
    for part in (perm[:n_train], perm[n_train:n_train + n_val], perm[n_train + n_val:]):
        mask = np.zeros(n, dtype=bool)
        mask[part] = True
        masks.append(mask)
    return Split(*masks)


# ----------------------------------------------------------------------------
# training

@dataclass
class TrainResult:
    model: object
    params: dict
    history: list
    best_epoch: int
    metrics: dict
    features: np.ndarray
    split: Split | None
    batching: str
    config_hash: str

    agg_edges: np.ndarray = field(default=None, repr=False)

    def embeddings(self) -> np.ndarray:
        """Final-layer embedding of every node under the returned parameters."""
        agg = aggregation_matrix(len(self.features), self.agg_edges, self.model.config.aggregation)
        return np.asarray(self.model.forward(self.params, self.features, agg))


def make_features(graph: Graph, eps: float, rng: np.random.Generator) -> np.ndarray:
    """One-hot node identities (or the supplied features) plus U[-eps, eps] noise."""
    base = np.eye(graph.n_nodes) if graph.features is None else np.asarray(graph.features, float)
    return base + rng.uniform(-eps, eps, size=base.shape) if eps > 0 else base.copy()


def _evaluate(task, model, params, feats, agg, graph, split, extra) -> dict:
    X = model.forward(params, feats, agg)
    if task == "reconstruct":
        D = np.asarray(model.pair_distance(params, X))
        rep = map_report(D, graph)
        return {"mAP": rep.value}
    if task == "linkpred":
        D = np.asarray(model.pair_distance(params, X))
        cfg = model.config
        out = {}
        for name, pos, neg in (("val", split.val, split.val_neg), ("test", split.test, split.test_neg)):
            if len(pos) == 0 or len(neg) == 0:
                out[f"{name}_roc_auc"] = float("nan")
                continue
            s = fermi_dirac(np.r_[D[pos[:, 0], pos[:, 1]], D[neg[:, 0], neg[:, 1]]], cfg.fd_r, cfg.fd_temp)
            y = np.r_[np.ones(len(pos)), np.zeros(len(neg))]
            out[f"{name}_roc_auc"] = roc_auc(s, y)
        return out
    T = np.asarray(model.tangent(params, X))
    logits = T @ np.asarray(params["Wc"]).T + np.asarray(params["bc"])
    pred = logits.argmax(axis=1)
    out = {}
    for name, mask in (("val", split.val), ("test", split.test)):
        if mask.any():
            mi, ma = f1_scores(pred[mask], graph.labels[mask], model.config.n_classes)
        else:
            mi = ma = float("nan")
        out[f"{name}_micro_f1"], out[f"{name}_macro_f1"] = mi, ma
    return out


def _score_key(task: str) -> str:
    return {"reconstruct": "mAP", "linkpred": "val_roc_auc", "nodeclass": "val_micro_f1"}[task]


def train(graph: Graph, model_config: ModelConfig, train_config: TrainConfig,
          init_params: dict | None = None, callback=None) -> TrainResult:
    """Optimise a model for ``train_config.task`` and keep the best-validation parameters.

    For reconstruction the validation metric is mAP on the full graph.  For
    link prediction it is ROC-AUC on held-out edges; for classification it is
    micro-F1 on the validation mask.  ``init_params`` warm-starts every
    parameter whose name and shape match (e.g. link prediction weights for
    classification).  ``callback(row, params)`` runs after every evaluation.
    """
    tc = train_config
    task = tc.task
    if model_config.task != task:
        model_config = dataclasses.replace(model_config, task=task)
    if task == "nodeclass":
        if graph.labels is None:
            raise PreconditionError("node classification needs labels")
        if model_config.n_classes <= 0:
            model_config = dataclasses.replace(model_config, n_classes=int(graph.labels.max()) + 1)
    seeds = np.random.SeedSequence(tc.seed).spawn(5)
    rng_init, rng_feat, rng_split, rng_neg, rng_drop = (np.random.default_rng(s) for s in seeds)

    feats = make_features(graph, model_config.eps, rng_feat)
    model = build_model(tc.model, model_config, feats.shape[1])
    params = model.init_params(rng_init)
    if init_params:
        for k, v in init_params.items():
            if k in params and np.shape(v) == params[k].shape:
                params[k] = np.array(v, dtype=float)

    split = None
    edges = graph.edges
    if task == "linkpred":
        split = split_edges(graph, tc.split, rng_split)
        edges = split.train
    elif task == "nodeclass":
        split = split_nodes(graph.labels, tc.split, rng_split)
    agg = aggregation_matrix(graph.n_nodes, edges, model_config.aggregation)

    n = graph.n_nodes
    positives = np.concatenate([edges, edges[:, ::-1]]) if len(edges) else edges.reshape(0, 2)
    batching = "full" if len(positives) <= tc.batch_edges else "minibatch"
    adj = np.zeros((n, n), dtype=bool)
    adj[graph.edges[:, 0], graph.edges[:, 1]] = True
    adj[graph.edges[:, 1], graph.edges[:, 0]] = True
    neg_mask_all = ~adj & ~np.eye(n, dtype=bool) if n <= ALL_NEGATIVES_MAX_NODES else None
    true_set = {tuple(e) for e in graph.edges}

    def negatives_for(src: np.ndarray) -> np.ndarray:
        if neg_mask_all is not None:
            return neg_mask_all
        mask = np.zeros((n, n), dtype=bool)
        for u in np.unique(src):
            mask[u, negative_sample(graph, int(u), model_config.n_negatives, rng_neg)] = True
        return mask

    def loss_fn(p, batch):
        X = model.forward(p, feats, agg, tc.dropout, rng_drop)
        if task == "reconstruct":
            D = model.pair_distance(p, X)
            return reconstruction_loss_from_distances(D, batch, negatives_for(batch[:, 0]))
        if task == "linkpred":
            D = model.pair_distance(p, X)
            neg = _sample_non_edges(n, len(batch), true_set, rng_neg)
            d_pos = ad.getitem(D, (batch[:, 0], batch[:, 1]))
            d_neg = ad.getitem(D, (neg[:, 0], neg[:, 1]))
            return link_loss(d_pos, d_neg, model_config.fd_r, model_config.fd_temp)
        T = model.tangent(p, X)
        logits = ad.matmul(T, ad.transpose(p["Wc"])) + p["bc"]
        return cross_entropy(logits, np.where(graph.labels >= 0, graph.labels, 0), split.train)

    def batches():
        if task == "nodeclass":
            return [None]
        if task == "linkpred":
            pos = split.train
        else:
            pos = positives
        if len(pos) <= tc.batch_edges:
            return [pos]
        order = rng_neg.permutation(len(pos))
        return [pos[order[i:i + tc.batch_edges]] for i in range(0, len(pos), tc.batch_edges)]

    if task != "nodeclass" and len(positives) == 0:
        raise PreconditionError("graph has no training edges")
    if task == "reconstruct" and neg_mask_all is not None:
        src = np.unique(positives[:, 0])
        if not neg_mask_all[src].any(axis=1).all():
            raise PreconditionError("a node has no non-neighbours; reconstruction loss undefined")

    key = _score_key(task)
    state = AdamState()
    history: list[dict] = []
    best = {"score": -np.inf, "epoch": 0, "params": {k: v.copy() for k, v in params.items()}}
    stale = 0
    chash = config_hash(model_config, tc)
    log.info("training %s (%s, %s batches) for %d epochs", task, tc.model, batching, tc.epochs)

    def record(epoch: int, loss: float | None, p: dict) -> float:
        nonlocal stale
        metrics = _evaluate(task, model, p, feats, agg, graph, split, None)
        row = {"epoch": epoch, "loss": loss, **metrics}
        history.append(row)
        if callback is not None:
            callback(row, p)
        score = metrics[key]
        if np.isfinite(score) and score > best["score"]:
            best.update(score=score, epoch=epoch, params={k: v.copy() for k, v in p.items()})
            stale = 0
        else:
            stale += 1
        return score

    for epoch in range(tc.epochs):
        epoch_loss = 0.0
        pre = {k: v.copy() for k, v in params.items()}
        for batch in batches():
            names = list(params)
            val, grads = ad.value_and_grad(
                lambda *vs: loss_fn(dict(zip(names, vs)), batch), *[params[k] for k in names])
            if not np.isfinite(val) or not all(np.all(np.isfinite(g)) for g in grads):
                raise DivergenceError(
                    f"non-finite loss or gradient at epoch {epoch} (loss={val}); "
                    f"betas={[float(-np.logaddexp(0, params[k])) for k in names if model.is_curvature(k)]}")
            if tc.grad_clip is not None:
                grads = clip_global_norm(grads, tc.grad_clip)
            params, state = adam_step(params, dict(zip(names, grads)), state, tc.lr, tc.weight_decay,
                                      tc.curvature_lr, model.is_curvature)
            epoch_loss += val
        record(epoch, float(epoch_loss), pre)
        if stale >= tc.patience:
            log.info("early stop at epoch %d", epoch)
            break
    if tc.epochs == 0 or stale < tc.patience:
        record(len(history), None, params)

    final = _evaluate(task, model, best["params"], feats, agg, graph, split, None)
    metrics = {**final, "best_epoch": best["epoch"], "initial_" + key: history[0][key]}
    res = TrainResult(model, best["params"], history, best["epoch"], metrics, feats, split,
                      batching, chash, edges)
    return res


def euclidean_gcn_baseline(graph: Graph, model_config: ModelConfig,
                           train_config: TrainConfig) -> TrainResult:
    """Same loop with flat-space layers."""
    return train(graph, model_config, dataclasses.replace(train_config, model="euclidean"))


# ----------------------------------------------------------------------------
# checkpoints

def save_checkpoint(path, params: dict, model_config: ModelConfig, train_config: TrainConfig,
                    features: np.ndarray | None = None) -> None:
    meta = {"version": CHECKPOINT_VERSION, "config_hash": config_hash(model_config, train_config),
            **config_dict(model_config, train_config)}
    arrays = {f"param/{k}": np.asarray(v, dtype=float) for k, v in params.items()}
    if features is not None:
        arrays["features"] = np.asarray(features, dtype=float)
    buf = io.BytesIO()
    np.savez(buf, __meta__=np.array(json.dumps(meta, sort_keys=True, default=list)), **arrays)
    Path(path).write_bytes(buf.getvalue())


@dataclass
class Checkpoint:
    params: dict
    model_config: ModelConfig
    train_config: TrainConfig
    features: np.ndarray | None
    meta: dict


def load_checkpoint(path) -> Checkpoint:
    with np.load(path, allow_pickle=False) as z:
        meta = json.loads(str(z["__meta__"]))
        if meta.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta.get('version')}")
        params = {k[len("param/"):]: z[k].copy() for k in z.files if k.startswith("param/")}
        feats = z["features"].copy() if "features" in z.files else None
    mc = ModelConfig(**meta["model"])
    tc = TrainConfig(**meta["train"])
    if config_hash(mc, tc) != meta["config_hash"]:
        raise ValueError("checkpoint config hash mismatch")
    return Checkpoint(params, mc, tc, feats, meta)
