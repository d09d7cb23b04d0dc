"""Parameter containers for the Q-GCN stack and the flat-space GCN baseline.

Both models share one interface so the trainer can drive either:

* ``init_params(rng)`` returns a ``dict[str, ndarray]``;
* ``forward(params, feats, agg, ...)`` returns the final node embedding;
* ``pair_distance(params, X)`` returns all-pairs distances;
* ``tangent(params, X)`` returns Euclidean coordinates for a linear head.

``params`` may hold taped variables, in which case everything downstream is
differentiable.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .geodesic import diff_log
from .manifold import Signature
from .qgcn import (
    ACTIVATIONS,
    ModelConfig,
    beta_from_raw,
    beta_to_raw,
    embed_features,
    layer_forward,
    pairwise_distance,
    pole,
    skip_combine,
)


def glorot(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    lim = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-lim, lim, size=(rows, cols))


class QGCN:
    """Stack of Q-GCN layers described by a :class:`ModelConfig`.

    Parameter names: ``proj`` (only when the raw feature width differs from
    the first ambient dimension), ``W{k}``/``b{k}`` per layer, ``beta{k}`` for
    each of the ``layers + 1`` manifolds, and ``Wc``/``bc`` for the
    classification head.
    """

    kind = "qgcn"

    def __init__(self, config: ModelConfig, n_features: int):
        self.config = config
        self.n_features = int(n_features)
        self.dims = config.dims()

    @property
    def needs_projection(self) -> bool:
        return self.n_features != self.dims[0]

    def init_params(self, rng: np.random.Generator) -> dict:
        cfg = self.config
        p: dict[str, np.ndarray] = {}
        if self.needs_projection:
            p["proj"] = glorot(rng, self.dims[0], self.n_features)
        for k in range(cfg.layers):
            p[f"W{k}"] = glorot(rng, self.dims[k + 1], self.dims[k])
            p[f"b{k}"] = np.zeros(self.dims[k + 1])
        for k in range(cfg.layers + 1):
            p[f"beta{k}"] = np.array(beta_to_raw(cfg.init_beta))
        if cfg.task == "nodeclass":
            p["Wc"] = glorot(rng, cfg.n_classes, self.dims[-1])
            p["bc"] = np.zeros(cfg.n_classes)
        return p

    @staticmethod
    def is_curvature(name: str) -> bool:
        return name.startswith("beta")

    def signatures(self, params: dict) -> list[Signature]:
        return [Signature(s, t, beta_from_raw(params[f"beta{k}"]))
                for k, (s, t) in enumerate(self.config.signatures)]

    def input_embedding(self, params: dict, feats):
        """Map raw (already perturbed) features onto the first manifold."""
        sig0 = self.signatures(params)[0]
        x = ad.matmul(feats, ad.transpose(params["proj"])) if self.needs_projection else feats
        return embed_features(x, sig0)

    def forward(self, params: dict, feats, agg, dropout: float = 0.0,
                rng: np.random.Generator | None = None):
        cfg = self.config
        sigs = self.signatures(params)
        h = self.input_embedding(params, feats)
        outputs = []
        n = ad.value(h).shape[0]
        for k in range(cfg.layers):
            mask = None
            if dropout > 0 and rng is not None:
                keep = rng.random((n, self.dims[k])) >= dropout
                mask = keep / (1.0 - dropout)
            h = layer_forward(h, agg, {"W": params[f"W{k}"], "b": params[f"b{k}"]},
                              sigs[k], sigs[k + 1], cfg.activation, mask)
            outputs.append(h)
        if cfg.skip and len(outputs) > 1:
            h = skip_combine(outputs, sigs[1:])
        return h

    def output_signature(self, params: dict) -> Signature:
        return self.signatures(params)[-1]

    def pair_distance(self, params: dict, X):
        return pairwise_distance(X, self.output_signature(params))

    def tangent(self, params: dict, X):
        sig = self.output_signature(params)
        return diff_log(X, pole(sig), sig)


class EuclideanGCN:
    """Flat-space GCN with the same widths: H' = act(A H W^T + b)."""

    kind = "euclidean"

    def __init__(self, config: ModelConfig, n_features: int):
        self.config = config
        self.n_features = int(n_features)
        self.dims = config.dims()

    needs_projection = QGCN.needs_projection

    def init_params(self, rng: np.random.Generator) -> dict:
        cfg = self.config
        p: dict[str, np.ndarray] = {}
        if self.needs_projection:
            p["proj"] = glorot(rng, self.dims[0], self.n_features)
        for k in range(cfg.layers):
            p[f"W{k}"] = glorot(rng, self.dims[k + 1], self.dims[k])
            p[f"b{k}"] = np.zeros(self.dims[k + 1])
        if cfg.task == "nodeclass":
            p["Wc"] = glorot(rng, cfg.n_classes, self.dims[-1])
            p["bc"] = np.zeros(cfg.n_classes)
        return p

    @staticmethod
    def is_curvature(name: str) -> bool:
        return False

    def forward(self, params: dict, feats, agg, dropout: float = 0.0,
                rng: np.random.Generator | None = None):
        cfg = self.config
        h = ad.matmul(feats, ad.transpose(params["proj"])) if self.needs_projection else feats
        act = ACTIVATIONS[cfg.activation]
        outputs = []
        for k in range(cfg.layers):
            if dropout > 0 and rng is not None:
                keep = rng.random(ad.value(h).shape) >= dropout
                h = h * (keep / (1.0 - dropout))
            z = ad.matmul(h, ad.transpose(params[f"W{k}"]))
            if agg is not None:
                z = ad.spmm(agg, z)
            h = act(z + params[f"b{k}"])
            outputs.append(h)
        if cfg.skip and len(outputs) > 1:
            acc = outputs[0]
            for o in outputs[1:]:
                acc = acc + o
            h = acc / float(len(outputs))
        return h

    def pair_distance(self, params: dict, X):
        n, d = ad.value(X).shape
        diff = ad.reshape(X, (n, 1, d)) - ad.reshape(X, (1, n, d))
        sq = ad.sum(diff * diff, axis=-1)
        # sqrt'(0) is infinite; the diagonal is masked out of every loss anyway
        return ad.sqrt(sq + np.eye(n)) * (1.0 - np.eye(n))

    def tangent(self, params: dict, X):
        return X


def build_model(kind: str, config: ModelConfig, n_features: int):
    if kind == "qgcn":
        return QGCN(config, n_features)
    if kind == "euclidean":
        return EuclideanGCN(config, n_features)
    raise ValueError(f"unknown model kind {kind!r}")


def count_parameters(params: dict) -> int:
    return int(sum(np.asarray(v).size for v in params.values()))
