"""Q-GCN layers, the Q-NN ablation and the task heads.

A layer maps node features on Q_{beta_l}^{s,t} to Q_{beta_{l+1}}^{s',t'}:

1. tangential transform: diff_log at the south pole, multiply by W, diff_exp;
2. bias translation: parallel-transport b from the pole and exponentiate
   (through the antipode when the point is not g-connected to the pole);
3. tangential aggregation: sum diff_log of the translated neighbours and the
   node itself, apply the activation, diff_exp at the next pole.

Everything is written against :mod:`qpseudo.autodiff`, so parameters may be
plain arrays (inference) or taped variables (training).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import autodiff as ad
from .errors import DegenerateInputError, DimensionError, PreconditionError
from .geodesic import _log_unchecked, _transport_along, diff_exp, diff_log, distance, exp_map
from .manifold import Signature, project_to_manifold, project_to_tangent, time_product

ACTIVATIONS = {
    "identity": lambda x: x,
    "relu": ad.relu,
    "tanh": ad.tanh,
    "sigmoid": ad.sigmoid,
    "elu": ad.elu,
}

BETA_RAW_UNIT = float(np.log(np.e - 1.0))  # softplus(BETA_RAW_UNIT) == 1


def beta_from_raw(raw):
    """beta = -softplus(raw), always strictly negative."""
    return -ad.softplus(raw)


def beta_to_raw(beta: float) -> float:
    return float(np.log(np.expm1(-beta)))


def pole(sig: Signature):
    """South pole (sqrt|beta|, 0, ..., 0), taped when beta is."""
    if not ad.is_var(sig.beta):
        o = np.zeros(sig.dim)
        o[0] = np.sqrt(-float(sig.beta))
        return o
    R = ad.reshape(sig.radius, (1,))
    return ad.concatenate([R, np.zeros(sig.dim - 1)], axis=-1)


def _tangent_mask(dim: int) -> np.ndarray:
    m = np.ones(dim)
    m[0] = 0.0
    return m


@dataclass
class LayerParams:
    W: np.ndarray
    b: np.ndarray
    beta_raw: float
    activation: str = "tanh"

    @property
    def beta(self) -> float:
        return float(beta_from_raw(self.beta_raw))


@dataclass
class ModelConfig:
    """Architecture of a Q-GCN stack.

    ``signatures`` lists (s, t) for the input manifold followed by each
    layer's output manifold, so it has ``layers + 1`` entries.
    """

    signatures: list = field(default_factory=lambda: [(7, 3), (7, 3), (7, 3)])
    skip: bool = True
    task: str = "reconstruct"
    activation: str = "tanh"
    fd_r: float = 2.0
    fd_temp: float = 1.0
    n_negatives: int = 10
    eps: float = 0.02
    aggregation: str = "sum"
    init_beta: float = -1.0
    n_classes: int = 0

    def __post_init__(self):
        self.signatures = [tuple(int(v) for v in st) for st in self.signatures]
        if len(self.signatures) < 2:
            raise ValueError("need an input signature and at least one layer")
        if self.aggregation not in ("sum", "mean"):
            raise ValueError(f"unknown aggregation {self.aggregation!r}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.fd_temp <= 0:
            raise ValueError("Fermi-Dirac temperature must be positive")
        if self.skip and len({s + t for s, t in self.signatures[1:]}) > 1:
            raise ValueError("skip connections need equal layer output dimensions")

    @property
    def layers(self) -> int:
        return len(self.signatures) - 1

    def dims(self) -> list[int]:
        return [s + t + 1 for s, t in self.signatures]


# ----------------------------------------------------------------------------
# feature initialisation

def init_features(x_raw, sig: Signature, eps: float, rng: np.random.Generator,
                  max_retries: int = 100) -> np.ndarray:
    """Perturb each coordinate by U[-eps, eps], then double-project onto the manifold."""
    x_raw = np.asarray(x_raw, dtype=float)
    if x_raw.shape[-1] != sig.dim:
        raise DimensionError(f"feature length {x_raw.shape[-1]} != ambient dimension {sig.dim}")
    for _ in range(max_retries):
        noisy = x_raw + rng.uniform(-eps, eps, size=x_raw.shape) if eps > 0 else x_raw
        try:
            return np.asarray(project_to_manifold(noisy, sig))
        except DegenerateInputError:
            if eps <= 0:
                raise
    raise DegenerateInputError("time block stayed zero after repeated perturbation")


def embed_features(x, sig: Signature):
    """Taped double projection of already-perturbed ambient features."""
    from .geodesic import _phi

    return _phi(x, sig)


# ----------------------------------------------------------------------------
# layer operations

def tangential_transform(W, h, sig_in: Signature, sig_out: Signature, dropout_mask=None):
    """exp_o(W log_o(h)); the first tangent coordinate is re-zeroed before exp."""
    if ad.value(W).shape != (sig_out.dim, sig_in.dim):
        raise DimensionError(f"W must be {sig_out.dim}x{sig_in.dim}, got {ad.value(W).shape}")
    xi = diff_log(h, pole(sig_in), sig_in)
    if dropout_mask is not None:
        xi = xi * dropout_mask
    y = ad.matmul(xi, ad.transpose(W)) if ad.value(xi).ndim == 2 else ad.matmul(W, xi)
    return diff_exp(y * _tangent_mask(sig_out.dim), pole(sig_out), sig_out)


def bias_translate(h_tilde, b, sig: Signature):
    """Translate by the pole tangent vector ``b`` via parallel transport.

    Points g-connected to the pole use exp_h(P_{o->h}(b)); the rest use
    -exp_{-h}(P_{o->-h}(b)).
    """
    o = pole(sig)
    b = b * _tangent_mask(sig.dim)
    connected = ad.value(time_product(o, h_tilde, sig)) < -float(ad.value(sig.beta))
    sign = np.where(connected, 1.0, -1.0)[..., None]
    base = h_tilde * sign
    moved = _transport_along(o, _log_unchecked(o, base, sig), b, sig)
    moved = project_to_tangent(base, moved, sig)
    return exp_map(base, moved, sig) * sign


def aggregation_matrix(n: int, edges: np.ndarray, mode: str = "sum") -> sp.csr_matrix:
    """Sparse A + I (or its row-normalised version for ``mode='mean'``)."""
    edges = np.asarray(edges, dtype=int).reshape(-1, 2)
    rows = np.concatenate([edges[:, 0], edges[:, 1], np.arange(n)])
    cols = np.concatenate([edges[:, 1], edges[:, 0], np.arange(n)])
    A = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    A.data[:] = 1.0
    if mode == "mean":
        deg = np.asarray(A.sum(axis=1)).ravel()
        A = sp.diags(1.0 / deg) @ A
    return A.tocsr()


def layer_forward(H, agg, params: dict, sig_in: Signature, sig_out: Signature,
                  activation: str = "tanh", dropout_mask=None, return_tangent: bool = False):
    """One Q-GCN layer.

    ``params`` holds ``W`` and ``b``; ``sig_in`` carries beta_l and
    ``sig_out`` the next layer's shape and beta_{l+1}.  ``agg`` is the sparse
    aggregation matrix (``None`` aggregates each node with itself only).
    """
    mid = Signature(sig_out.s, sig_out.t, sig_in.beta)
    h_tilde = tangential_transform(params["W"], H, sig_in, mid, dropout_mask)
    z = bias_translate(h_tilde, params["b"], mid)
    logs = diff_log(z, pole(mid), mid)
    summed = logs if agg is None else ad.spmm(agg, logs)
    u = ACTIVATIONS[activation](summed) * _tangent_mask(sig_out.dim)
    out = diff_exp(u, pole(sig_out), sig_out)
    return (out, u) if return_tangent else out


def qnn_forward(x, layers: list[LayerParams], sigs: list[Signature]):
    """Q-NN ablation: the layer stack with every node aggregating only itself.

    ``sigs`` has ``len(layers) + 1`` entries and carries the curvatures.
    """
    h = x
    for k, lp in enumerate(layers):
        h = layer_forward(h, None, {"W": lp.W, "b": lp.b}, sigs[k], sigs[k + 1], lp.activation)
    return h


def skip_combine(outputs: list, sigs: list[Signature]):
    """Mean of the pole tangent vectors of each layer output, re-exponentiated at the last pole."""
    if len({s.dim for s in sigs}) != 1:
        raise DimensionError("skip connection needs equal output dimensions")
    if len(outputs) == 1:
        return outputs[0]
    acc = None
    for h, sig in zip(outputs, sigs):
        xi = diff_log(h, pole(sig), sig)
        acc = xi if acc is None else acc + xi
    return diff_exp(acc / float(len(outputs)), pole(sigs[-1]), sigs[-1])


# ----------------------------------------------------------------------------
# heads and losses

def fermi_dirac(d, r: float = 2.0, temp: float = 1.0):
    """Edge probability 1 / (exp((d - r) / temp) + 1)."""
    if temp <= 0:
        raise ValueError("temperature must be positive")
    return ad.sigmoid((r - d) / temp)


def pairwise_distance(X, sig: Signature):
    """All-pairs broken-geodesic distances of an (n, d) embedding."""
    n, d = ad.value(X).shape
    return distance(ad.reshape(X, (n, 1, d)), ad.reshape(X, (1, n, d)), sig)


def reconstruction_loss_from_distances(D, positives: np.ndarray, negatives: np.ndarray):
    """Sum over positive (u, v) of -log softmax over {v} and the negatives of u.

    ``negatives`` is an (n, n) boolean mask of candidate negatives per row.
    """
    positives = np.asarray(positives, dtype=int).reshape(-1, 2)
    negatives = np.asarray(negatives, dtype=bool)
    src = positives[:, 0]
    if np.any(~negatives[src].any(axis=1)):
        raise PreconditionError("a node with positive pairs has zero negative candidates")
    Dv = ad.value(D)
    cand = negatives.copy()
    cand[src, positives[:, 1]] = True
    shift = np.where(cand, Dv, np.inf).min(axis=1)
    shift = np.where(np.isfinite(shift), shift, 0.0)
    E = ad.exp(-(D - shift[:, None]))
    neg_sum = ad.sum(E * negatives, axis=1)
    d_pos = ad.getitem(D, (src, positives[:, 1]))
    e_pos = ad.getitem(E, (src, positives[:, 1]))
    terms = d_pos - shift[src] + ad.log(e_pos + ad.getitem(neg_sum, src))
    return ad.sum(terms)


def reconstruction_loss(X, sig: Signature, positives, negatives):
    return reconstruction_loss_from_distances(pairwise_distance(X, sig), positives, negatives)


def link_loss(d_pos, d_neg, r: float = 2.0, temp: float = 1.0):
    """Binary cross-entropy of the Fermi-Dirac decoder on positive and negative pairs."""
    z_pos = (r - d_pos) / temp
    z_neg = (r - d_neg) / temp
    n = ad.value(d_pos).size + ad.value(d_neg).size
    return (ad.sum(ad.softplus(-z_pos)) + ad.sum(ad.softplus(z_neg))) / float(n)


def nc_logits(X, sig: Signature, Wc, bc):
    """Multinomial-logistic logits on the pole tangent coordinates."""
    return ad.matmul(diff_log(X, pole(sig), sig), ad.transpose(Wc)) + bc


def cross_entropy(logits, labels, mask=None):
    labels = np.asarray(labels, dtype=int)
    n, C = ad.value(logits).shape
    if labels.shape != (n,) or labels.min(initial=0) < 0 or labels.max(initial=0) >= C:
        raise ValueError(f"labels must be integers in [0, {C})")
    idx = np.arange(n) if mask is None else np.flatnonzero(mask)
    sub = ad.getitem(logits, idx)
    shift = ad.value(sub).max(axis=1, keepdims=True)
    lse = ad.log(ad.sum(ad.exp(sub - shift), axis=1)) + shift[:, 0]
    picked = ad.getitem(sub, (np.arange(len(idx)), labels[idx]))
    return ad.sum(lse - picked) / float(len(idx))


def nc_head(X, sig: Signature, Wc, bc, labels, mask=None):
    """(logits, mean cross-entropy) of the tangent-space classifier."""
    logits = nc_logits(X, sig, Wc, bc)
    return logits, cross_entropy(logits, labels, mask)
