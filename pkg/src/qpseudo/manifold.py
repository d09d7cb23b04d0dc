"""The pseudo-hyperboloid Q_beta^{s,t} and its ambient scalar product.

Points are plain arrays of shape ``(..., s + t + 1)``: the first ``t + 1``
coordinates form the time block, the remaining ``s`` the space block.  The
scalar product is negative on the time block and positive on the space block,
and the manifold is the level set ``<x, x>_t = beta`` with ``beta < 0``.

All functions accept batches along leading axes and work on taped
:class:`~qpseudo.autodiff.Var` inputs as well as numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from . import autodiff as ad
from .errors import (
    DegenerateInputError,
    DimensionError,
    InvalidCurvatureError,
    SignatureMismatchError,
)

TOL_MANIFOLD = 1e-9
TOL_TANGENT = 1e-9


@dataclass(frozen=True)
class Signature:
    """Space dimension ``s``, time index ``t`` and curvature ``beta``.

    The ambient vector has ``t + 1`` time coordinates and ``s`` space
    coordinates.  ``beta`` may be a taped scalar while training.
    """

    s: int
    t: int
    beta: Any = -1.0

    def __post_init__(self):
        if int(self.s) != self.s or int(self.t) != self.t or self.s < 0 or self.t < 0:
            raise ValueError(f"s and t must be non-negative integers, got s={self.s}, t={self.t}")
        if self.s + self.t < 1:
            raise ValueError("s + t must be at least 1")
        if not float(ad.value(self.beta)) < 0:
            raise InvalidCurvatureError(f"beta must be strictly negative, got {float(ad.value(self.beta))}")

    @property
    def dim(self) -> int:
        """Ambient dimension s + t + 1."""
        return self.s + self.t + 1

    @property
    def manifold_dim(self) -> int:
        return self.s + self.t

    @property
    def n_time(self) -> int:
        return self.t + 1

    @property
    def radius(self):
        """sqrt(|beta|), taped when beta is."""
        return ad.sqrt(-self.beta) if ad.is_var(self.beta) else float(np.sqrt(-self.beta))

    @property
    def signs(self) -> np.ndarray:
        return np.concatenate([-np.ones(self.t + 1), np.ones(self.s)])

    def with_beta(self, beta) -> "Signature":
        return Signature(self.s, self.t, beta)

    def same_shape(self, other: "Signature") -> bool:
        return self.s == other.s and self.t == other.t

    def __str__(self) -> str:
        return f"Q^({self.s},{self.t})_{float(ad.value(self.beta)):g}"


def _check_dim(x, sig: Signature) -> None:
    n = ad.value(x).shape[-1] if ad.value(x).ndim else 1
    if n != sig.dim:
        raise DimensionError(f"expected vectors of length {sig.dim} for {sig}, got {n}")


def time_product(x, y, sig: Signature):
    """<x, y>_t = -sum_{i<=t} x_i y_i + sum_{j>t} x_j y_j over the last axis."""
    _check_dim(x, sig)
    _check_dim(y, sig)
    return ad.inner(x, y, sig.signs)


def time_norm_sq(x, sig: Signature):
    return time_product(x, x, sig)


def split(x, sig: Signature):
    """(time block, space block) views along the last axis."""
    k = sig.t + 1
    return ad.getitem(x, (..., slice(0, k))), ad.getitem(x, (..., slice(k, None)))


def south_pole(sig: Signature) -> np.ndarray:
    """o = (sqrt|beta|, 0, ..., 0)."""
    o = np.zeros(sig.dim)
    o[0] = np.sqrt(-float(ad.value(sig.beta)))
    return o


def project_to_manifold(x, sig: Signature):
    """Double projection psi^{-1}(psi(x)): rescale the time block onto the level set.

    Leaves manifold points unchanged (to rounding).  Raises
    :class:`DegenerateInputError` when a time block is exactly zero.
    """
    _check_dim(x, sig)
    tb, sb = split(x, sig)
    t2 = ad.sum(tb * tb, axis=-1, keepdims=True)
    if np.any(ad.value(t2) == 0.0):
        raise DegenerateInputError("time block is zero; perturb the input before projecting")
    s2 = ad.sum(sb * sb, axis=-1, keepdims=True)
    scale = ad.sqrt((s2 - sig.beta) / t2)
    return ad.concatenate([tb * scale, sb], axis=-1)


def project_to_tangent(x, z, sig: Signature):
    """Pi_x(z) = z - <z, x>_t / <x, x>_t * x."""
    coef = time_product(z, x, sig) / time_product(x, x, sig)
    return z - ad.reshape(coef, ad.value(coef).shape + (1,)) * x


def is_g_connected(x, y, sig: Signature, sig_y: Signature | None = None):
    """True where a single geodesic joins x and y, i.e. <x, y>_t < |beta|."""
    if sig_y is not None and (not sig.same_shape(sig_y)
                              or float(ad.value(sig.beta)) != float(ad.value(sig_y.beta))):
        raise SignatureMismatchError(f"{sig} vs {sig_y}")
    ip = ad.value(time_product(x, y, sig))
    return ip < -float(ad.value(sig.beta))


def antipode(x):
    return -x


def rescale_curvature(x, sig: Signature, beta_new: float) -> np.ndarray:
    """Map a point of Q_beta to Q_beta' by the factor sqrt(beta' / beta)."""
    if not beta_new < 0:
        raise InvalidCurvatureError(f"beta_new must be strictly negative, got {beta_new}")
    return np.sqrt(beta_new / float(ad.value(sig.beta))) * np.asarray(x, dtype=float)


def membership_error(x, sig: Signature) -> np.ndarray:
    """|<x, x>_t - beta| per point."""
    return np.abs(ad.value(time_norm_sq(x, sig)) - float(ad.value(sig.beta)))


def tangency_error(x, xi, sig: Signature) -> np.ndarray:
    return np.abs(ad.value(time_product(x, xi, sig)))


def random_points(sig: Signature, n: int, rng: np.random.Generator,
                  space_scale: float = 1.0) -> np.ndarray:
    """Sample points by drawing a sphere direction and a Gaussian space block."""
    R = np.sqrt(-float(sig.beta))
    u = rng.standard_normal((n, sig.t + 1))
    u *= R / np.linalg.norm(u, axis=1, keepdims=True)
    v = space_scale * rng.standard_normal((n, sig.s))
    scale = np.sqrt(-float(sig.beta) + np.sum(v * v, axis=1, keepdims=True)) / R
    return np.concatenate([u * scale, v], axis=1)


def random_tangent(x: np.ndarray, sig: Signature, rng: np.random.Generator,
                   scale: float = 1.0) -> np.ndarray:
    z = scale * rng.standard_normal(np.shape(x))
    return np.asarray(project_to_tangent(x, z, sig))
