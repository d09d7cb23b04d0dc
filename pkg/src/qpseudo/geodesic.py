"""Geodesics, exp/log maps, transport and distances on Q_beta^{s,t}.

Two families of tools live here:

* the intrinsic ones (``geodesic``, ``exp_map``, ``log_map``,
  ``parallel_transport``, ``distance``), whose log map only exists inside the
  normal neighbourhood ``<x, y>_t < |beta|``;
* the diffeomorphic ones (``diff_log``, ``diff_exp``), which route through the
  product of a radius-sqrt|beta| sphere and a Euclidean space and are defined
  everywhere except on the spherical antipodal slice of the reference point.

The three geodesic branches (spherical, null, hyperbolic) are evaluated
through entire functions of ``lam = <xi, xi>_t / |beta|`` so that taped
evaluation stays finite and differentiable across the null boundary.
"""

from __future__ import annotations

import enum
from typing import Callable, NamedTuple

import numpy as np

from . import autodiff as ad
from .errors import AntipodeError, DegenerateInputError, DisconnectedError, PreconditionError
from .manifold import Signature, _check_dim, project_to_tangent, split, time_product

TOL_NULL = 1e-12
TOL_ANTIPODE = 1e-12
_SERIES = 1e-6


class GeodesicClass(enum.Enum):
    TIME_LIKE = "time-like"   # <xi, xi>_t < 0, circular branch
    NULL = "null"             # affine branch
    SPACE_LIKE = "space-like"  # <xi, xi>_t > 0, hyperbolic branch


class ProductPoint(NamedTuple):
    """A point of S^t (radius sqrt|beta|) x R^s."""

    u: object
    v: object


class Transported(NamedTuple):
    vector: object
    antipodal: np.ndarray  # True where the transport went to -y instead of y


def _col(a):
    """Append a trailing unit axis (for broadcasting per-vector scalars)."""
    return ad.reshape(a, ad.value(a).shape + (1,))


def _abs_beta(sig: Signature):
    return -sig.beta


# ----------------------------------------------------------------------------
# entire functions of lam, covering cos/cosh, sin(x)/x, (1 - cos x)/x^2 branches

def _branches(lam, pos: Callable, neg: Callable, series: Callable):
    lv = ad.value(lam)
    is_pos = lv > _SERIES
    is_neg = lv < -_SERIES
    lam_p = ad.where(is_pos, lam, 1.0)
    lam_n = ad.where(is_neg, -lam, 1.0)
    lam_s = ad.where(is_pos | is_neg, 0.0, lam)
    return ad.where(is_pos, pos(lam_p), ad.where(is_neg, neg(lam_n), series(lam_s)))


def _cos_like(lam):
    return _branches(lam, lambda l: ad.cosh(ad.sqrt(l)), lambda l: ad.cos(ad.sqrt(l)),
                     lambda l: 1.0 + l / 2.0 + l * l / 24.0)


def _sinc_like(lam):
    def pos(l):
        r = ad.sqrt(l)
        return ad.sinh(r) / r

    def neg(l):
        r = ad.sqrt(l)
        return ad.sin(r) / r

    return _branches(lam, pos, neg, lambda l: 1.0 + l / 6.0 + l * l / 120.0)


def _cosm1_like(lam):
    def pos(l):
        return (ad.cosh(ad.sqrt(l)) - 1.0) / l

    def neg(l):
        return (1.0 - ad.cos(ad.sqrt(l))) / l

    return _branches(lam, pos, neg, lambda l: 0.5 + l / 24.0 + l * l / 720.0)


def _lam(xi, sig: Signature):
    """Signed <xi, xi>_t / |beta|, zeroed inside the null tolerance."""
    q = time_product(xi, xi, sig)
    null = np.abs(ad.value(q)) <= TOL_NULL
    return ad.where(null, 0.0, q / _abs_beta(sig))


def classify(xi, sig: Signature):
    """GeodesicClass of a tangent vector (or an array of them for batches)."""
    q = np.asarray(ad.value(time_product(xi, xi, sig)))
    classes = np.where(np.abs(q) <= TOL_NULL, GeodesicClass.NULL,
                       np.where(q > 0, GeodesicClass.SPACE_LIKE, GeodesicClass.TIME_LIKE))
    return classes.item() if classes.ndim == 0 else classes


# ----------------------------------------------------------------------------
# intrinsic tools

def geodesic(x, xi, tau, sig: Signature):
    """gamma(tau) starting at x with velocity xi (no re-projection)."""
    lam = _lam(xi, sig) * (tau * tau)
    return _col(_cos_like(lam)) * x + _col(tau * _sinc_like(lam)) * xi


def exp_map(x, xi, sig: Signature):
    """exp_x(xi) = gamma(1), followed by the stability projection."""
    return _phi(geodesic(x, xi, 1.0, sig), sig)


def _phi(x, sig: Signature):
    """Non-raising double projection used inside taped computations."""
    tb, sb = split(x, sig)
    t2 = ad.sum(tb * tb, axis=-1, keepdims=True)
    s2 = ad.sum(sb * sb, axis=-1, keepdims=True)
    return ad.concatenate([tb * ad.sqrt((s2 - sig.beta) / t2), sb], axis=-1)


def _log_coef(c):
    """theta / sin(theta) or theta / sinh(theta) for c = cos/cosh(theta), c > -1."""
    cv = ad.value(c)
    near = np.abs(cv - 1.0) < _SERIES
    hyp = (cv > 1.0) & ~near
    circ = (cv < 1.0) & ~near
    c_h = ad.where(hyp, c, 2.0)
    c_c = ad.where(circ, c, 0.0)
    u = ad.where(near, 1.0 - c, 0.0)
    h = ad.arcosh(c_h) / ad.sqrt(c_h * c_h - 1.0)
    k = ad.arccos(c_c) / ad.sqrt(1.0 - c_c * c_c)
    s = 1.0 + u / 3.0 + 2.0 * u * u / 15.0
    return ad.where(hyp, h, ad.where(circ, k, s))


def _log_unchecked(x, y, sig: Signature):
    c = time_product(x, y, sig) / sig.beta
    xi = _col(_log_coef(c)) * (y - _col(c) * x)
    return project_to_tangent(x, xi, sig)


def log_map(x, y, sig: Signature):
    """log_x(y) inside the normal neighbourhood.

    Raises :class:`DisconnectedError` (carrying ``<x, y>_t``) when any pair
    satisfies ``<x, y>_t >= |beta|``.
    """
    ip = ad.value(time_product(x, y, sig))
    bad = ip >= -float(ad.value(sig.beta))
    if np.any(bad):
        raise DisconnectedError(
            f"no geodesic joins the points: <x,y>_t = {ip[bad] if ip.ndim else ip} >= |beta|", ip)
    return _log_unchecked(x, y, sig)


def _transport_along(x, xi, zeta, sig: Signature):
    lam = _lam(xi, sig)
    coef = time_product(zeta, xi, sig) / _abs_beta(sig)
    return zeta + _col(coef) * (_col(_sinc_like(lam)) * x + _col(_cosm1_like(lam)) * xi)


def parallel_transport(x, y, zeta, sig: Signature) -> Transported:
    """Transport zeta from T_x to T_y along the geodesic log_x(y).

    When x and y are not g-connected the vector is transported to -y instead
    (whose tangent space coincides with T_y); ``antipodal`` records where.
    """
    connected = ad.value(time_product(x, y, sig)) < -float(ad.value(sig.beta))
    target = y if np.all(connected) else ad.where(np.asarray(connected)[..., None], y, -y)
    xi = _log_unchecked(x, target, sig)
    out = _transport_along(x, xi, zeta, sig)
    return Transported(project_to_tangent(target, out, sig), ~connected)


def distance(x, y, sig: Signature):
    """Broken-geodesic distance.

    sqrt|beta| * arc(c) on g-connected pairs (c = <x,y>_t / beta, arccos or
    arcosh by sign) and pi sqrt|beta| + d(x, -y) otherwise.
    """
    c = time_product(x, y, sig) / sig.beta
    cv = ad.value(c)
    connected = cv > -1.0
    circ = ad.arccos(ad.where(cv <= 1.0, c, 1.0))
    hyp = ad.arcosh(ad.where(cv > 1.0, c, 1.0))
    broken = np.pi + ad.arcosh(ad.where(connected, 1.0, -c))
    arc = ad.where(connected, ad.where(cv > 1.0, hyp, circ), broken)
    return sig.radius * arc


# ----------------------------------------------------------------------------
# the spherical projection and its unit-sphere variant

def _time_norm(tb):
    t2 = ad.sum(tb * tb, axis=-1, keepdims=True)
    if np.any(ad.value(t2) == 0.0):
        raise DegenerateInputError("time block is zero")
    return ad.sqrt(t2)


def psi(x, sig: Signature) -> ProductPoint:
    """x -> (sqrt|beta| t/|t|, s) on S_{-beta}^t x R^s."""
    _check_dim(x, sig)
    tb, sb = split(x, sig)
    return ProductPoint(sig.radius * tb / _time_norm(tb), sb)


def psi_inv(z: ProductPoint, sig: Signature):
    """(u, v) -> (sqrt(|beta| + |v|^2) / sqrt|beta| * u, v)."""
    u, v = z
    v2 = ad.sum(v * v, axis=-1, keepdims=True)
    return ad.concatenate([u * (ad.sqrt(v2 - sig.beta) / sig.radius), v], axis=-1)


def psi_unit(x, sig: Signature) -> ProductPoint:
    """x -> (t/|t|, s/sqrt|beta|) on the unit sphere times R^s."""
    _check_dim(x, sig)
    tb, sb = split(x, sig)
    return ProductPoint(tb / _time_norm(tb), sb / sig.radius)


def psi_unit_inv(z: ProductPoint, sig: Signature):
    u, v = z
    v2 = ad.sum(v * v, axis=-1, keepdims=True)
    return ad.concatenate([u * ad.sqrt(1.0 + v2), v], axis=-1) * sig.radius


# ----------------------------------------------------------------------------
# round sphere of radius R on the time block (Euclidean inner product)

def sphere_log(u, y, R, check: bool = True):
    """Log map on the radius-R sphere; raises AntipodeError at exact antipodes."""
    w = ad.sum(u * y, axis=-1, keepdims=True) / (R * R)
    p = y - w * u
    p2 = ad.sum(p * p, axis=-1, keepdims=True) / (R * R)  # sin^2(phi)
    p2v, wv = ad.value(p2), ad.value(w)
    if check and np.any((p2v <= TOL_ANTIPODE ** 2) & (wv < 0)):
        raise AntipodeError("spherical log requested at the antipode of the base point")
    use_series = (p2v < 1e-10) & (wv > 0)
    s_safe = ad.sqrt(ad.where(use_series | (p2v == 0.0), 1.0, p2))
    big = ad.arctan2(s_safe, w) / s_safe
    p2s = ad.where(use_series, p2, 0.0)
    series = 1.0 + p2s / 6.0 + 3.0 * p2s * p2s / 40.0
    coef = ad.where(use_series, series, big)
    return coef * p


def sphere_exp(u, xi, R):
    """exp_u(xi) = cos(|xi|/R) u + R sin(|xi|/R) xi/|xi| on the radius-R sphere."""
    lam = -ad.sum(xi * xi, axis=-1) / (R * R)
    return _col(_cos_like(lam)) * u + _col(_sinc_like(lam)) * xi


def product_log(z: ProductPoint, base: ProductPoint, R, check: bool = True):
    """Concatenated (spherical, Euclidean) log of z at base."""
    return sphere_log(base.u, z.u, R, check), z.v - base.v


def product_exp(xi, base: ProductPoint, R) -> ProductPoint:
    xi_u, xi_v = xi
    return ProductPoint(sphere_exp(base.u, xi_u, R), base.v + xi_v)


# ----------------------------------------------------------------------------
# diffeomorphic log/exp at references with zero space block

def _check_ref(ref, sig: Signature) -> None:
    _check_dim(ref, sig)
    rv = np.asarray(ad.value(ref))
    if np.any(rv[..., sig.t + 1:] != 0.0):
        raise PreconditionError("diffeomorphic log/exp need a reference with zero space block")


def diff_log(x, ref, sig: Signature, check: bool = True):
    """Tangent coordinates at ``ref`` of x via the sphere x Euclidean product.

    Defined for every x except those whose time direction is antipodal to
    the reference's.  The output is tangent at ``ref`` in the
    pseudo-hyperboloid sense.
    """
    _check_ref(ref, sig)
    xi_u, xi_v = product_log(psi(x, sig), psi(ref, sig), sig.radius, check)
    return ad.concatenate([xi_u, xi_v], axis=-1)


def diff_exp(xi, ref, sig: Signature):
    """Inverse of :func:`diff_log`; ``xi`` is projected onto T_ref first."""
    _check_ref(ref, sig)
    _check_dim(xi, sig)
    base = psi(ref, sig)
    xi_u, xi_v = split(xi, sig)
    R = sig.radius
    xi_u = xi_u - _col(ad.sum(xi_u * base.u, axis=-1) / (R * R)) * base.u
    return psi_inv(product_exp((xi_u, xi_v), base, R), sig)


def tangential_lift(f: Callable, sig_in: Signature, sig_out: Signature | None = None,
                    ref_in=None, ref_out=None) -> Callable:
    """f -> diff_exp o f o diff_log at the reference points (south poles by default)."""
    from .manifold import south_pole

    sig_out = sig_in if sig_out is None else sig_out
    ref_in = south_pole(sig_in) if ref_in is None else ref_in
    ref_out = south_pole(sig_out) if ref_out is None else ref_out

    def lifted(y):
        return diff_exp(f(diff_log(y, ref_in, sig_in)), ref_out, sig_out)

    return lifted
