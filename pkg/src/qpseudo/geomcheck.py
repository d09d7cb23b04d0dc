"""Randomised invariant suite for the geometry layer.

Each check samples points on Q_beta^{s,t}, evaluates one identity and
records the worst violation against a fixed tolerance.  The suite is what the
``geomcheck`` CLI command runs.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass

import numpy as np

from .geodesic import diff_exp, diff_log, distance, exp_map, log_map, parallel_transport, psi
from .manifold import (
    Signature,
    is_g_connected,
    membership_error,
    random_points,
    random_tangent,
    rescale_curvature,
    south_pole,
    tangency_error,
    time_product,
)

DEFAULT_SIGNATURES = ((2, 1), (1, 2), (5, 5), (3, 0), (0, 3))
DEFAULT_BETAS = (-4.0, -1.0, -0.25)
# connected pairs are sampled with c = <x,y>_t / beta at least this far above -1
CONNECTED_MARGIN = 1e-3
ANTIPODE_MARGIN = 1e-6


@dataclass
class CheckResult:
    name: str
    signature: str
    max_error: float
    tolerance: float
    n: int

    @property
    def passed(self) -> bool:
        return bool(self.max_error <= self.tolerance)

    def as_dict(self) -> dict:
        return {**asdict(self), "passed": self.passed}


def _connected_pairs(sig: Signature, n: int, rng: np.random.Generator):
    xs, ys = [], []
    got = 0
    while got < n:
        x = random_points(sig, n, rng)
        y = random_points(sig, n, rng)
        c = time_product(x, y, sig) / sig.beta
        keep = c > -1.0 + CONNECTED_MARGIN
        xs.append(x[keep])
        ys.append(y[keep])
        got += int(keep.sum())
    return np.concatenate(xs)[:n], np.concatenate(ys)[:n]


def _bounded_tangent(x, sig, rng):
    """Tangent vectors with Euclidean norm uniform in [0, sqrt|beta|]."""
    xi = random_tangent(x, sig, rng)
    norm = np.linalg.norm(xi, axis=1, keepdims=True)
    return xi / np.where(norm > 0, norm, 1.0) * np.sqrt(-sig.beta) * rng.random((len(x), 1))


def _pairs_off_boundary(sig: Signature, n: int, rng: np.random.Generator):
    """Random pairs with c = <x,y>_t / beta at least the margin away from -1."""
    xs, ys = [], []
    got = 0
    while got < n:
        x = random_points(sig, n, rng)
        y = random_points(sig, n, rng)
        c = time_product(x, y, sig) / sig.beta
        keep = np.abs(c + 1.0) > CONNECTED_MARGIN
        xs.append(x[keep])
        ys.append(y[keep])
        got += int(keep.sum())
    return np.concatenate(xs)[:n], np.concatenate(ys)[:n]


def check_membership(sig, n, rng):
    x = random_points(sig, n, rng)
    xi = _bounded_tangent(x, sig, rng)
    err = max(membership_error(x, sig).max(), membership_error(exp_map(x, xi, sig), sig).max())
    return CheckResult("membership", str(sig), float(err), 1e-9, n)


def check_exp_log(sig, n, rng):
    x, y = _connected_pairs(sig, n, rng)
    back = exp_map(x, log_map(x, y, sig), sig)
    return CheckResult("exp_log_roundtrip", str(sig), float(np.abs(back - y).max()), 1e-8, n)


def check_tangency(sig, n, rng):
    x, y = _connected_pairs(sig, n, rng)
    err = tangency_error(x, log_map(x, y, sig), sig).max()
    return CheckResult("log_tangency", str(sig), float(err), 1e-9, n)


def check_diff_roundtrip(sig, n, rng):
    o = south_pole(sig)
    y = random_points(sig, n, rng)
    u = psi(y, sig).u
    y = y[u[:, 0] / np.sqrt(-sig.beta) > -1.0 + ANTIPODE_MARGIN]
    xi = diff_log(y, o, sig)
    err = max(float(np.abs(diff_exp(xi, o, sig) - y).max()), float(np.abs(xi[:, 0]).max()))
    return CheckResult("diff_roundtrip", str(sig), err, 1e-8, len(y))


def check_coverage(sig, n, rng):
    x = random_points(sig, n, rng)
    y = random_points(sig, n, rng)
    ok = is_g_connected(x, y, sig) | is_g_connected(-x, y, sig)
    return CheckResult("antipodal_coverage", str(sig), float((~ok).sum()), 0.0, n)


def check_transport(sig, n, rng):
    x, y = _pairs_off_boundary(sig, n, rng)
    zeta = _bounded_tangent(x, sig, rng)
    out = parallel_transport(x, y, zeta, sig).vector
    err = np.abs(time_product(out, out, sig) - time_product(zeta, zeta, sig)).max()
    return CheckResult("transport_norm", str(sig), float(err), 1e-8, n)


def check_rescale(sig, n, rng, beta_new: float | None = None):
    beta_new = 0.5 * sig.beta if beta_new is None else beta_new
    x = random_points(sig, n, rng)
    y = random_points(sig, n, rng)
    sig2 = sig.with_beta(beta_new)
    lhs = distance(rescale_curvature(x, sig, beta_new), rescale_curvature(y, sig, beta_new), sig2)
    rhs = np.sqrt(beta_new / sig.beta) * distance(x, y, sig)
    return CheckResult("curvature_rescale", str(sig), float(np.abs(lhs - rhs).max()), 1e-8, n)


def hyperbolic_slice_points(sig: Signature, n: int, rng: np.random.Generator) -> np.ndarray:
    """Points of Q^{s,1} with second time coordinate 0 and first positive."""
    if sig.t != 1:
        raise ValueError("hyperbolic slice needs t = 1")
    v = rng.standard_normal((n, sig.s))
    x0 = np.sqrt(-sig.beta + np.sum(v * v, axis=1, keepdims=True))
    return np.concatenate([x0, np.zeros((n, 1)), v], axis=1)


def check_hyperbolic_degeneration(s, beta, n, rng):
    sig = Signature(s, 1, beta)
    x = hyperbolic_slice_points(sig, n, rng)
    y = hyperbolic_slice_points(sig, n, rng)
    lorentz = -x[:, 0] * y[:, 0] + np.sum(x[:, 2:] * y[:, 2:], axis=1)
    ref = np.sqrt(-beta) * np.arccosh(np.maximum(lorentz / beta, 1.0))
    return CheckResult("hyperbolic_degeneration", str(sig),
                       float(np.abs(distance(x, y, sig) - ref).max()), 1e-8, n)


def check_sphere_degeneration(t, beta, n, rng):
    sig = Signature(0, t, beta)
    x = random_points(sig, n, rng)
    y = random_points(sig, n, rng)
    R2 = -beta
    ref = np.sqrt(R2) * np.arccos(np.clip(np.sum(x * y, axis=1) / R2, -1.0, 1.0))
    return CheckResult("sphere_degeneration", str(sig),
                       float(np.abs(distance(x, y, sig) - ref).max()), 1e-8, n)


SUITE = (check_membership, check_exp_log, check_tangency, check_diff_roundtrip,
         check_coverage, check_transport, check_rescale)


def run_suite(signatures=DEFAULT_SIGNATURES, betas=DEFAULT_BETAS, n_samples: int = 10_000,
              n_coverage: int = 100_000, seed: int = 0) -> dict:
    """Run every check on every (signature, beta); returns a JSON-ready report."""
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    results: list[CheckResult] = []
    for s, t in signatures:
        for beta in betas:
            sig = Signature(s, t, float(beta))
            for check in SUITE:
                n = n_coverage if check is check_coverage else n_samples
                results.append(check(sig, n, rng))
    for s, t in signatures:
        for beta in betas:
            if t == 1:
                results.append(check_hyperbolic_degeneration(s, float(beta), n_samples, rng))
            if s == 0:
                results.append(check_sphere_degeneration(t, float(beta), n_samples, rng))
    return {
        "passed": all(r.passed for r in results),
        "checks": [r.as_dict() for r in results],
        "seconds": time.perf_counter() - start,
    }
