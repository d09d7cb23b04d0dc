"""Minimal reverse-mode automatic differentiation over dense float64 arrays.

Every function in this module is polymorphic: called with plain numpy arrays
(or Python scalars) it evaluates eagerly and returns an ``ndarray``; called
with at least one :class:`Var` it records a node on that variable's
:class:`Tape` and returns a new :class:`Var`.  Geometry code is written once
against these functions, so the taped and untaped paths run the same
floating-point operations.

Example::

    tape = Tape()
    x = tape.var(3.0)
    y = x * x
    tape.backward(y)
    x.grad  # 6.0
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Tape", "Var", "value", "is_var",
    "add", "sub", "mul", "div", "neg", "power", "matmul", "spmm",
    "sinh", "cosh", "sin", "cos", "arccos", "arcosh", "arctan2", "sqrt", "abs",
    "clip", "softplus", "tanh", "relu", "sigmoid", "elu", "exp", "log",
    "sum", "mean", "inner", "concatenate", "getitem", "where", "reshape",
    "transpose", "value_and_grad", "grad_check", "GradCheckReport",
]


class Tape:
    """Ordered record of primitive operations; parents always precede children."""

    def __init__(self) -> None:
        self.nodes: list[Var] = []

    def var(self, data) -> "Var":
        """Register a leaf input on this tape."""
        return Var(np.array(data, dtype=np.float64), self, ())

    def _record(self, data, parents) -> "Var":
        return Var(np.asarray(data, dtype=np.float64), self, parents)

    def backward(self, output: "Var") -> None:
        """Fill ``.grad`` of every node on the tape with d(output)/d(node)."""
        if not isinstance(output, Var) or output.tape is not self:
            raise ValueError("output must be a Var recorded on this tape")
        if output.value.size != 1:
            raise ValueError(f"backward needs a scalar output, got shape {output.shape}")
        grads: list[np.ndarray | None] = [None] * len(self.nodes)
        grads[output.index] = np.ones_like(output.value)
        for node in reversed(self.nodes[: output.index + 1]):
            g = grads[node.index]
            if g is None:
                continue
            for parent, vjp in node.parents:
                contrib = vjp(g)
                if grads[parent.index] is None:
                    grads[parent.index] = np.array(contrib, dtype=np.float64)
                else:
                    grads[parent.index] = grads[parent.index] + contrib
        for node, g in zip(self.nodes, grads):
            node.grad = np.zeros_like(node.value) if g is None else g


class Var:
    """A taped array value.  ``grad`` is populated by :meth:`Tape.backward`."""

    __array_priority__ = 1000
    __array_ufunc__ = None

    def __init__(self, data: np.ndarray, tape: Tape, parents) -> None:
        self.value = data
        self.tape = tape
        self.parents = parents
        self.grad: np.ndarray | None = None
        self.index = len(tape.nodes)
        tape.nodes.append(self)

    shape = property(lambda self: self.value.shape)
    ndim = property(lambda self: self.value.ndim)
    size = property(lambda self: self.value.size)
    T = property(lambda self: transpose(self))

    def __len__(self) -> int:
        return len(self.value)

    def __repr__(self) -> str:
        return f"Var({self.value!r})"

    def __add__(self, o): return add(self, o)
    def __radd__(self, o): return add(o, self)
    def __sub__(self, o): return sub(self, o)
    def __rsub__(self, o): return sub(o, self)
    def __mul__(self, o): return mul(self, o)
    def __rmul__(self, o): return mul(o, self)
    def __truediv__(self, o): return div(self, o)
    def __rtruediv__(self, o): return div(o, self)
    def __neg__(self): return neg(self)
    def __pow__(self, p): return power(self, p)
    def __matmul__(self, o): return matmul(self, o)
    def __rmatmul__(self, o): return matmul(o, self)
    def __getitem__(self, idx): return getitem(self, idx)


def is_var(x) -> bool:
    return isinstance(x, Var)


def value(x) -> np.ndarray:
    """The plain array behind ``x`` (identity for non-Vars)."""
    return x.value if isinstance(x, Var) else np.asarray(x, dtype=np.float64)


def _tape_of(*args) -> Tape | None:
    tape = None
    for a in args:
        if isinstance(a, Var):
            if tape is None:
                tape = a.tape
            elif a.tape is not tape:
                raise ValueError("operands live on different tapes")
    return tape


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def _make(out, operands: Sequence, vjps: Sequence[Callable]):
    tape = _tape_of(*operands)
    if tape is None:
        return out
    parents = tuple((a, f) for a, f in zip(operands, vjps) if isinstance(a, Var))
    return tape._record(out, parents)


def _unary(x, out, dfn):
    """``dfn(g)`` maps the output cotangent to the input cotangent."""
    return _make(out, (x,), (dfn,))


# ----------------------------------------------------------------------------
# arithmetic

def add(a, b):
    av, bv = value(a), value(b)
    return _make(av + bv, (a, b), (lambda g: _unbroadcast(g, av.shape),
                                   lambda g: _unbroadcast(g, bv.shape)))


def sub(a, b):
    av, bv = value(a), value(b)
    return _make(av - bv, (a, b), (lambda g: _unbroadcast(g, av.shape),
                                   lambda g: _unbroadcast(-g, bv.shape)))


def mul(a, b):
    av, bv = value(a), value(b)
    return _make(av * bv, (a, b), (lambda g: _unbroadcast(g * bv, av.shape),
                                   lambda g: _unbroadcast(g * av, bv.shape)))


def div(a, b):
    av, bv = value(a), value(b)
    out = av / bv
    return _make(out, (a, b), (lambda g: _unbroadcast(g / bv, av.shape),
                               lambda g: _unbroadcast(-g * out / bv, bv.shape)))


def neg(a):
    return _unary(a, -value(a), lambda g: -g)


def power(a, p: float):
    """``a ** p`` for a constant exponent."""
    av = value(a)
    return _unary(a, av ** p, lambda g: g * p * av ** (p - 1))


def matmul(a, b):
    av, bv = value(a), value(b)
    if av.ndim != 2 or bv.ndim not in (1, 2):
        raise ValueError(f"matmul expects 2-D @ 1-D/2-D, got {av.shape} @ {bv.shape}")
    if bv.ndim == 1:
        return _make(av @ bv, (a, b), (lambda g: np.outer(g, bv), lambda g: av.T @ g))
    return _make(av @ bv, (a, b), (lambda g: g @ bv.T, lambda g: av.T @ g))


def spmm(A, x):
    """Constant (possibly scipy-sparse) matrix times a taped dense matrix."""
    xv = value(x)
    out = np.asarray(A @ xv)
    AT = A.T
    return _unary(x, out, lambda g: np.asarray(AT @ g))


# ----------------------------------------------------------------------------
# elementwise

def sinh(x):
    xv = value(x)
    return _unary(x, np.sinh(xv), lambda g: g * np.cosh(xv))


def cosh(x):
    xv = value(x)
    return _unary(x, np.cosh(xv), lambda g: g * np.sinh(xv))


def sin(x):
    xv = value(x)
    return _unary(x, np.sin(xv), lambda g: g * np.cos(xv))


def cos(x):
    xv = value(x)
    return _unary(x, np.cos(xv), lambda g: -g * np.sin(xv))


def arccos(x):
    """Arccos of the argument clamped to [-1, 1]; zero gradient at saturation."""
    xv = value(x)
    inside = np.abs(xv) < 1.0
    safe = np.where(inside, xv, 0.0)
    return _unary(x, np.arccos(np.clip(xv, -1.0, 1.0)),
                  lambda g: np.where(inside, -g / np.sqrt(1.0 - safe * safe), 0.0))


def arcosh(x):
    """Arcosh of the argument clamped to [1, inf); zero gradient at saturation."""
    xv = value(x)
    inside = xv > 1.0
    safe = np.where(inside, xv, 2.0)
    return _unary(x, np.arccosh(np.maximum(xv, 1.0)),
                  lambda g: np.where(inside, g / np.sqrt(safe * safe - 1.0), 0.0))


def arctan2(y, x):
    yv, xv = value(y), value(x)
    r2 = yv * yv + xv * xv
    r2 = np.where(r2 > 0, r2, 1.0)
    return _make(np.arctan2(yv, xv), (y, x),
                 (lambda g: _unbroadcast(g * xv / r2, yv.shape),
                  lambda g: _unbroadcast(-g * yv / r2, xv.shape)))


def sqrt(x):
    xv = value(x)
    out = np.sqrt(xv)
    return _unary(x, out, lambda g: g * 0.5 / out)


def abs(x):  # noqa: A001 - mirrors numpy naming
    xv = value(x)
    return _unary(x, np.abs(xv), lambda g: g * np.sign(xv))


def clip(x, lo, hi):
    xv = value(x)
    inside = (xv >= lo) & (xv <= hi)
    return _unary(x, np.clip(xv, lo, hi), lambda g: np.where(inside, g, 0.0))


def exp(x):
    out = np.exp(value(x))
    return _unary(x, out, lambda g: g * out)


def log(x):
    xv = value(x)
    return _unary(x, np.log(xv), lambda g: g / xv)


def softplus(x):
    xv = value(x)
    out = np.logaddexp(0.0, xv)
    return _unary(x, out, lambda g: g / (1.0 + np.exp(-xv)))


def sigmoid(x):
    xv = value(x)
    out = 0.5 * (1.0 + np.tanh(0.5 * xv))
    return _unary(x, out, lambda g: g * out * (1.0 - out))


def tanh(x):
    out = np.tanh(value(x))
    return _unary(x, out, lambda g: g * (1.0 - out * out))


def relu(x):
    xv = value(x)
    return _unary(x, np.maximum(xv, 0.0), lambda g: np.where(xv > 0, g, 0.0))


def elu(x):
    xv = value(x)
    neg_part = np.expm1(np.minimum(xv, 0.0))
    return _unary(x, np.where(xv > 0, xv, neg_part),
                  lambda g: np.where(xv > 0, g, g * (neg_part + 1.0)))


# ----------------------------------------------------------------------------
# reductions and structure

def sum(x, axis=None, keepdims: bool = False):  # noqa: A001
    xv = value(x)
    out = xv.sum(axis=axis, keepdims=keepdims)

    def vjp(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return np.broadcast_to(g, xv.shape).copy()

    return _unary(x, out, vjp)


def mean(x, axis=None, keepdims: bool = False):
    n = value(x).size if axis is None else value(x).shape[axis]
    return div(sum(x, axis=axis, keepdims=keepdims), float(n))


def inner(a, b, weights=None):
    """Sum over the last axis of ``a * b`` (optionally weighted per coordinate)."""
    prod = mul(a, b)
    if weights is not None:
        prod = mul(prod, weights)
    return sum(prod, axis=-1)


def concatenate(parts: Sequence, axis: int = -1):
    vals = [value(p) for p in parts]
    out = np.concatenate(vals, axis=axis)
    bounds = np.cumsum([v.shape[axis] for v in vals])[:-1]

    def piece(i):
        return lambda g: np.split(g, bounds, axis=axis)[i]

    return _make(out, parts, [piece(i) for i in range(len(parts))])


def getitem(x, idx):
    xv = value(x)

    def vjp(g):
        out = np.zeros_like(xv)
        np.add.at(out, idx, g)
        return out

    return _unary(x, xv[idx], vjp)


def reshape(x, shape):
    xv = value(x)
    return _unary(x, xv.reshape(shape), lambda g: g.reshape(xv.shape))


def transpose(x):
    return _unary(x, value(x).T, lambda g: g.T)


def where(cond, a, b):
    """Branch selection by a non-differentiated predicate."""
    cond = np.asarray(value(cond), dtype=bool)
    av, bv = value(a), value(b)
    return _make(np.where(cond, av, bv), (a, b),
                 (lambda g: _unbroadcast(np.where(cond, g, 0.0), av.shape),
                  lambda g: _unbroadcast(np.where(cond, 0.0, g), bv.shape)))


# ----------------------------------------------------------------------------
# drivers

def value_and_grad(fn: Callable, *arrays):
    """Evaluate scalar ``fn(*vars)`` on a fresh tape; return (value, [grads])."""
    tape = Tape()
    inputs = [tape.var(a) for a in arrays]
    out = fn(*inputs)
    if not isinstance(out, Var):
        return float(np.asarray(out)), [np.zeros_like(np.asarray(a, dtype=float)) for a in arrays]
    tape.backward(out)
    return float(out.value), [v.grad for v in inputs]


@dataclass
class GradCheckReport:
    passed: bool
    max_abs_err: float
    max_rel_err: float
    worst: tuple | None = None
    analytic: list = field(default_factory=list)
    numeric: list = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.passed


def grad_check(fn: Callable, inputs: Sequence, step: float = 1e-5,
               rel_tol: float = 1e-4, abs_floor: float = 1e-8) -> GradCheckReport:
    """Compare reverse-mode gradients of scalar ``fn`` with central differences.

    A coordinate fails when ``|ad - fd| > max(rel_tol * max(|ad|, |fd|), abs_floor)``.
    """
    arrays = [np.array(a, dtype=np.float64) for a in inputs]
    _, analytic = value_and_grad(fn, *arrays)
    numeric = []
    passed = True
    worst, max_abs, max_rel = None, 0.0, 0.0
    for k, a in enumerate(arrays):
        fd = np.zeros_like(a)
        flat = a.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            f_plus = float(np.asarray(fn(*arrays)))
            flat[i] = orig - step
            f_minus = float(np.asarray(fn(*arrays)))
            flat[i] = orig
            fd.reshape(-1)[i] = (f_plus - f_minus) / (2.0 * step)
        numeric.append(fd)
        ad = np.asarray(analytic[k]).reshape(-1)
        nd = fd.reshape(-1)
        err = np.abs(ad - nd)
        scale = np.maximum(np.abs(ad), np.abs(nd))
        bad = err > np.maximum(rel_tol * scale, abs_floor)
        if not np.all(np.isfinite(ad)):
            bad |= ~np.isfinite(ad)
        if bad.any():
            passed = False
        if err.size:
            i = int(np.argmax(err))
            if err[i] > max_abs:
                max_abs = float(err[i])
                worst = (k, i)
            rel = err / np.maximum(scale, abs_floor)
            max_rel = max(max_rel, float(rel.max()))
    return GradCheckReport(passed, max_abs, max_rel, worst, analytic, numeric)
