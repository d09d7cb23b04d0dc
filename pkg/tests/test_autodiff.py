import numpy as np
import pytest
import scipy.sparse as sp

from qpseudo import Signature, distance, time_product
from qpseudo import autodiff as ad

Q11 = Signature(1, 1, -1.0)


def test_square_value_and_gradient():
    val, (g,) = ad.value_and_grad(lambda x: x * x, np.array(3.0))
    assert val == 9.0 and g == 6.0


def test_clamp_value():
    assert ad.clip(np.array(2.0), -1.0, 1.0) == 1.0


def test_clamp_gradient_zero_outside():
    _, (g,) = ad.value_and_grad(lambda x: ad.clip(x, -1.0, 1.0), np.array(2.0))
    assert g == 0.0


def test_time_product_gradient():
    x = np.array([1.0, 1.0, 1.0])
    _, (g,) = ad.value_and_grad(lambda v: time_product(v, v, Q11), x)
    np.testing.assert_array_equal(g, [-2.0, -2.0, 2.0])


def test_taped_distance_matches_untaped_bitwise():
    x, y = np.array([1.0, 0, 0]), np.array([0.0, 1, 0])
    val, _ = ad.value_and_grad(lambda a, b: distance(a, b, Q11), x, y)
    assert val == float(distance(x, y, Q11)) == np.pi / 2


def test_gradient_accumulates_over_reuse():
    _, (g,) = ad.value_and_grad(lambda x: x * x * x + x, np.array(2.0))
    assert g == pytest.approx(13.0)


def test_broadcast_gradient_sums():
    a = np.array([1.0, 2.0, 3.0])
    b = np.array(2.0)
    _, (ga, gb) = ad.value_and_grad(lambda x, y: ad.sum(x * y), a, b)
    np.testing.assert_array_equal(ga, [2.0, 2.0, 2.0])
    assert gb == 6.0


def test_constant_function_gives_zero_gradient():
    val, (g,) = ad.value_and_grad(lambda x: 5.0, np.ones(3))
    assert val == 5.0 and not g.any()


def test_determinism():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((4, 3))

    def f(x):
        return ad.sum(ad.tanh(x @ ad.transpose(x)) ** 2)

    v1, (g1,) = ad.value_and_grad(f, a)
    v2, (g2,) = ad.value_and_grad(f, a)
    assert v1 == v2 and np.array_equal(g1, g2)


UNARY = {
    "sinh": (ad.sinh, lambda r: r.standard_normal(5)),
    "cosh": (ad.cosh, lambda r: r.standard_normal(5)),
    "sin": (ad.sin, lambda r: r.standard_normal(5)),
    "cos": (ad.cos, lambda r: r.standard_normal(5)),
    "arccos": (ad.arccos, lambda r: r.uniform(-0.9, 0.9, 5)),
    "arcosh": (ad.arcosh, lambda r: r.uniform(1.1, 4.0, 5)),
    "sqrt": (ad.sqrt, lambda r: r.uniform(0.2, 3.0, 5)),
    "abs": (ad.abs, lambda r: r.uniform(0.2, 3.0, 5) * r.choice([-1, 1], 5)),
    "exp": (ad.exp, lambda r: r.standard_normal(5)),
    "log": (ad.log, lambda r: r.uniform(0.2, 3.0, 5)),
    "softplus": (ad.softplus, lambda r: 5 * r.standard_normal(5)),
    "sigmoid": (ad.sigmoid, lambda r: 5 * r.standard_normal(5)),
    "tanh": (ad.tanh, lambda r: r.standard_normal(5)),
    "relu": (ad.relu, lambda r: r.uniform(0.1, 1, 5) * r.choice([-1, 1], 5)),
    "elu": (ad.elu, lambda r: r.uniform(0.1, 1, 5) * r.choice([-1, 1], 5)),
    "power": (lambda x: ad.power(x, 2.5), lambda r: r.uniform(0.2, 3.0, 5)),
}


@pytest.mark.parametrize("name", sorted(UNARY))
def test_unary_gradients(name):
    fn, sample = UNARY[name]
    x = sample(np.random.default_rng(3))
    assert ad.grad_check(lambda v: ad.sum(fn(v) * np.arange(1.0, 6.0)), [x])


def test_binary_and_structural_gradients():
    rng = np.random.default_rng(5)
    a, b = rng.standard_normal((3, 4)), rng.uniform(0.5, 2.0, (3, 4))
    A = sp.random(3, 3, density=0.6, random_state=1, format="csr")

    def f(x, y):
        z = ad.concatenate([x / y, x - y], axis=1)
        w = ad.where(ad.value(x) > 0, x * y, -x)
        t = ad.arctan2(x, y) + ad.reshape(ad.getitem(z, (slice(None), slice(0, 4))), (3, 4))
        return ad.sum(ad.spmm(A, t) ** 2) + ad.mean(w) + ad.sum(ad.inner(x, y))

    assert ad.grad_check(f, [a, b])


def test_grad_check_detects_wrong_derivative():
    def bad_square(x):
        xv = ad.value(x)
        return ad._unary(x, xv * xv, lambda g: g * xv)  # missing factor of 2

    report = ad.grad_check(lambda x: ad.sum(bad_square(x)), [np.array([1.0, 2.0])])
    assert not report.passed
    assert report.max_rel_err > 0.1


def test_grad_check_catches_mutated_geometry(monkeypatch):
    def arccos_wrong(x):
        xv = ad.value(x)
        return ad._unary(x, np.arccos(xv), lambda g: g / np.sqrt(1 - xv * xv))  # sign flipped

    r = np.sqrt(1.09)
    x = np.array([1.0, 0.0, 0.0])
    y = np.array([r * np.cos(0.7), r * np.sin(0.7), 0.3])
    assert ad.grad_check(lambda a, b: distance(a, b, Q11), [x, y])
    monkeypatch.setattr(ad, "arccos", arccos_wrong)
    assert not ad.grad_check(lambda a, b: distance(a, b, Q11), [x, y])
