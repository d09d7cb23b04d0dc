import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qpseudo import (
    DegenerateInputError,
    DimensionError,
    InvalidCurvatureError,
    Signature,
    antipode,
    is_g_connected,
    project_to_manifold,
    project_to_tangent,
    rescale_curvature,
    south_pole,
    time_product,
)
from qpseudo.manifold import membership_error, random_points, random_tangent, tangency_error

Q11 = Signature(1, 1, -1.0)


class TestTimeProduct:
    def test_pole_with_itself(self):
        assert time_product(np.array([1.0, 0, 0]), np.array([1.0, 0, 0]), Q11) == -1.0

    def test_mixed_signs(self):
        x = np.array([1.0, 1, 1])
        assert time_product(x, x, Q11) == -1.0

    def test_disjoint_supports(self):
        assert time_product(np.array([0.0, 1, 0]), np.array([0.0, 0, 1]), Q11) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            time_product(np.zeros(3), np.zeros(4), Q11)


class TestSignature:
    def test_rejects_nonnegative_beta(self):
        with pytest.raises(InvalidCurvatureError):
            Signature(1, 1, 0.0)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            Signature(0, 0, -1.0)

    def test_dims(self):
        sig = Signature(7, 3, -1.0)
        assert (sig.dim, sig.manifold_dim, sig.n_time) == (11, 10, 4)


class TestProjection:
    def test_idempotent_on_manifold(self):
        sig = Signature(1, 0, -1.0)
        x = np.array([np.sqrt(2.0), 1.0])
        np.testing.assert_allclose(project_to_manifold(x, sig), x, atol=1e-15)

    def test_already_on_manifold(self):
        x = np.array([1.0, 1.0, 1.0])
        np.testing.assert_allclose(project_to_manifold(x, Q11), x, atol=1e-15)

    def test_normalises_time_block(self):
        np.testing.assert_allclose(project_to_manifold(np.array([2.0, 0, 0]), Q11), [1, 0, 0])

    def test_zero_time_block(self):
        with pytest.raises(DegenerateInputError):
            project_to_manifold(np.array([0.0, 0, 1]), Q11)

    @pytest.mark.parametrize("z, expected", [
        ([0.0, 1, 0], [0.0, 1, 0]),
        ([1.0, 0, 0], [0.0, 0, 0]),
        ([1.0, 1, 1], [0.0, 1, 1]),
    ])
    def test_tangent_projection(self, z, expected):
        np.testing.assert_allclose(project_to_tangent(np.array([1.0, 0, 0]), np.array(z), Q11),
                                   expected, atol=1e-15)


class TestConnectivity:
    def test_orthogonal_pair(self):
        assert is_g_connected(np.array([1.0, 0, 0]), np.array([0.0, 1, 0]), Q11)

    def test_antipode_is_boundary(self):
        x = np.array([1.0, 0, 0])
        assert not is_g_connected(x, -x, Q11)

    def test_self(self):
        x = np.array([1.0, 1, 1])
        assert is_g_connected(x, x, Q11)

    def test_antipode(self):
        np.testing.assert_array_equal(antipode(np.array([1.0, 0, 0])), [-1.0, 0, 0])


class TestRescale:
    def test_scales_by_root_ratio(self):
        np.testing.assert_allclose(rescale_curvature(np.array([1.0, 0, 0]), Q11, -4.0), [2, 0, 0])

    def test_same_beta_is_identity(self, rng):
        x = random_points(Q11, 5, rng)
        np.testing.assert_allclose(rescale_curvature(x, Q11, -1.0), x)

    def test_rejects_positive(self):
        with pytest.raises(InvalidCurvatureError):
            rescale_curvature(np.array([1.0, 0, 0]), Q11, 0.5)


signatures = st.tuples(st.integers(0, 4), st.integers(0, 3)).filter(lambda p: sum(p) >= 1)
betas = st.sampled_from([-4.0, -1.0, -0.25, -0.01])


@given(signatures, betas, st.integers(0, 2**31))
def test_random_points_and_tangents_are_valid(st_pair, beta, seed):
    sig = Signature(*st_pair, beta)
    rng = np.random.default_rng(seed)
    x = random_points(sig, 20, rng)
    xi = random_tangent(x, sig, rng)
    assert membership_error(x, sig).max() <= 1e-9 * max(1.0, np.abs(x).max() ** 2)
    assert tangency_error(x, xi, sig).max() <= 1e-9 * max(1.0, np.abs(x).max() * np.abs(xi).max())


@given(signatures, betas, st.integers(0, 2**31))
def test_connectivity_is_symmetric_and_antipode_covers(st_pair, beta, seed):
    sig = Signature(*st_pair, beta)
    rng = np.random.default_rng(seed)
    x, y = random_points(sig, 50, rng), random_points(sig, 50, rng)
    np.testing.assert_array_equal(is_g_connected(x, y, sig), is_g_connected(y, x, sig))
    assert np.all(is_g_connected(x, y, sig) | is_g_connected(-x, y, sig))


def test_south_pole_on_manifold():
    sig = Signature(3, 2, -2.5)
    o = south_pole(sig)
    assert o[0] == pytest.approx(np.sqrt(2.5)) and not o[1:].any()
    assert membership_error(o, sig) <= 1e-12
