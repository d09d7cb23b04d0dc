import numpy as np
import pytest

from qpseudo import DegenerateInputError, DimensionError, Signature, distance, exp_map, south_pole
from qpseudo import autodiff as ad
from qpseudo.geodesic import diff_exp, diff_log, parallel_transport
from qpseudo.manifold import membership_error, random_points, time_product
from qpseudo.qgcn import (
    BETA_RAW_UNIT,
    ModelConfig,
    aggregation_matrix,
    beta_from_raw,
    beta_to_raw,
    bias_translate,
    cross_entropy,
    fermi_dirac,
    init_features,
    layer_forward,
    LayerParams,
    link_loss,
    pairwise_distance,
    qnn_forward,
    reconstruction_loss,
    reconstruction_loss_from_distances,
    skip_combine,
    tangential_transform,
)

Q11 = Signature(1, 1, -1.0)
O = np.array([1.0, 0, 0])


def arc(theta):
    return np.array([np.cos(theta), np.sin(theta), 0.0])


class TestCurvatureParametrisation:
    def test_unit(self):
        assert float(beta_from_raw(BETA_RAW_UNIT)) == pytest.approx(-1.0)

    @pytest.mark.parametrize("beta", [-4.0, -1.0, -0.25, -1e-3])
    def test_inverse(self, beta):
        assert float(beta_from_raw(beta_to_raw(beta))) == pytest.approx(beta)


class TestInitFeatures:
    def test_on_manifold_unchanged(self, rng):
        np.testing.assert_allclose(init_features(O, Q11, 0.0, rng), O)

    def test_normalises(self, rng):
        np.testing.assert_allclose(init_features(np.array([2.0, 0, 0]), Q11, 0.0, rng), O)

    def test_zero_time_without_noise(self, rng):
        with pytest.raises(DegenerateInputError):
            init_features(np.array([0.0, 0, 1]), Q11, 0.0, rng)

    def test_noise_rescues_zero_time(self, rng):
        x = init_features(np.zeros((4, 3)), Q11, 0.02, rng)
        assert membership_error(x, Q11).max() < 1e-12

    def test_dimension(self, rng):
        with pytest.raises(DimensionError):
            init_features(np.zeros(4), Q11, 0.02, rng)


class TestTangentialTransform:
    def test_identity(self, rng):
        sig = Signature(2, 1, -1.0)
        h = random_points(sig, 10, rng)
        np.testing.assert_allclose(tangential_transform(np.eye(4), h, sig, sig), h, atol=1e-10)

    def test_doubling_doubles_arc(self):
        np.testing.assert_allclose(tangential_transform(2 * np.eye(3), arc(np.pi / 4), Q11, Q11),
                                   arc(np.pi / 2), atol=1e-15)

    def test_zero_weight_maps_to_pole(self, rng):
        h = random_points(Q11, 5, rng)
        np.testing.assert_allclose(tangential_transform(np.zeros((3, 3)), h, Q11, Q11),
                                   np.tile(O, (5, 1)))

    def test_shape_check(self):
        with pytest.raises(DimensionError):
            tangential_transform(np.eye(4), O, Q11, Q11)


class TestBiasTranslate:
    def test_zero_bias_both_branches(self, rng):
        h = random_points(Q11, 200, rng, space_scale=2.0)
        connected = time_product(O, h, Q11) < 1.0
        assert connected.any() and (~connected).any()
        np.testing.assert_allclose(bias_translate(h, np.zeros(3), Q11), h, atol=1e-9)

    def test_at_pole(self):
        b = np.array([0.0, 0.4, -0.3])
        np.testing.assert_allclose(bias_translate(O, b, Q11), exp_map(O, b, Q11), atol=1e-15)

    def test_at_antipode_of_pole(self):
        b = np.array([0.0, 0.4, -0.3])
        np.testing.assert_allclose(bias_translate(-O, b, Q11), -exp_map(O, b, Q11), atol=1e-15)

    def test_result_on_manifold(self, rng):
        sig = Signature(3, 2, -0.5)
        h = random_points(sig, 100, rng, space_scale=2.0)
        b = 0.5 * rng.standard_normal(sig.dim)
        assert membership_error(bias_translate(h, b, sig), sig).max() < 1e-8

    def test_matches_public_transport(self, rng):
        sig = Signature(2, 1, -1.0)
        h = random_points(sig, 50, rng)
        o = south_pole(sig)
        b = np.concatenate([[0.0], 0.3 * rng.standard_normal(3)])
        connected = time_product(o, h, sig) < 1.0
        expected = np.where(connected[:, None],
                            exp_map(h, parallel_transport(o, h, np.tile(b, (50, 1)), sig).vector, sig),
                            -exp_map(-h, parallel_transport(o, -h, np.tile(b, (50, 1)), sig).vector, sig))
        np.testing.assert_allclose(bias_translate(h, b, sig), expected, atol=1e-9)


def reference_layer(H, edges, W, b, sig_in, sig_out, act):
    """Straight-line composition of public operations, one node at a time."""
    n = len(H)
    o_in, o_out = south_pole(sig_in), south_pole(sig_out)
    mid = Signature(sig_out.s, sig_out.t, sig_in.beta)
    o_mid = south_pole(mid)
    logs = []
    for i in range(n):
        xi = W @ diff_log(H[i], o_in, sig_in)
        xi[0] = 0.0
        ht = diff_exp(xi, o_mid, mid)
        bb = b.copy()
        bb[0] = 0.0
        if time_product(o_mid, ht, mid) < -mid.beta:
            z = exp_map(ht, parallel_transport(o_mid, ht, bb, mid).vector, mid)
        else:
            z = -exp_map(-ht, parallel_transport(o_mid, -ht, bb, mid).vector, mid)
        logs.append(diff_log(z, o_mid, mid))
    out = []
    for i in range(n):
        nbrs = {i} | {v for u, v in edges if u == i} | {u for u, v in edges if v == i}
        u = act(sum(logs[j] for j in sorted(nbrs)))
        u[0] = 0.0
        out.append(diff_exp(u, o_out, sig_out))
    return np.array(out)


class TestLayer:
    def test_isolated_identity(self, rng):
        sig_in, sig_out = Signature(2, 1, -1.0), Signature(2, 1, -2.0)
        H = random_points(sig_in, 1, rng, space_scale=0.3)
        out = layer_forward(H, aggregation_matrix(1, np.zeros((0, 2))), {"W": np.eye(4), "b": np.zeros(4)},
                            sig_in, sig_out, "identity")
        np.testing.assert_allclose(diff_log(out, south_pole(sig_out), sig_out),
                                   diff_log(H, south_pole(sig_in), sig_in), atol=1e-12)

    def test_two_node_symmetry(self, rng):
        sig = Signature(2, 1, -1.0)
        h = random_points(sig, 1, rng)
        H = np.vstack([h, h])
        params = {"W": rng.standard_normal((4, 4)), "b": rng.standard_normal(4)}
        out = layer_forward(H, aggregation_matrix(2, np.array([[0, 1]])), params, sig, sig, "tanh")
        np.testing.assert_allclose(out[0], out[1])

    def test_star_matches_reference(self):
        rng = np.random.default_rng(7)
        sig = Signature(2, 1, -1.0)
        edges = np.array([[0, 1], [0, 2]])
        H = random_points(sig, 3, rng)
        W, b = rng.standard_normal((4, 4)), rng.standard_normal(4)
        out = layer_forward(H, aggregation_matrix(3, edges), {"W": W, "b": b}, sig, sig, "tanh")
        ref = reference_layer(H, edges.tolist(), W, b, sig, sig, np.tanh)
        np.testing.assert_allclose(out, ref, atol=1e-12)

    def test_mean_aggregation_rows_sum_to_one(self):
        A = aggregation_matrix(4, np.array([[0, 1], [1, 2], [1, 3]]), "mean")
        np.testing.assert_allclose(np.asarray(A.sum(axis=1)).ravel(), 1.0)
        S = aggregation_matrix(4, np.array([[0, 1], [1, 2], [1, 3]]), "sum")
        np.testing.assert_array_equal(S.toarray().diagonal(), 1.0)
        assert S[1].sum() == 4

    def test_qnn_single_identity_layer(self, rng):
        sig = Signature(3, 1, -1.0)
        x = random_points(sig, 6, rng, space_scale=0.5)
        out = qnn_forward(x, [LayerParams(np.eye(5), np.zeros(5), BETA_RAW_UNIT, "identity")], [sig, sig])
        np.testing.assert_allclose(out, x, atol=1e-10)


class TestSkip:
    def test_single(self, rng):
        h = random_points(Q11, 3, rng)
        assert skip_combine([h], [Q11]) is h

    def test_identical(self, rng):
        h = random_points(Q11, 3, rng, space_scale=0.5)
        np.testing.assert_allclose(skip_combine([h, h], [Q11, Q11]), h, atol=1e-12)

    def test_cancellation(self):
        xi = np.array([0.0, 0.5, 0.2])
        a, b = diff_exp(xi, O, Q11), diff_exp(-xi, O, Q11)
        np.testing.assert_allclose(skip_combine([a, b], [Q11, Q11]), O, atol=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            skip_combine([O, np.zeros(4)], [Q11, Signature(2, 1)])


class TestHeads:
    def test_fermi_dirac_at_radius(self):
        assert fermi_dirac(np.array(2.0)) == 0.5

    def test_fermi_dirac_limits(self):
        assert fermi_dirac(np.array(1e6)) == pytest.approx(0.0)
        assert fermi_dirac(np.array(0.0)) == pytest.approx(1.0 / (np.exp(-2.0) + 1.0))

    def test_fermi_dirac_bad_temperature(self):
        with pytest.raises(ValueError):
            fermi_dirac(np.array(1.0), temp=0.0)

    def test_uniform_softmax_gives_log2(self):
        D = np.full((2, 2), 1.3)
        pos = np.array([[1, 0]])
        neg = np.array([[False, False], [False, True]])
        assert reconstruction_loss_from_distances(D, pos, neg) == pytest.approx(np.log(2))

    def test_distant_negative_gives_zero(self):
        D = np.array([[0.0, 0.0, 1e4], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
        neg = np.zeros((3, 3), dtype=bool)
        neg[0, 2] = True
        assert reconstruction_loss_from_distances(D, np.array([[0, 1]]), neg) == pytest.approx(0.0, abs=1e-12)

    def test_path_graph_matches_termwise_softmax(self, rng):
        sig = Signature(2, 1, -1.0)
        X = random_points(sig, 4, rng)
        edges = [(0, 1), (1, 2), (2, 3)]
        pos = np.array(edges + [(v, u) for u, v in edges])
        adj = np.zeros((4, 4), dtype=bool)
        adj[pos[:, 0], pos[:, 1]] = True
        neg = ~adj & ~np.eye(4, dtype=bool)
        expected = 0.0
        for u, v in pos:
            d = [float(distance(X[u], X[w], sig)) for w in range(4)]
            denom = np.exp(-d[v]) + sum(np.exp(-d[w]) for w in range(4) if neg[u, w])
            expected += -np.log(np.exp(-d[v]) / denom)
        assert reconstruction_loss(X, sig, pos, neg) == pytest.approx(expected, rel=1e-12)

    def test_cross_entropy_uniform(self):
        assert cross_entropy(np.zeros((5, 4)), np.arange(5) % 4) == pytest.approx(np.log(4))

    def test_cross_entropy_bad_labels(self):
        with pytest.raises(ValueError):
            cross_entropy(np.zeros((2, 3)), np.array([0, 3]))

    def test_link_loss_symmetric(self):
        assert link_loss(np.array([2.0]), np.array([2.0])) == pytest.approx(np.log(2))


def test_pairwise_distance_matches_pointwise(rng):
    sig = Signature(2, 2, -0.7)
    X = random_points(sig, 5, rng)
    D = pairwise_distance(X, sig)
    for i in range(5):
        for j in range(5):
            if i != j:
                assert D[i, j] == pytest.approx(float(distance(X[i], X[j], sig)), rel=1e-12)


def test_model_config_validation():
    with pytest.raises(ValueError):
        ModelConfig(signatures=[(7, 3)])
    with pytest.raises(ValueError):
        ModelConfig(aggregation="max")
    with pytest.raises(ValueError):
        ModelConfig(signatures=[(7, 3), (7, 3), (3, 3)])
    assert ModelConfig().layers == 2


def test_taped_layer_matches_untaped(rng):
    sig = Signature(2, 1, -1.0)
    H = random_points(sig, 4, rng)
    params = {"W": rng.standard_normal((4, 4)), "b": rng.standard_normal(4)}
    agg = aggregation_matrix(4, np.array([[0, 1], [1, 2], [2, 3]]))
    plain = layer_forward(H, agg, params, sig, sig, "tanh")
    val, _ = ad.value_and_grad(lambda W: ad.sum(layer_forward(H, agg, {"W": W, "b": params["b"]},
                                                              sig, sig, "tanh")), params["W"])
    assert val == pytest.approx(plain.sum(), rel=1e-14)
