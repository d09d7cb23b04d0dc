import math

import numpy as np
import pytest

from qpseudo.analysis import (
    REFERENCE_MAX_DELTA,
    curvature_value,
    delta_hyperbolicity,
    four_point_delta,
    sectional_curvature,
    write_histogram_csv,
)
from qpseudo.graph import Graph, balanced_tree, complete_graph, cycle_graph, path_graph, random_tree, star_graph


class TestDelta:
    @pytest.mark.parametrize("graph", [balanced_tree(2, 4), star_graph(4), path_graph(12),
                                       random_tree(40, np.random.default_rng(3))])
    def test_trees_are_zero(self, graph):
        assert delta_hyperbolicity(graph, "exact").max_delta == 0.0

    def test_four_point_by_hand(self):
        D = cycle_graph(4).hop_distances()
        # sums: d01+d23 = 2, d02+d13 = 4, d03+d12 = 2 -> (4 - 2) / 2
        assert four_point_delta(D, 0, 1, 2, 3) == 1.0

    @pytest.mark.parametrize("n, expected", [(8, 2.0), (12, 3.0)])
    def test_cycles(self, n, expected):
        g = cycle_graph(n)
        exact = delta_hyperbolicity(g, "exact")
        full = delta_hyperbolicity(g, "sampled", n_quadruples=math.comb(n, 4))
        assert exact.max_delta == full.max_delta == expected
        np.testing.assert_array_equal(exact.histogram.mass, full.histogram.mass)

    def test_histogram_is_distribution(self):
        rep = delta_hyperbolicity(cycle_graph(20), "sampled", n_quadruples=500,
                                  rng=np.random.default_rng(0))
        assert rep.n_quadruples == 500
        assert rep.histogram.mass.sum() == pytest.approx(1.0)
        assert np.all(np.diff(rep.histogram.left) == 0.5)

    def test_reference_values(self):
        rep = delta_hyperbolicity(balanced_tree(2, 3), "sampled", n_quadruples=50, dataset="Cora")
        assert rep.reference_max_delta == REFERENCE_MAX_DELTA["cora"] == 11.0
        assert delta_hyperbolicity(balanced_tree(2, 3), dataset="unknown").reference_max_delta is None

    def test_exact_size_limit(self):
        with pytest.raises(ValueError):
            delta_hyperbolicity(path_graph(201), "exact")

    def test_uses_largest_component(self):
        g = Graph(10, np.array([[0, 1], [1, 2], [2, 3], [3, 0], [5, 6]]))
        assert delta_hyperbolicity(g, "exact").max_delta == 1.0

    def test_histogram_csv(self, tmp_path):
        rep = delta_hyperbolicity(cycle_graph(8), "exact")
        write_histogram_csv(rep.histogram, tmp_path / "h.csv")
        lines = (tmp_path / "h.csv").read_text().splitlines()
        assert lines[0] == "bin_left,bin_right,mass"
        assert len(lines) == 1 + len(rep.histogram.mass)


class TestCurvature:
    def test_tree_nonpositive(self):
        rep = sectional_curvature(balanced_tree(2, 5), exhaustive=True)
        assert rep.values.max() <= 0 and rep.mean < 0

    def test_path_is_flat(self):
        rep = sectional_curvature(path_graph(10), exhaustive=True)
        np.testing.assert_allclose(rep.values, 0.0)

    def test_cycle_positive(self):
        assert sectional_curvature(cycle_graph(30), n_samples=5000, rng=np.random.default_rng(0)).mean > 0

    def test_value_by_hand(self):
        D = star_graph(3).hop_distances()
        # m=0, b=1, c=2, a=3: (1 + 1 - (4 + 4) / 2) / 2 = -1
        assert curvature_value(D, 0, 1, 2, 3) == -1.0

    def test_complete_graph_has_no_triples(self):
        with pytest.raises(ValueError):
            sectional_curvature(complete_graph(5))

    def test_sampling_reproducible(self):
        a = sectional_curvature(cycle_graph(12), 200, np.random.default_rng(5))
        b = sectional_curvature(cycle_graph(12), 200, np.random.default_rng(5))
        np.testing.assert_array_equal(a.values, b.values)


def test_relabeling_invariance():
    rng = np.random.default_rng(11)
    from qpseudo.graph import cycle_augmented_tree

    g = cycle_augmented_tree(40, seed=3)
    h = g.permuted(rng.permutation(g.n_nodes))
    a, b = delta_hyperbolicity(g, "exact"), delta_hyperbolicity(h, "exact")
    np.testing.assert_array_equal(a.histogram.mass, b.histogram.mass)
    ca, cb = sectional_curvature(g, exhaustive=True), sectional_curvature(h, exhaustive=True)
    np.testing.assert_allclose(np.sort(ca.values), np.sort(cb.values))


def test_sampled_curvature_within_two_sigma():
    from qpseudo.graph import cycle_augmented_tree

    g = cycle_augmented_tree(60, seed=4)
    exact = sectional_curvature(g, exhaustive=True)
    est = sectional_curvature(g, n_samples=10_000, rng=np.random.default_rng(0))
    sigma = exact.std / np.sqrt(10_000)
    assert abs(est.mean - exact.mean) <= 2 * sigma
