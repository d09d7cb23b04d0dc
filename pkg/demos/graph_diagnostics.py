"""How tree-like is a graph?  Delta-hyperbolicity and discrete curvature side by side.

Run with ``python3 demos/graph_diagnostics.py``.  Trees score delta = 0 and
non-positive curvature; cycles push both upwards.
"""

import numpy as np

from qpseudo.analysis import delta_hyperbolicity, sectional_curvature
from qpseudo.graph import balanced_tree, cycle_augmented_tree, cycle_graph

graphs = {
    "binary tree (63)": balanced_tree(2, 5),
    "tree + 9 cross edges (95)": cycle_augmented_tree(95),
    "cycle C30": cycle_graph(30),
}

print(f"{'graph':28s} {'max delta':>9s} {'mean delta':>10s} {'curvature':>9s}")
for name, g in graphs.items():
    rng = np.random.default_rng(0)
    hyp = delta_hyperbolicity(g, "sampled", n_quadruples=20_000, rng=rng)
    mean_delta = float(np.sum(hyp.histogram.left * hyp.histogram.mass))
    curv = sectional_curvature(g, n_samples=10_000, rng=rng)
    print(f"{name:28s} {hyp.max_delta:9.1f} {mean_delta:10.3f} {curv.mean:+9.3f}")
