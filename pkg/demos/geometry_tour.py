"""A short walk around the pseudo-hyperboloid Q_beta^{s,t}.

Run with ``python3 demos/geometry_tour.py``.  Prints what each operation does
on a tiny manifold so the numbers can be checked by hand.
"""

import numpy as np

from qpseudo import (
    Signature,
    classify,
    diff_exp,
    diff_log,
    distance,
    exp_map,
    is_g_connected,
    log_map,
    parallel_transport,
    south_pole,
    time_product,
)
from qpseudo.manifold import random_points

sig = Signature(s=1, t=1, beta=-1.0)  # two time coordinates, one space coordinate
o = south_pole(sig)
print(f"manifold {sig}; south pole o = {o}")

# Tangent vectors at o come in three flavours, depending on the sign of <xi, xi>_t.
for xi in ([0, np.pi / 2, 0], [0, 0, 1.0], [0, 1.0, 1.0]):
    xi = np.array(xi)
    print(f"xi = {xi} is {classify(xi, sig).value:10s} -> exp_o(xi) = {np.round(exp_map(o, xi, sig), 4)}")

# Log inverts exp whenever the two points are joined by a geodesic.
y = np.array([0.0, 1.0, 0.0])
print(f"\nlog_o({y}) = {log_map(o, y, sig)}, d(o, y) = {distance(o, y, sig):.6f} (pi/2)")

# The antipode -o is not reachable by a geodesic, yet its distance is finite:
# the broken path goes through the antipodal point and costs pi * sqrt|beta|.
print(f"g-connected(o, -o)? {bool(is_g_connected(o, -o, sig))}; d(o, -o) = {distance(o, -o, sig):.6f}")

# Parallel transport keeps <zeta, zeta>_t, and falls back to -y when needed.
zeta = np.array([0.0, 0.3, -0.7])
moved = parallel_transport(o, -o, zeta, sig)
print(f"transport to -o: {moved.vector} (antipodal route used: {bool(moved.antipodal)})")

# The sphere x Euclidean chart reaches every point off the antipodal slice,
# including the many points that o cannot reach with a geodesic.
rng = np.random.default_rng(0)
pts = random_points(Signature(2, 1, -1.0), 2000, rng, space_scale=2.0)
big = Signature(2, 1, -1.0)
ref = south_pole(big)
far = time_product(ref, pts, big) >= 1.0
back = diff_exp(diff_log(pts, ref, big), ref, big)
print(f"\n{far.sum()} of 2000 random points are not g-connected to o; "
      f"chart round-trip error on all of them: {np.abs(back - pts).max():.1e}")
