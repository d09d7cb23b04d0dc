"""Pseudo-hyperboloid geometry and pseudo-Riemannian graph convolutional networks.

The package is organised bottom-up:

* :mod:`qpseudo.manifold` and :mod:`qpseudo.geodesic`: points, tangent
  vectors, geodesics, exp/log maps, transport and distances on Q_beta^{s,t};
* :mod:`qpseudo.autodiff`: a small reverse-mode tape used for training;
* :mod:`qpseudo.qgcn` and :mod:`qpseudo.models`: Q-GCN layers and heads;
* :mod:`qpseudo.trainer`: optimisation loops, splits and checkpoints;
* :mod:`qpseudo.graph`, :mod:`qpseudo.metrics`, :mod:`qpseudo.analysis`:
  graph I/O, evaluation metrics and dataset diagnostics;
* :mod:`qpseudo.cli`: the ``qpseudo`` command.
"""

from .errors import (
    AntipodeError,
    DegenerateInputError,
    DimensionError,
    DisconnectedError,
    DivergenceError,
    GraphFormatError,
    InvalidCurvatureError,
    PreconditionError,
    QPseudoError,
    SignatureMismatchError,
)
from .geodesic import (
    GeodesicClass,
    ProductPoint,
    classify,
    diff_exp,
    diff_log,
    distance,
    exp_map,
    geodesic,
    log_map,
    parallel_transport,
    product_exp,
    product_log,
    psi,
    psi_inv,
    psi_unit,
    psi_unit_inv,
    tangential_lift,
)
from .manifold import (
    Signature,
    antipode,
    is_g_connected,
    project_to_manifold,
    project_to_tangent,
    rescale_curvature,
    south_pole,
    time_product,
)

__version__ = "0.1.0"

__all__ = [
    "AntipodeError", "DegenerateInputError", "DimensionError", "DisconnectedError",
    "DivergenceError", "GraphFormatError", "InvalidCurvatureError", "PreconditionError",
    "QPseudoError", "SignatureMismatchError",
    "GeodesicClass", "ProductPoint", "classify", "diff_exp", "diff_log", "distance", "exp_map",
    "geodesic", "log_map", "parallel_transport", "product_exp", "product_log", "psi", "psi_inv",
    "psi_unit", "psi_unit_inv", "tangential_lift",
    "Signature", "antipode", "is_g_connected", "project_to_manifold", "project_to_tangent",
    "rescale_curvature", "south_pole", "time_product",
]
