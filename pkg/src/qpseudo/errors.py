"""Exception types raised by the geometry, model and I/O layers."""


class QPseudoError(Exception):
    """Base class for all library errors."""


class DimensionError(QPseudoError, ValueError):
    """Vector length does not match the signature's ambient dimension."""


class InvalidCurvatureError(QPseudoError, ValueError):
    """Curvature parameter is not strictly negative."""


class DegenerateInputError(QPseudoError, ValueError):
    """The time block of an input vector is zero, so it has no projection."""


class SignatureMismatchError(QPseudoError, ValueError):
    """Two points belong to pseudo-hyperboloids with different signatures."""


class DisconnectedError(QPseudoError, ValueError):
    """The logarithmic map was asked for a pair that no geodesic joins.

    ``inner`` holds the offending scalar product(s).
    """

    def __init__(self, message: str, inner=None):
        super().__init__(message)
        self.inner = inner


class AntipodeError(QPseudoError, ValueError):
    """Spherical log requested between antipodal points (direction is not unique)."""


class PreconditionError(QPseudoError, ValueError):
    """An operation's documented precondition does not hold."""


class DivergenceError(QPseudoError, RuntimeError):
    """Training produced a non-finite loss."""


class GraphFormatError(QPseudoError, ValueError):
    """Malformed graph, feature or label file."""
