"""Exception hierarchy shared across the package."""


class SSLabError(Exception):
    """Base class for all errors raised by this package."""


class EncodingError(SSLabError, ValueError):
    """A label is not a member of the class order."""


class ShapeError(SSLabError, ValueError):
    """Matrix dimensions are incompatible with the operation."""


class SingularMatrixError(SSLabError):
    """A linear system is singular to working precision."""


class MissingClassError(SSLabError, ValueError):
    """A trainer that needs both classes saw only one."""


class ConnectivityError(SSLabError):
    """A graph component contains no labeled vertex (or a vertex is isolated)."""


class BoundaryError(SSLabError):
    """A decision boundary cannot be expressed as a 2-d line."""


class NumericalError(SSLabError):
    """A non-finite value appeared during an iterative computation."""


class DataFormatError(SSLabError, ValueError):
    """A data or model file violates its documented format."""
