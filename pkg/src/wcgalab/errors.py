"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class ResolutionError(ValueError):
    """The grid is too coarse for the requested truncation."""


class ShapeError(ValueError):
    """Two grid functions live on incompatible grids."""


class UndefinedFunctionalError(ValueError):
    """The norming functional of the zero element was requested."""


class StagnationError(RuntimeError):
    """Every dictionary atom has zero functional value against the residual."""


class CalibrationError(RuntimeError):
    """A calibrated constant produced an invalid argument downstream."""


class FitError(ValueError):
    """A scaling fit was attempted on degenerate data."""


class SchemaError(ValueError):
    """A serialized document has an unsupported schema or malformed content."""


class ProjectionError(RuntimeError):
    """The Chebyshev projection ran out of inner iterations before certifying.

    ``gap`` carries the last value of the optimality measure
    ``max_j |F_res(phi_j)|``.
    """

    def __init__(self, message, gap, coefficients=None):
        super().__init__(message)
        self.gap = gap
        self.coefficients = coefficients
