"""Exception types raised across the package."""


class GridSmoothError(ValueError):
    """Base class for all package errors."""


class CurveTooShortError(GridSmoothError):
    """The curve (or grid) has fewer points than the stencil support."""


class UnsupportedOrderError(GridSmoothError):
    """Requested derivative order has no canonical decorrelated stencil."""


class InfeasibleWidthError(GridSmoothError):
    """The stencil constraint system has only the trivial solution."""


class NonUniqueStencilError(GridSmoothError):
    """The stencil constraint system leaves more than one free direction."""

    def __init__(self, order, half_width, dimension):
        self.order = order
        self.half_width = half_width
        self.dimension = dimension
        super().__init__(
            f"order-{order} stencil at half-width {half_width} is not unique: "
            f"solution space has dimension {dimension}"
        )


class DegenerateDenominatorError(GridSmoothError):
    """GCV denominator d - tr(S) vanishes (no smoothing applied)."""


class InvalidParameterError(GridSmoothError):
    """A tuning parameter is outside its admissible range."""


class CurveFileError(GridSmoothError):
    """A curve CSV file could not be parsed."""
