"""Penalized smoothing of curves on a regular grid with decorrelated difference penalties."""
from .errors import (
    CurveFileError,
    CurveTooShortError,
    DegenerateDenominatorError,
    GridSmoothError,
    InfeasibleWidthError,
    InvalidParameterError,
    NonUniqueStencilError,
    UnsupportedOrderError,
)
from .penalty import PenaltyMatrix, PenaltySpec, aggregate, blend, blended_penalty, penalty_from_stencil
from .selection import eta_heuristic, gcv_score, oracle_select, select_alpha, select_sequential, select_simultaneous
from .smoother import Smoother, smooth, smooth_sequential, smooth_simultaneous, smooth_single
from .stencils import (
    Stencil,
    StencilFamily,
    apply,
    binomial_stencil,
    canonical_family,
    solve_family,
    solve_stencil,
)

__version__ = "0.1.0"
