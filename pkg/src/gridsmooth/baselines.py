"""Comparison smoothers: penalized Fourier and B-spline bases, Gaussian kernel.

All of them are linear smoothers on the unit grid ``t = (1..d)/d``.
"""
from functools import cached_property

import numpy as np
from scipy.interpolate import BSpline

from .errors import GridSmoothError, InvalidParameterError
from .datagen import unit_grid

BASIS_KINDS = ("fourier", "bspline")
DEFAULT_N_BASIS = 25
SPLINE_DEGREE = 3
_GAUSS_POINTS = 7


def fourier_basis(d, n_basis, penalty_order=2):
    """Design matrix and diagonal roughness Gram matrix of a Fourier basis.

    Columns: ``1, sqrt(2) cos(2 pi k t), sqrt(2) sin(2 pi k t)`` for
    ``k = 1..(n_basis - 1) // 2`` (orthonormal in L2[0, 1]); an even
    ``n_basis`` adds one more cosine. The Gram matrix of the
    ``penalty_order``-th derivative is exactly ``diag((2 pi k)^(2m))``.
    """
    if n_basis < 1:
        raise InvalidParameterError("n_basis must be positive")
    t = unit_grid(d)
    cols = [np.ones(d)]
    freqs = [0]
    k = 1
    while len(cols) < n_basis:
        cols.append(np.sqrt(2.0) * np.cos(2 * np.pi * k * t))
        freqs.append(k)
        if len(cols) < n_basis:
            cols.append(np.sqrt(2.0) * np.sin(2 * np.pi * k * t))
            freqs.append(k)
        k += 1
    design = np.column_stack(cols)
    omega = np.diag((2 * np.pi * np.asarray(freqs, float)) ** (2 * penalty_order))
    return design, omega


def bspline_knots(d, n_basis, degree=SPLINE_DEGREE):
    """Clamped knot vector with equispaced interior knots on ``[1/d, 1]``."""
    n_inner = n_basis - degree + 1
    if n_inner < 2:
        raise InvalidParameterError(
            f"need n_basis >= {degree + 1} for degree-{degree} splines"
        )
    t = unit_grid(d)
    inner = np.linspace(t[0], t[-1], n_inner)
    return np.concatenate([np.repeat(inner[0], degree), inner, np.repeat(inner[-1], degree)])


def bspline_basis(d, n_basis, penalty_order=2, degree=SPLINE_DEGREE):
    """Design matrix and derivative Gram matrix of a clamped B-spline basis.

    The Gram matrix ``int B^(m)(u) B^(m)(u)' du`` is integrated with
    7-point Gauss-Legendre quadrature on every knot span.
    """
    knots = bspline_knots(d, n_basis, degree)
    design = BSpline.design_matrix(unit_grid(d), knots, degree).toarray()
    omega = np.zeros((n_basis, n_basis))
    if penalty_order > degree:
        return design, omega
    nodes, weights = np.polynomial.legendre.leggauss(_GAUSS_POINTS)
    spans = np.unique(knots)
    lo, hi = spans[:-1], spans[1:]
    u = (0.5 * (hi - lo)[:, None] * nodes + 0.5 * (hi + lo)[:, None]).ravel()
    w = (0.5 * (hi - lo)[:, None] * weights).ravel()
    derivs = np.empty((n_basis, u.size))
    for j in range(n_basis):
        coef = np.zeros(n_basis)
        coef[j] = 1.0
        derivs[j] = BSpline(knots, coef, degree).derivative(penalty_order)(u)
    omega = (derivs * w) @ derivs.T
    return design, 0.5 * (omega + omega.T)


class BasisSmoother:
    """Penalized least squares in a fixed basis, ``B (B'B + alpha Omega)^{-1} B'``."""

    def __init__(self, kind, n_basis, penalty_order, alpha, d):
        if kind not in BASIS_KINDS:
            raise InvalidParameterError(f"kind must be one of {BASIS_KINDS}, got {kind!r}")
        if alpha < 0:
            raise InvalidParameterError("alpha must be nonnegative")
        if n_basis > d:
            raise InvalidParameterError(f"n_basis ({n_basis}) exceeds d ({d})")
        self.kind = kind
        self.n_basis = n_basis
        self.penalty_order = penalty_order
        self.alpha = float(alpha)
        build = fourier_basis if kind == "fourier" else bspline_basis
        self.design, self.penalty = build(d, n_basis, penalty_order)

    @property
    def dim(self):
        return self.design.shape[0]

    @cached_property
    def matrix(self):
        """Hat matrix mapping observations to fitted values."""
        b = self.design
        gram = b.T @ b + self.alpha * self.penalty
        try:
            coef_map = np.linalg.solve(gram, b.T)
        except np.linalg.LinAlgError as exc:
            raise GridSmoothError(f"singular normal equations: {exc}") from exc
        return b @ coef_map

    @property
    def effective_df(self):
        return float(np.trace(self.matrix))

    def apply(self, curve):
        return np.asarray(curve, dtype=float) @ self.matrix.T

    __call__ = apply


def fit_basis(kind, n_basis, penalty_order, alpha, curve):
    x = np.asarray(curve, dtype=float)
    return BasisSmoother(kind, n_basis, penalty_order, alpha, x.shape[-1]).apply(x)


class KernelSmoother:
    """Nadaraya-Watson smoother with a Gaussian kernel on the unit grid.

    Weights are truncated at the ends of the grid and renormalized, so
    every row sums to one.
    """

    def __init__(self, bandwidth, d):
        if not bandwidth > 0:
            raise InvalidParameterError("bandwidth must be positive")
        self.bandwidth = float(bandwidth)
        t = np.arange(1, d + 1, dtype=float)
        z = (t[:, None] - t[None, :]) / (bandwidth * d)
        w = np.exp(-0.5 * z**2)
        self.weights = w / w.sum(axis=1, keepdims=True)

    @property
    def dim(self):
        return self.weights.shape[0]

    matrix = property(lambda self: self.weights)

    def apply(self, curve):
        return np.asarray(curve, dtype=float) @ self.weights.T

    __call__ = apply


def kernel_smooth(curve, bandwidth):
    x = np.asarray(curve, dtype=float)
    return KernelSmoother(bandwidth, x.shape[-1]).apply(x)
