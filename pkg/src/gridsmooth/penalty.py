"""Banded roughness penalties built from difference stencils."""
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse

from .errors import InvalidParameterError
from .stencils import binomial_stencil, canonical_family, difference_matrix

MODES = ("single", "sequential", "simultaneous")


class PenaltyMatrix:
    """Symmetric positive semi-definite banded ``d x d`` matrix.

    Stored in LAPACK upper banded layout: ``banded[b + i - j, j] = P[i, j]``
    for ``i <= j``, where ``b`` is the band half-width.
    """

    def __init__(self, banded, dim=None):
        banded = np.atleast_2d(np.asarray(banded, dtype=float))
        if dim is not None and banded.shape[1] != dim:
            raise ValueError(f"banded storage has {banded.shape[1]} columns, expected {dim}")
        banded.setflags(write=False)
        self.banded = banded

    @classmethod
    def from_dense(cls, matrix, band_half_width=None):
        a = np.asarray(matrix, dtype=float)
        d = a.shape[0]
        if band_half_width is None:
            nz = np.argwhere(a != 0.0)
            band_half_width = int(np.max(np.abs(nz[:, 0] - nz[:, 1]))) if nz.size else 0
        b = band_half_width
        banded = np.zeros((b + 1, d))
        for k in range(b + 1):
            banded[b - k, k:] = np.diagonal(a, offset=k)
        return cls(banded)

    @classmethod
    def zeros(cls, dim):
        return cls(np.zeros((1, dim)))

    @property
    def dim(self):
        return self.banded.shape[1]

    @property
    def band_half_width(self):
        return self.banded.shape[0] - 1

    @cached_property
    def sparse(self):
        b, d = self.band_half_width, self.dim
        diags, offsets = [], []
        for k in range(b + 1):
            diag = self.banded[b - k, k:]
            diags.append(diag)
            offsets.append(k)
            if k:
                diags.append(diag)
                offsets.append(-k)
        return sparse.diags(diags, offsets, shape=(d, d), format="csr")

    def toarray(self):
        return self.sparse.toarray()

    def __matmul__(self, x):
        return self.sparse @ np.asarray(x, dtype=float)

    def quadratic_form(self, x):
        x = np.asarray(x, dtype=float)
        return float(x @ (self.sparse @ x))

    def scaled(self, factor):
        return PenaltyMatrix(factor * self.banded)

    def __add__(self, other):
        if not isinstance(other, PenaltyMatrix):
            return NotImplemented
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
        b = max(self.band_half_width, other.band_half_width)
        out = np.zeros((b + 1, self.dim))
        out[b - self.band_half_width:] += self.banded
        out[b - other.band_half_width:] += other.banded
        return PenaltyMatrix(out)

    def eigvalsh(self):
        """Eigenvalues in ascending order (dense symmetric solver)."""
        return np.linalg.eigvalsh(self.toarray())

    def __repr__(self):
        return f"PenaltyMatrix(dim={self.dim}, band_half_width={self.band_half_width})"


@dataclass(frozen=True)
class PenaltySpec:
    """Orders, blend weight and per-order strengths of a penalty scheme.

    ``orders`` and ``alphas`` pair up elementwise. For the sequential mode
    the orders are processed from highest to lowest regardless of the order
    given here.
    """

    orders: tuple
    eta: float = 1.0
    alphas: tuple = None
    mode: str = "single"

    def __post_init__(self):
        orders = tuple(int(r) for r in np.atleast_1d(self.orders))
        alphas = self.alphas
        if alphas is None:
            alphas = (1.0,) * len(orders)
        alphas = tuple(float(a) for a in np.atleast_1d(alphas))
        object.__setattr__(self, "orders", orders)
        object.__setattr__(self, "alphas", alphas)
        if not orders:
            raise InvalidParameterError("at least one order is required")
        if any(r < 1 for r in orders):
            raise InvalidParameterError(f"penalty orders must be >= 1, got {orders}")
        if len(orders) != len(alphas):
            raise InvalidParameterError(
                f"{len(orders)} orders but {len(alphas)} alphas"
            )
        if not 0.0 <= self.eta <= 1.0:
            raise InvalidParameterError(f"eta must lie in [0, 1], got {self.eta}")
        if any(a < 0 for a in alphas):
            raise InvalidParameterError(f"alphas must be nonnegative, got {alphas}")
        if self.mode not in MODES:
            raise InvalidParameterError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "single" and len(orders) != 1:
            raise InvalidParameterError("single mode takes exactly one order")

    @property
    def max_order(self):
        return max(self.orders)

    def with_alphas(self, alphas):
        return PenaltySpec(self.orders, self.eta, tuple(alphas), self.mode)


def penalty_from_stencil(stencil, dim):
    """Return ``D^T D`` where ``D`` applies ``stencil`` at interior points."""
    d_mat = difference_matrix(stencil, dim)
    dense_band = 2 * stencil.half_width
    gram = (d_mat.T @ d_mat).tocsr()
    banded = np.zeros((dense_band + 1, dim))
    for k in range(min(dense_band, dim - 1) + 1):
        banded[dense_band - k, k:] = gram.diagonal(k)
    return PenaltyMatrix(banded)


def blend(p_standard, p_calibrated, eta):
    """Convex combination ``(1 - eta) * p_standard + eta * p_calibrated``."""
    if p_standard.dim != p_calibrated.dim:
        raise ValueError(
            f"dimension mismatch: {p_standard.dim} vs {p_calibrated.dim}"
        )
    if not 0.0 <= eta <= 1.0:
        raise InvalidParameterError(f"eta must lie in [0, 1], got {eta}")
    if eta == 0.0:
        return p_standard
    if eta == 1.0:
        return p_calibrated
    return p_standard.scaled(1.0 - eta) + p_calibrated.scaled(eta)


def standard_stencils(max_order, normalize=False):
    """Binomial stencils of orders ``0..max_order`` (index = order).

    Raw integer weights are the default: the blend then weighs a standard
    difference by its natural scale (``C(2r, r)`` in squared norm) against a
    unit-norm calibrated one.
    """
    return [binomial_stencil(r, normalize=normalize) for r in range(max_order + 1)]


def _lookup(stencils, order):
    if hasattr(stencils, "members"):
        return stencils[order]
    for s in stencils:
        if s.order == order:
            return s
    raise KeyError(f"no stencil of order {order}")


def blended_penalty(order, eta, dim, family=None, binomials=None):
    """Order-``order`` penalty interpolating standard and calibrated forms."""
    if family is None:
        family = canonical_family(order)
    if binomials is None:
        binomials = standard_stencils(order)
    p_std = penalty_from_stencil(_lookup(binomials, order), dim)
    p_cal = penalty_from_stencil(_lookup(family, order), dim)
    return blend(p_std, p_cal, eta)


def aggregate(family, binomials, spec, dim):
    """Multi-order penalty ``sum_r alpha_r * blended_r`` for one-shot smoothing."""
    if spec.mode != "simultaneous":
        raise InvalidParameterError(
            f"aggregate requires a simultaneous spec, got mode {spec.mode!r}"
        )
    total = PenaltyMatrix.zeros(dim)
    for r, a in zip(spec.orders, spec.alphas):
        total = total + blended_penalty(r, spec.eta, dim, family, binomials).scaled(a)
    return total
