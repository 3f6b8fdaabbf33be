"""Discrete penalized smoothers ``S = (I + alpha P)^{-1}``."""
from functools import cached_property

import numpy as np
from scipy.linalg import LinAlgError, cho_solve_banded, cholesky_banded

from .errors import GridSmoothError, InvalidParameterError
from .penalty import aggregate, blended_penalty, standard_stencils
from .stencils import canonical_family


class Smoother:
    """Factorized linear smoother ``(I + alpha * P)^{-1}``.

    The banded Cholesky factor of ``I + alpha P`` is computed once; the
    trace of the inverse is obtained exactly by solving against the
    identity.
    """

    def __init__(self, penalty, alpha):
        alpha = float(alpha)
        if not np.isfinite(alpha) or alpha < 0:
            raise InvalidParameterError(f"alpha must be finite and >= 0, got {alpha}")
        self.penalty = penalty
        self.alpha = alpha
        system = alpha * penalty.banded
        system[-1] += 1.0
        try:
            self._factor = cholesky_banded(system, lower=False)
        except LinAlgError as exc:
            raise GridSmoothError(f"I + alpha P is not positive definite: {exc}") from exc
        self.trace = float(np.trace(self.matrix))

    @property
    def dim(self):
        return self.penalty.dim

    @cached_property
    def matrix(self):
        """Dense ``d x d`` smoother matrix (symmetric)."""
        s = cho_solve_banded((self._factor, False), np.eye(self.dim))
        s = 0.5 * (s + s.T)
        s.setflags(write=False)
        return s

    def apply(self, curve):
        """Smooth one curve ``(d,)`` or a batch of curves ``(n, d)``."""
        x = np.asarray(curve, dtype=float)
        if x.shape[-1] != self.dim:
            raise ValueError(f"curve length {x.shape[-1]} does not match smoother dimension {self.dim}")
        if x.ndim == 1:
            return cho_solve_banded((self._factor, False), x)
        return cho_solve_banded((self._factor, False), x.T).T

    __call__ = apply

    def system_matvec(self, f):
        """Compute ``(I + alpha P) f``."""
        f = np.asarray(f, dtype=float)
        return f + self.alpha * (self.penalty @ f)

    def residual_matrix(self):
        return np.eye(self.dim) - self.matrix

    def __repr__(self):
        return f"Smoother(dim={self.dim}, alpha={self.alpha:g}, trace={self.trace:.6g})"


def make(penalty, alpha):
    return Smoother(penalty, alpha)


def penalized_objective(f, curve, penalty, alpha):
    """``||x - f||^2 + alpha * f' P f``; minimized by ``Smoother(P, alpha)``."""
    f = np.asarray(f, dtype=float)
    r = np.asarray(curve, dtype=float) - f
    return float(r @ r) + alpha * penalty.quadratic_form(f)


def _defaults(spec, family, binomials):
    if family is None:
        family = canonical_family(spec.max_order)
    if binomials is None:
        binomials = standard_stencils(spec.max_order)
    return family, binomials


def order_penalties(spec, dim, family=None, binomials=None):
    """Blended penalty for each order in ``spec`` (same order as spec.orders)."""
    family, binomials = _defaults(spec, family, binomials)
    return [blended_penalty(r, spec.eta, dim, family, binomials) for r in spec.orders]


def smooth_single(curve, spec, family=None, binomials=None):
    x = np.asarray(curve, dtype=float)
    if spec.mode != "single":
        raise InvalidParameterError(f"expected a single-order spec, got {spec.mode!r}")
    (penalty,) = order_penalties(spec, x.shape[-1], family, binomials)
    return Smoother(penalty, spec.alphas[0]).apply(x)


def smooth_sequential(curve, spec, family=None, binomials=None):
    """Smooth from the highest order down to the lowest.

    Returns
    -------
    final : ndarray
        The last estimate ``f_1``.
    steps : list of ndarray
        Intermediate estimates ``f_R, ..., f_1``.
    """
    x = np.asarray(curve, dtype=float)
    if spec.mode != "sequential":
        raise InvalidParameterError(f"expected a sequential spec, got {spec.mode!r}")
    penalties = order_penalties(spec, x.shape[-1], family, binomials)
    ranked = sorted(zip(spec.orders, spec.alphas, penalties), key=lambda t: -t[0])
    steps = []
    f = x
    for _, alpha, penalty in ranked:
        f = Smoother(penalty, alpha).apply(f)
        steps.append(f)
    return f, steps


def smooth_simultaneous(curve, spec, family=None, binomials=None):
    x = np.asarray(curve, dtype=float)
    family, binomials = _defaults(spec, family, binomials)
    penalty = aggregate(family, binomials, spec, x.shape[-1])
    return Smoother(penalty, 1.0).apply(x)


def smooth(curve, spec, family=None, binomials=None):
    """Dispatch on ``spec.mode``; always returns just the final estimate."""
    if spec.mode == "single":
        return smooth_single(curve, spec, family, binomials)
    if spec.mode == "sequential":
        return smooth_sequential(curve, spec, family, binomials)[0]
    return smooth_simultaneous(curve, spec, family, binomials)
