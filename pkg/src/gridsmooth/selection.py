"""Choosing the smoothing strength: GCV, oracle tuning and an eta rule."""
import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateDenominatorError, GridSmoothError, InvalidParameterError
from .penalty import PenaltySpec, aggregate, standard_stencils
from .smoother import Smoother, order_penalties
from .stencils import canonical_family

DEFAULT_ALPHA_GRID = tuple(np.logspace(-4, 4, 40))

# scores closer than this (relative to the identity-level score scale) tie
_TIE_RTOL = 1e-12


def alpha_grid(lo=1e-4, hi=1e4, count=40):
    if lo <= 0 or hi < lo or count < 1:
        raise InvalidParameterError(f"bad alpha grid ({lo}, {hi}, {count})")
    return tuple(np.logspace(np.log10(lo), np.log10(hi), int(count)))


@dataclass(frozen=True)
class SelectionResult:
    """Outcome of a grid search over alpha for one curve."""

    alpha_hat: float
    score: float
    grid: tuple
    effective_df: float
    fitted: np.ndarray = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class JointSelection:
    """GCV choice of one alpha per order for a simultaneous penalty."""

    alphas: tuple
    score: float
    effective_df: float
    evaluated: int
    fitted: np.ndarray = field(default=None, repr=False, compare=False)


def gcv_score(curve, smoother):
    """``||(I - S) x||^2 / (d - tr S)^2``."""
    x = np.asarray(curve, dtype=float)
    d = smoother.dim
    denom = d - smoother.trace
    if denom <= 1e-12 * d:
        raise DegenerateDenominatorError(
            f"d - tr(S) = {denom:.3g}; the smoother does not shrink"
        )
    r = x - smoother.apply(x)
    return float(r @ r) / denom**2


def _argmin_first(scores, scale):
    scores = np.asarray(scores, dtype=float)
    best = np.min(scores)
    tol = _TIE_RTOL * scale
    return int(np.flatnonzero(scores <= best + tol)[0])


def _check_grid(grid):
    grid = tuple(sorted(float(a) for a in grid))
    if not grid:
        raise InvalidParameterError("alpha grid is empty")
    if grid[0] <= 0:
        raise InvalidParameterError("alpha grid entries must be positive")
    return grid


def select_alpha(curve, penalty, grid=DEFAULT_ALPHA_GRID):
    """GCV-minimizing alpha over ``grid``; ties go to the smallest alpha."""
    x = np.asarray(curve, dtype=float)
    grid = _check_grid(grid)
    smoothers = [Smoother(penalty, a) for a in grid]
    scores = [gcv_score(x, s) for s in smoothers]
    d = x.shape[-1]
    k = _argmin_first(scores, float(x @ x) / d**2)
    best = smoothers[k]
    return SelectionResult(
        alpha_hat=grid[k],
        score=scores[k],
        grid=tuple(zip(grid, scores)),
        effective_df=best.trace,
        fitted=best.apply(x),
    )


def select_sequential(curve, spec, grids=None, family=None, binomials=None):
    """Pick each order's alpha by GCV on the current estimate, highest order first.

    Returns one :class:`SelectionResult` per step (orders descending); the
    last result's ``fitted`` is the final estimate.
    """
    x = np.asarray(curve, dtype=float)
    orders = sorted(spec.orders, reverse=True)
    if grids is None:
        grids = {r: DEFAULT_ALPHA_GRID for r in orders}
    elif not isinstance(grids, dict):
        grids = list(grids)
        if len(grids) != len(spec.orders):
            raise InvalidParameterError("need one alpha grid per order")
        grids = dict(zip(spec.orders, grids))
    single = PenaltySpec(orders, spec.eta, None, "sequential")
    penalties = dict(zip(orders, order_penalties(single, x.shape[-1], family, binomials)))
    results = []
    f = x
    for r in orders:
        res = select_alpha(f, penalties[r], grids[r])
        results.append(res)
        f = res.fitted
    return results


def select_simultaneous(curve, spec, grids=None, family=None, binomials=None, sweeps=2):
    """Joint GCV search for the per-order alphas of an aggregate penalty.

    Exhaustive over the Cartesian grid for up to two orders, coordinate
    descent (``sweeps`` passes, highest order first) beyond that.
    """
    x = np.asarray(curve, dtype=float)
    d = x.shape[-1]
    orders = list(spec.orders)
    if grids is None:
        grids = [DEFAULT_ALPHA_GRID] * len(orders)
    grids = [_check_grid(g) for g in grids]
    if len(grids) != len(orders):
        raise InvalidParameterError("need one alpha grid per order")
    family = family if family is not None else canonical_family(max(orders))
    binomials = binomials if binomials is not None else standard_stencils(max(orders))
    scale = float(x @ x) / d**2
    cache = {}

    def evaluate(idx):
        if idx not in cache:
            alphas = tuple(g[i] for g, i in zip(grids, idx))
            pen = aggregate(family, binomials, spec.with_alphas(alphas), d)
            s = Smoother(pen, 1.0)
            cache[idx] = (gcv_score(x, s), s)
        return cache[idx][0]

    if len(orders) <= 2:
        candidates = list(itertools.product(*[range(len(g)) for g in grids]))
        scores = [evaluate(c) for c in candidates]
        best = candidates[_argmin_first(scores, scale)]
    else:
        best = tuple(0 for _ in orders)
        sweep_order = sorted(range(len(orders)), key=lambda j: -orders[j])
        for _ in range(sweeps):
            for j in sweep_order:
                trial = [best[:j] + (i,) + best[j + 1:] for i in range(len(grids[j]))]
                scores = [evaluate(c) for c in trial]
                best = trial[_argmin_first(scores, scale)]
    score, s = cache[best]
    return JointSelection(
        alphas=tuple(g[i] for g, i in zip(grids, best)),
        score=score,
        effective_df=s.trace,
        evaluated=len(cache),
        fitted=s.apply(x),
    )


@dataclass(frozen=True)
class OracleResult:
    config: object
    mse: float
    estimate: np.ndarray = field(repr=False, compare=False)


def oracle_select(curve, truth, candidates):
    """Candidate whose estimate is closest to ``truth`` in mean squared error.

    Parameters
    ----------
    curve, truth : array_like, shape (d,)
    candidates : iterable of (config, callable)
        Each callable maps a curve to an estimate. Ties keep the earliest
        candidate.
    """
    x = np.asarray(curve, dtype=float)
    f = np.asarray(truth, dtype=float)
    if x.shape != f.shape:
        raise ValueError(f"truth shape {f.shape} does not match curve shape {x.shape}")
    best = None
    for config, fn in candidates:
        est = np.asarray(fn(x), dtype=float)
        mse = float(np.mean((est - f) ** 2))
        if best is None or mse < best.mse:
            best = OracleResult(config, mse, est)
    if best is None:
        raise GridSmoothError("no oracle candidates supplied")
    return best


def eta_heuristic(curve):
    """Blend weight suggested by the serial dependence of a curve.

    The first-differenced curve of white noise has lag-1 autocorrelation
    -1/2, while differencing a random walk leaves it uncorrelated. The rule
    ``clamp(-2 * rho, 0, 1)`` therefore returns about 1 (calibrated penalty)
    for white noise and drifts to 0 (standard penalty) as cumulative,
    dependent noise takes over.
    """
    x = np.asarray(curve, dtype=float)
    if x.size < 3:
        raise InvalidParameterError("eta heuristic needs at least 3 points")
    dx = np.diff(x)
    dx = dx - dx.mean()
    denom = float(dx @ dx)
    if denom <= 1e-24 * max(1.0, float(x @ x)):
        return 1.0
    rho = float(dx[1:] @ dx[:-1]) / denom
    return float(np.clip(-2.0 * rho, 0.0, 1.0))
