"""Monte Carlo energy decomposition and the contrast linearity check."""
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .. import datagen
from ..errors import InvalidParameterError
from ..penalty import blended_penalty, standard_stencils
from ..smoother import Smoother
from ..stencils import apply, canonical_family
from .report import ExperimentReport

ENERGY_COLUMNS = ("r", "half_width", "exact", "mc", "rel_error", "se")
CONTRAST_COLUMNS = ("statistic", "value")

# stream tags local to the diagnostics
_STREAM_ENERGY = 11
_STREAM_CONTRAST = 12
_ENERGY_CHUNK = 10_000


def run_energy_decomposition(n_draws=100_000, d=31, seed=20240601, max_order=4):
    """Monte Carlo ``E ||D_r X||^2`` for white noise against ``d - 2 L_r``.

    Also records the same-position sample covariances between every pair
    of orders, which should vanish.
    """
    n_draws = int(n_draws)
    family = canonical_family(max_order)
    widest = max(family.half_widths)
    if d < 2 * widest + 1:
        raise InvalidParameterError(f"d must be at least {2 * widest + 1}, got {d}")
    if n_draws < 2:
        raise InvalidParameterError("need at least two draws")
    start = time.perf_counter()
    orders = range(max_order + 1)
    energy = {r: [] for r in orders}
    # positions where every order is defined
    lo, hi = widest, d - widest
    common = {r: slice(lo - family[r].half_width, hi - family[r].half_width) for r in orders}
    n_common = hi - lo
    sums = np.zeros(max_order + 1)
    cross = np.zeros((max_order + 1, max_order + 1))
    for k, s in enumerate(range(0, n_draws, _ENERGY_CHUNK)):
        m = min(_ENERGY_CHUNK, n_draws - s)
        x = datagen.rng_for(seed, _STREAM_ENERGY, k).standard_normal((m, d))
        filtered = {r: apply(family[r], x) for r in orders}
        for r in orders:
            energy[r].append(np.sum(filtered[r] ** 2, axis=1))
        block = np.stack([filtered[r][:, common[r]] for r in orders])
        sums += block.sum(axis=(1, 2))
        cross += np.einsum("rmt,qmt->rq", block, block)
    total = n_draws * n_common
    mean = sums / total
    cov = cross / total - np.outer(mean, mean)

    cells = []
    for r in orders:
        e = np.concatenate(energy[r])
        exact = d - 2 * family[r].half_width
        mc = float(e.mean())
        cells.append({
            "r": r,
            "half_width": family[r].half_width,
            "exact": float(exact),
            "mc": mc,
            "rel_error": (mc - exact) / exact,
            "se": float(e.std(ddof=1) / np.sqrt(n_draws)),
        })
    off = cov[~np.eye(max_order + 1, dtype=bool)]
    diagnostics = {
        "max_abs_rel_error": max(abs(c["rel_error"]) for c in cells),
        "max_abs_cross_cov": float(np.max(np.abs(off))),
    }
    for r in orders:
        diagnostics[f"var_{r}"] = float(cov[r, r])
    for r in orders:
        for q in orders:
            if q > r:
                diagnostics[f"cov_{r}_{q}"] = float(cov[r, q])
    config = {"name": "energy", "n_draws": n_draws, "d": d, "seed": seed,
              "max_order": max_order, "chunk": _ENERGY_CHUNK}
    return ExperimentReport(
        name="energy", config=config, columns=ENERGY_COLUMNS, cells=cells,
        diagnostics=diagnostics, runtime=time.perf_counter() - start,
    )


@dataclass(frozen=True)
class ContrastResult:
    """Centred contrasts at the true location and the linearity residual.

    ``h_values[i] = S (X_i - tau)``, ``H = n^{-1/2} sum_i h_values[i]``;
    ``linearity_residual`` is ``||H(tau + g / sqrt(n)) - H(tau) + S g||``.
    """

    h_values: np.ndarray = field(repr=False)
    H: np.ndarray = field(repr=False)
    linearity_residual: float
    config: dict = field(default_factory=dict)

    @property
    def standardized_means(self):
        """Column means of ``h_values`` divided by their standard errors."""
        n = self.h_values.shape[0]
        se = self.h_values.std(axis=0, ddof=1) / np.sqrt(n)
        return self.h_values.mean(axis=0) / se

    @property
    def hotelling_pvalue(self):
        """Joint test of a zero mean vector (Hotelling T^2, F approximation).

        Checking every coordinate at 3 standard errors is a multiple test;
        this p-value is the simultaneous counterpart.
        """
        n, d = self.h_values.shape
        if n <= d:
            return float("nan")
        mean = self.h_values.mean(axis=0)
        cov = np.cov(self.h_values, rowvar=False)
        t2 = n * mean @ np.linalg.solve(cov, mean)
        f = (n - d) / (d * (n - 1)) * t2
        return float(stats.f.sf(f, d, n - d))


def _contrast_statistic(smoother, x, theta):
    h = smoother.apply(x - theta)
    return h, h.sum(axis=0) / np.sqrt(x.shape[0])


def run_contrast_linearity(n=200, d=50, alpha=1.0, g=None, seed=20240601, eta=0.5,
                           order=2, noise_sd=1.0):
    """Location family ``X_i = tau + noise`` with ``tau`` a sinusoid.

    The model mean is ``m(theta) = theta``, so the smoothed target is
    ``S theta`` and the centred contrast is ``S (X - theta)``. Shifting
    ``theta`` by ``g / sqrt(n)`` moves ``H`` by exactly ``-S g``.
    """
    if n < 2 or d < 2 * 5 + 1:
        raise InvalidParameterError("need n >= 2 and d >= 11")
    tau = datagen.sinusoid(d)
    if g is None:
        g = datagen.rng_for(seed, _STREAM_CONTRAST, 1).standard_normal(d)
        g /= np.linalg.norm(g)
    g = np.asarray(g, dtype=float)
    if g.shape != (d,):
        raise InvalidParameterError(f"shift must have length {d}")
    x = tau + noise_sd * datagen.rng_for(seed, _STREAM_CONTRAST, 0).standard_normal((n, d))
    penalty = blended_penalty(order, eta, d, canonical_family(order),
                              standard_stencils(order, normalize=False))
    smoother = Smoother(penalty, alpha)
    h, H = _contrast_statistic(smoother, x, tau)
    _, H_shift = _contrast_statistic(smoother, x, tau + g / np.sqrt(n))
    residual = float(np.linalg.norm(H_shift - H + smoother.apply(g)))
    config = {"name": "linearity", "n": n, "d": d, "alpha": alpha, "eta": eta,
              "order": order, "noise_sd": noise_sd, "seed": seed,
              "shift_norm": float(np.linalg.norm(g))}
    return ContrastResult(h_values=h, H=H, linearity_residual=residual, config=config)


def contrast_report(result, runtime=0.0):
    """Tabular summary of a :class:`ContrastResult`."""
    z = result.standardized_means
    n = result.h_values.shape[0]
    cells = [
        {"statistic": "linearity_residual", "value": result.linearity_residual},
        {"statistic": "max_abs_standardized_mean", "value": float(np.max(np.abs(z)))},
        {"statistic": "hotelling_pvalue", "value": result.hotelling_pvalue},
        {"statistic": "mean_consistency",
         "value": float(np.max(np.abs(result.h_values.mean(axis=0) - result.H / np.sqrt(n))))},
        {"statistic": "norm_H", "value": float(np.linalg.norm(result.H))},
    ]
    return ExperimentReport(
        name="linearity", config=dict(result.config), columns=CONTRAST_COLUMNS,
        cells=cells, runtime=runtime,
    )
