"""Empirical convergence of the sample-averaged smoothed estimator.

For each sample size ``n``, draw ``n`` noisy Gaussian-process paths around
a known mean, smooth each with an order-2 blended penalty at
``alpha_n = C * n^(-1/(2 beta + s))`` and average. Squared bias compares
the average with the known mean; the variance term is the dispersion of the
smoothed curves about their average. Log-log slopes are fitted by least
squares.
"""
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .. import datagen
from ..errors import InvalidParameterError
from ..penalty import blended_penalty, standard_stencils
from ..smoother import Smoother
from ..stencils import canonical_family
from .benchmark import default_threads
from .report import ExperimentReport

N_LIST = (10, 20, 50, 100, 200, 500, 1000)
VARIANCE_SCALINGS = ("verbatim", "per_n")
CONVERGENCE_COLUMNS = (
    "n", "alpha", "bias2", "var", "mse", "msebias", "raw_bias2", "raw_var", "raw_mse",
)
_SERIES = ("mse", "bias2", "var", "msebias", "raw_mse", "raw_bias2", "raw_var")


@dataclass(frozen=True)
class RateParams:
    """Smoothness and spectral constants that set ``alpha_n`` and the target rate.

    ``rho`` and ``M`` bound the source element and the second moment; they
    do not enter the computation and are kept for the run record.
    """

    beta: float = 2.0
    s: float = 0.5
    rho: float = 1.0
    M: float = 1.0
    alpha_constant: float = 1.0

    def __post_init__(self):
        if not self.beta > 0:
            raise InvalidParameterError("beta must be positive")
        if not 0 < self.s <= 1:
            raise InvalidParameterError("s must lie in (0, 1]")
        if not (self.rho > 0 and self.M > 0 and self.alpha_constant > 0):
            raise InvalidParameterError("rho, M and alpha_constant must be positive")

    @property
    def rate(self):
        """Reference slope ``-2 beta / (2 beta + s)``."""
        return -2.0 * self.beta / (2.0 * self.beta + self.s)

    def alpha(self, n):
        return self.alpha_constant * n ** (-1.0 / (2.0 * self.beta + self.s))


def loglog_fit(n, values):
    """Least-squares line through ``(log n, log values)``.

    Returns
    -------
    slope, intercept, r2 : float
    """
    x = np.log(np.asarray(n, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    design = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ np.array([slope, intercept])
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def _one_draw(n, rep, config, smoother, truth):
    batch = datagen.gp_batch(
        n, config["d"], config["lengthscale"], config["noise_sd"], config["seed"],
        config["amplitude"], key=(n, rep),
    )
    x = batch.values
    out = {}
    for prefix, y in (("", smoother.apply(x)), ("raw_", x)):
        mean = y.mean(axis=0)
        bias2 = float(np.mean((mean - truth) ** 2))
        var = float(np.mean(np.sum((y - mean) ** 2, axis=1)))
        if config["variance_scaling"] == "per_n":
            var /= n
        out[prefix + "bias2"] = bias2
        out[prefix + "var"] = var
    return out


def run_convergence(n_list=N_LIST, d=100, params=None, n_repeats=50, seed=20240601,
                    threads=None, **overrides):
    """Slopes of MSE, Bias^2 and their product against ``n``.

    Each quantity is averaged over ``n_repeats`` independent data sets per
    ``n`` before taking logs; ``n_repeats=1`` is the single-run protocol.
    """
    params = params or RateParams()
    config = {
        "name": "convergence",
        "n_list": tuple(int(n) for n in n_list),
        "d": d,
        "order": 2,
        "eta": 0.5,
        "lengthscale": 0.1,
        "amplitude": 1.0,
        "noise_sd": 0.2,
        "n_repeats": n_repeats,
        "seed": seed,
        "variance_scaling": "verbatim",
        "normalize_standard": False,
        **{f"rate_{k}": v for k, v in asdict(params).items()},
    }
    config.update(overrides)
    if config["variance_scaling"] not in VARIANCE_SCALINGS:
        raise InvalidParameterError(f"variance_scaling must be one of {VARIANCE_SCALINGS}")
    if config["n_repeats"] < 1:
        raise InvalidParameterError("n_repeats must be at least 1")
    threads = threads or default_threads()
    start = time.perf_counter()

    d = config["d"]
    truth = np.sin(6.0 * np.pi * datagen.unit_grid(d))
    penalty = blended_penalty(
        config["order"], config["eta"], d, canonical_family(config["order"]),
        standard_stencils(config["order"], normalize=config["normalize_standard"]),
    )
    smoothers = {n: Smoother(penalty, params.alpha(n)) for n in config["n_list"]}
    tasks = [(n, rep) for n in config["n_list"] for rep in range(config["n_repeats"])]

    def work(task):
        n, rep = task
        return _one_draw(n, rep, config, smoothers[n], truth)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, tasks))
    else:
        results = [work(t) for t in tasks]

    cells = []
    for n in config["n_list"]:
        rows = [r for (m, _), r in zip(tasks, results) if m == n]
        avg = {k: float(np.mean([r[k] for r in rows])) for k in rows[0]}
        cell = {"n": n, "alpha": params.alpha(n), **avg}
        cell["mse"] = cell["bias2"] + cell["var"]
        cell["msebias"] = cell["mse"] * cell["bias2"]
        cell["raw_mse"] = cell["raw_bias2"] + cell["raw_var"]
        cells.append({k: cell[k] for k in CONVERGENCE_COLUMNS})

    ns = [c["n"] for c in cells]
    diagnostics = {"reference_slope": params.rate}
    plotdata = {}
    for name in _SERIES:
        values = [c[name] for c in cells]
        slope, intercept, r2 = loglog_fit(ns, values)
        diagnostics[f"slope_{name}"] = slope
        diagnostics[f"r2_{name}"] = r2
        rows = [(np.log(n), np.log(v), intercept + slope * np.log(n)) for n, v in zip(ns, values)]
        plotdata[name] = (("log_n", "log_value", "fit"), rows)
    return ExperimentReport(
        name="convergence", config=config, columns=CONVERGENCE_COLUMNS, cells=cells,
        diagnostics=diagnostics, plotdata=plotdata, runtime=time.perf_counter() - start,
    )
