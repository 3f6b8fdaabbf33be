"""Seeded generators for target curves, noise processes and GP batches.

Every generator is a pure function of its arguments and seed. Random
streams are derived with :class:`numpy.random.SeedSequence` spawn keys, so
row ``i`` of a batch draws from the same substream no matter how the work is
scheduled.
"""
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cholesky
from scipy.ndimage import uniform_filter1d

from .errors import GridSmoothError, InvalidParameterError

DISTRIBUTIONS = ("gaussian", "laplace", "student_t")

# stream tags keep independent uses of one seed apart
STREAM_TRUTH = 1
STREAM_NOISE = 2
STREAM_GP = 3


def rng_for(seed, *key):
    """Generator for the substream ``key`` of ``seed``."""
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))
    )


@dataclass(frozen=True)
class CurveBatch:
    """``n`` curves on a common ``d``-point grid, with an optional target."""

    values: np.ndarray
    truth: np.ndarray = None
    seed: int = None

    def __post_init__(self):
        values = np.atleast_2d(np.asarray(self.values, dtype=float))
        object.__setattr__(self, "values", values)
        if self.truth is not None:
            truth = np.asarray(self.truth, dtype=float)
            if truth.shape[-1] != values.shape[1]:
                raise ValueError(
                    f"truth has length {truth.shape[-1]}, curves have length {values.shape[1]}"
                )
            object.__setattr__(self, "truth", truth)

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def d(self):
        return self.values.shape[1]


@dataclass(frozen=True)
class NoiseSpec:
    """Mixture of white and cumulative (random-walk) noise.

    Both components are standardized with their population variance; the
    cumulative part is scaled so that its variance at the last grid point
    is one. The mixture is then rescaled to unit variance at ``t = d`` and
    multiplied by ``sigma``.
    """

    distribution: str = "gaussian"
    dof: float = 5.0
    mix_white: float = 1.0
    mix_cumulative: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if self.distribution not in DISTRIBUTIONS:
            raise InvalidParameterError(
                f"distribution must be one of {DISTRIBUTIONS}, got {self.distribution!r}"
            )
        if self.mix_white < 0 or self.mix_cumulative < 0:
            raise InvalidParameterError("mixture weights must be nonnegative")
        if abs(self.mix_white + self.mix_cumulative - 1.0) > 1e-12:
            raise InvalidParameterError("mixture weights must sum to 1")
        if self.sigma < 0:
            raise InvalidParameterError("sigma must be nonnegative")
        if self.distribution == "student_t" and self.dof <= 2:
            raise InvalidParameterError("Student-t noise needs dof > 2 for finite variance")


def standardized_draws(rng, size, distribution, dof=5.0):
    """Zero-mean, unit-variance draws using the closed-form variance."""
    if distribution == "gaussian":
        return rng.standard_normal(size)
    if distribution == "laplace":
        # variance 2 b^2
        return rng.laplace(0.0, 1.0 / np.sqrt(2.0), size)
    if distribution == "student_t":
        if dof <= 2:
            raise InvalidParameterError("Student-t noise needs dof > 2 for finite variance")
        return rng.standard_t(dof, size) * np.sqrt((dof - 2.0) / dof)
    raise InvalidParameterError(f"unknown distribution {distribution!r}")


def noise_from_rng(rng, d, spec):
    white = standardized_draws(rng, d, spec.distribution, spec.dof)
    xi = standardized_draws(rng, d, spec.distribution, spec.dof)
    cumulative = np.cumsum(xi) / np.sqrt(d)
    mixed = spec.mix_white * white + spec.mix_cumulative * cumulative
    scale = np.hypot(spec.mix_white, spec.mix_cumulative)
    return spec.sigma * mixed / scale


def noise(d, spec, seed, *key):
    """One noise vector of length ``d`` from substream ``key`` of ``seed``."""
    if d < 1:
        raise InvalidParameterError("d must be positive")
    return noise_from_rng(rng_for(seed, STREAM_NOISE, *key), d, spec)


def moving_average_width(d):
    return max(3, int(round(d / 20)))


def irregular_curve(d, seed, *key):
    """Softplus of moving-averaged white noise: a curve of uneven roughness.

    The window is ``max(3, round(d / 20))`` points, centred, with reflected
    boundaries.
    """
    if d < 8:
        raise InvalidParameterError(f"irregular curve needs d >= 8, got {d}")
    rng = rng_for(seed, STREAM_TRUTH, *key)
    z = uniform_filter1d(rng.standard_normal(d), moving_average_width(d), mode="reflect")
    return np.logaddexp(0.0, z)


def sinusoid(d):
    """``sin(6 pi t / d)`` at ``t = 1..d``."""
    if d < 2:
        raise InvalidParameterError("sinusoid needs d >= 2")
    t = np.arange(1, d + 1)
    return np.sin(6.0 * np.pi * t / d)


def unit_grid(d):
    return np.arange(1, d + 1) / d


def se_kernel(t, lengthscale, amplitude=1.0):
    diff = t[:, None] - t[None, :]
    return amplitude**2 * np.exp(-0.5 * (diff / lengthscale) ** 2)


def _kernel_factor(k):
    try:
        return cholesky(k, lower=True)
    except LinAlgError:
        pass
    try:
        return cholesky(k + 1e-8 * np.eye(k.shape[0]), lower=True)
    except LinAlgError as exc:
        raise GridSmoothError("kernel matrix is not positive definite even with jitter") from exc


def gp_batch(n, d, lengthscale=0.1, noise_sd=0.2, seed=0, amplitude=1.0, key=()):
    """Noisy Gaussian-process paths around ``sin(6 pi t)`` on ``t = (1..d)/d``.

    Row ``i`` draws from substream ``(*key, i)`` so batches are reproducible
    row by row.
    """
    if n < 1 or d < 2:
        raise InvalidParameterError("gp_batch needs n >= 1 and d >= 2")
    t = unit_grid(d)
    mean = np.sin(6.0 * np.pi * t)
    if amplitude > 0:
        factor = _kernel_factor(se_kernel(t, lengthscale, amplitude))
    else:
        factor = None
    rows = np.empty((n, d))
    for i in range(n):
        rng = rng_for(seed, STREAM_GP, *key, i)
        z = rng.standard_normal(d)
        eps = rng.standard_normal(d)
        path = mean.copy()
        if factor is not None:
            path += factor @ z
        rows[i] = path + noise_sd * eps
    return CurveBatch(rows, truth=mean, seed=seed)
