import numpy as np
import pytest

from gridsmooth import datagen
from gridsmooth.errors import InvalidParameterError
from gridsmooth.stencils import apply, canonical_family


def test_rng_streams_reproducible_and_distinct():
    a = datagen.rng_for(1, 2, 3).standard_normal(5)
    b = datagen.rng_for(1, 2, 3).standard_normal(5)
    c = datagen.rng_for(1, 2, 4).standard_normal(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_irregular_curve_basic():
    f = datagen.irregular_curve(100, 3, 0)
    assert f.shape == (100,)
    assert np.all(f > 0)
    assert np.array_equal(f, datagen.irregular_curve(100, 3, 0))
    with pytest.raises(InvalidParameterError):
        datagen.irregular_curve(5, 0)


def test_irregular_roughness_heterogeneous():
    s2 = canonical_family(2)[2]
    rough = [np.sum(apply(s2, datagen.irregular_curve(100, 0, i)) ** 2) for i in range(200)]
    lo, hi = np.percentile(rough, [5, 95])
    assert hi > 2 * lo


def test_sinusoid():
    f = datagen.sinusoid(100)
    assert abs(f[-1]) <= 1e-12
    assert np.abs(f).max() >= 0.99
    g = datagen.sinusoid(25)
    assert g.shape == (25,) and np.all(np.abs(g) <= 1)


def test_noise_zero_sigma():
    spec = datagen.NoiseSpec("laplace", sigma=0.0)
    assert not np.any(datagen.noise(30, spec, 1, 0))


@pytest.mark.parametrize("dist", datagen.DISTRIBUTIONS)
def test_noise_variance_at_last_point(dist):
    spec = datagen.NoiseSpec(dist, mix_white=0.7, mix_cumulative=0.3, sigma=0.5)
    rng = datagen.rng_for(2, 0)
    last = np.array([datagen.noise_from_rng(rng, 40, spec)[-1] for _ in range(20000)])
    assert 0.95 * 0.25 <= last.var() <= 1.05 * 0.25


@pytest.mark.parametrize("dist", datagen.DISTRIBUTIONS)
def test_standardized_draws_unit_variance(dist):
    x = datagen.standardized_draws(datagen.rng_for(3), 200_000, dist, 5.0)
    assert abs(x.mean()) < 0.01
    assert 0.96 < x.var() < 1.04


def test_cumulative_noise_positively_autocorrelated():
    spec = datagen.NoiseSpec("gaussian", mix_white=0.7, mix_cumulative=0.3)
    rho = []
    for i in range(1000):
        e = datagen.noise(100, spec, 4, i)
        e = e - e.mean()
        rho.append(e[1:] @ e[:-1] / (e @ e))
    assert np.mean(rho) > 0


def test_noise_spec_validation():
    with pytest.raises(InvalidParameterError):
        datagen.NoiseSpec("cauchy")
    with pytest.raises(InvalidParameterError):
        datagen.NoiseSpec(mix_white=0.5, mix_cumulative=0.6)
    with pytest.raises(InvalidParameterError):
        datagen.NoiseSpec("student_t", dof=2.0)
    with pytest.raises(InvalidParameterError):
        datagen.NoiseSpec(sigma=-1)


def test_gp_batch_shape_and_determinism():
    a = datagen.gp_batch(10, 100, seed=5)
    b = datagen.gp_batch(10, 100, seed=5)
    assert a.values.shape == (10, 100) and a.n == 10 and a.d == 100
    assert np.array_equal(a.values, b.values)
    # rows are generated independently of batch size
    c = datagen.gp_batch(3, 100, seed=5)
    assert np.array_equal(a.values[:3], c.values)


def test_gp_batch_degenerate():
    b = datagen.gp_batch(4, 50, lengthscale=10.0, noise_sd=0.0, amplitude=0.0, seed=1)
    np.testing.assert_array_equal(b.values, np.tile(b.truth, (4, 1)))


def test_gp_batch_mean():
    b = datagen.gp_batch(10_000, 40, seed=6)
    assert np.abs(b.values.mean(axis=0) - b.truth).max() < 0.05


def test_curve_batch_truth_mismatch():
    with pytest.raises(ValueError):
        datagen.CurveBatch(np.zeros((2, 5)), truth=np.zeros(4))
