import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gridsmooth.errors import InvalidParameterError
from gridsmooth.penalty import PenaltyMatrix, PenaltySpec, blended_penalty, standard_stencils
from gridsmooth.smoother import (
    Smoother,
    make,
    penalized_objective,
    smooth,
    smooth_sequential,
    smooth_simultaneous,
    smooth_single,
)
from gridsmooth.stencils import canonical_family

FAMILY = canonical_family(4)
BINOM = standard_stencils(4)


def _pen(order, eta, d):
    return blended_penalty(order, eta, d, FAMILY, BINOM)


def test_alpha_zero_is_identity():
    s = make(_pen(2, 0.5, 20), 0.0)
    np.testing.assert_allclose(s.matrix, np.eye(20), atol=1e-15)
    assert s.trace == pytest.approx(20)


def test_scalar_case():
    s = Smoother(PenaltyMatrix.from_dense(np.eye(3)), 1.0)
    np.testing.assert_allclose(s.matrix, np.eye(3) / 2, atol=1e-15)
    assert s.trace == pytest.approx(1.5, abs=1e-14)


def test_ramp_preserved_under_heavy_smoothing():
    d = 60
    ramp = np.linspace(-1, 2, d)
    out = Smoother(_pen(2, 1.0, d), 1e6).apply(ramp)
    assert np.linalg.norm(out - ramp) <= 1e-6 * np.linalg.norm(ramp)


def test_negative_alpha_rejected():
    with pytest.raises(InvalidParameterError):
        Smoother(_pen(2, 0.5, 10), -1.0)


def test_zero_curve():
    assert not np.any(Smoother(_pen(3, 0.3, 25), 2.0).apply(np.zeros(25)))


@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_residual_identity(order):
    rng = np.random.default_rng(order)
    for alpha in (1e-3, 1.0, 1e3):
        s = Smoother(_pen(order, 0.5, 40), alpha)
        x = rng.standard_normal(40)
        f = s.apply(x)
        assert np.linalg.norm(s.system_matvec(f) - x) <= 1e-10 * np.linalg.norm(x)


def test_objective_minimized_against_perturbations():
    rng = np.random.default_rng(11)
    for _ in range(5):
        d = int(rng.integers(15, 60))
        order = int(rng.integers(1, 5))
        pen = _pen(order, float(rng.uniform()), d)
        alpha = float(10 ** rng.uniform(-2, 2))
        x = rng.standard_normal(d)
        f = Smoother(pen, alpha).apply(x)
        best = penalized_objective(f, x, pen, alpha)
        for _ in range(200):
            g = f + rng.standard_normal(d) * 10 ** rng.uniform(-4, 0)
            assert penalized_objective(g, x, pen, alpha) > best


def test_batch_apply_matches_rows():
    s = Smoother(_pen(2, 0.5, 30), 3.0)
    x = np.random.default_rng(4).standard_normal((5, 30))
    out = s.apply(x)
    for i in range(5):
        np.testing.assert_allclose(out[i], s.apply(x[i]), atol=1e-14)


def test_trace_decreases_in_alpha():
    pen = _pen(2, 0.5, 40)
    traces = [Smoother(pen, a).trace for a in np.logspace(-3, 3, 20)]
    assert np.all(np.diff(traces) < 0)
    assert all(0 < t <= 40 for t in traces)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.floats(0, 1), st.floats(1e-3, 1e3), st.integers(0, 2**31))
def test_shrinkage_symmetry_linearity(order, eta, alpha, seed):
    d = 24
    s = Smoother(_pen(order, eta, d), alpha)
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal((2, d))
    assert np.linalg.norm(s.apply(x)) <= np.linalg.norm(x) * (1 + 1e-12)
    assert abs(s.apply(x) @ y - x @ s.apply(y)) <= 1e-10
    np.testing.assert_allclose(s.apply(2 * x - 3 * y), 2 * s.apply(x) - 3 * s.apply(y), atol=1e-10)


def test_sequential_single_order_matches_single():
    x = np.random.default_rng(5).standard_normal(30)
    seq = PenaltySpec((2,), 0.5, (4.0,), "sequential")
    one = PenaltySpec((2,), 0.5, (4.0,), "single")
    final, steps = smooth_sequential(x, seq, FAMILY, BINOM)
    np.testing.assert_allclose(final, smooth_single(x, one, FAMILY, BINOM))
    assert len(steps) == 1


def test_sequential_zero_alphas_identity():
    x = np.random.default_rng(6).standard_normal(30)
    spec = PenaltySpec((1, 2, 3, 4), 0.5, (0, 0, 0, 0), "sequential")
    np.testing.assert_allclose(smooth(x, spec, FAMILY, BINOM), x, atol=1e-14)


def test_sequential_equals_dense_composition():
    d = 35
    x = np.random.default_rng(7).standard_normal(d)
    spec = PenaltySpec((1, 2), 0.4, (0.7, 3.0), "sequential")
    p1, p2 = _pen(1, 0.4, d).toarray(), _pen(2, 0.4, d).toarray()
    s1 = np.linalg.inv(np.eye(d) + 0.7 * p1)
    s2 = np.linalg.inv(np.eye(d) + 3.0 * p2)
    final, steps = smooth_sequential(x, spec, FAMILY, BINOM)
    np.testing.assert_allclose(steps[0], s2 @ x, atol=1e-12)
    np.testing.assert_allclose(final, s1 @ s2 @ x, atol=1e-12)


def test_simultaneous_cases():
    d = 40
    rng = np.random.default_rng(8)
    x = rng.standard_normal(d)
    one = smooth_simultaneous(x, PenaltySpec((2,), 0.5, (2.0,), "simultaneous"), FAMILY, BINOM)
    np.testing.assert_allclose(one, Smoother(_pen(2, 0.5, d), 2.0).apply(x), atol=1e-12)
    a = smooth_simultaneous(x, PenaltySpec((1, 2), 0.0, (1, 1), "simultaneous"), FAMILY, BINOM)
    b = smooth_simultaneous(x, PenaltySpec((1, 2), 1.0, (1, 1), "simultaneous"), FAMILY, BINOM)
    assert np.linalg.norm(a - b) > 0
    c = np.full(d, 1.7)
    out = smooth_simultaneous(c, PenaltySpec((1, 2, 3), 0.5, (5, 5, 5), "simultaneous"), FAMILY, BINOM)
    np.testing.assert_allclose(out, c, atol=1e-10)


def test_mode_mismatch():
    with pytest.raises(InvalidParameterError):
        smooth_single(np.zeros(20), PenaltySpec((1, 2), mode="sequential"))
