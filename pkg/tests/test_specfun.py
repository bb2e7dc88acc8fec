import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracheat.errors import DomainError
from fracheat.specfun import (
    SeriesControl,
    gamma_beta,
    halpha_moment,
    halpha_quadrature,
    halpha_support,
    log_gamma,
    mainardi_density,
    mittag_leffler,
    r_constants,
)

mp.mp.dps = 40


def ml_reference(a, b, z):
    return float(mp.nsum(lambda k: mp.mpf(z) ** k / mp.gamma(a * k + b), [0, mp.inf]))


@pytest.mark.parametrize("alpha", [0.1, 0.3, 0.5, 0.7, 0.9, 0.99])
@pytest.mark.parametrize("z", [-40.0, -9.0, -2.0, -0.3, 0.0, 0.5])
def test_mittag_leffler_matches_series_oracle(alpha, z):
    for beta in (1.0, alpha):
        ref = ml_reference(alpha, beta, z)
        assert mittag_leffler(alpha, beta, z) == pytest.approx(ref, rel=1e-10)


def test_mittag_leffler_closed_forms():
    z = np.linspace(-50, 50, 101)
    assert np.allclose(mittag_leffler(1.0, 1.0, z), np.exp(z), rtol=1e-12)
    # E_{1/2}(-x) = exp(x^2) erfc(x)
    x = 1.3
    assert mittag_leffler(0.5, 1.0, -x) == pytest.approx(float(mp.exp(x * x) * mp.erfc(x)), rel=1e-12)


def test_mittag_leffler_vectorised_shape():
    z = -np.geomspace(1e-3, 1e5, 50).reshape(5, 10)
    out = mittag_leffler(0.6, 0.6, z)
    assert out.shape == z.shape
    assert np.all(np.isfinite(out))


def test_mittag_leffler_rejects_bad_order():
    with pytest.raises(DomainError):
        mittag_leffler(0.0, 1.0, -1.0)
    with pytest.raises(DomainError):
        mittag_leffler(1.5, 1.0, -1.0)


@settings(max_examples=40, deadline=None)
@given(alpha=st.floats(0.2, 0.95), x=st.floats(0.01, 1e4))
def test_relaxation_is_completely_monotone_bounded(alpha, x):
    v = mittag_leffler(alpha, 1.0, -x)
    assert 0.0 < v < 1.0
    assert mittag_leffler(alpha, 1.0, -1.01 * x) <= v + 1e-14


def test_mainardi_density_special_case():
    # M_{1/2}(theta) = exp(-theta^2/4)/sqrt(pi)
    th = np.array([0.0, 0.5, 2.0, 4.0])
    assert np.allclose(mainardi_density(0.5, th), np.exp(-th**2 / 4) / np.sqrt(np.pi), rtol=1e-10)


@pytest.mark.parametrize("alpha", [0.1, 0.5, 0.9])
def test_halpha_quadrature_moments(alpha):
    th, w = halpha_quadrature(alpha)
    h = mainardi_density(alpha, th)
    for delta in (0.0, 1.0, 2.5):
        assert np.sum(w * h * th**delta) == pytest.approx(halpha_moment(alpha, delta), rel=1e-8)


def test_halpha_moment_formula():
    assert halpha_moment(0.4, 2.0) == pytest.approx(math.gamma(3) / math.gamma(1.8))


def test_halpha_support_is_finite_and_positive():
    for alpha in (0.3, 0.9):
        top = halpha_support(alpha)
        assert math.isfinite(top) and top > 1.0
        assert top**4 * mainardi_density(alpha, top) <= 1e-16


def test_gamma_beta_matches_mpmath():
    assert gamma_beta(2.5) == pytest.approx(float(mp.gamma(2.5)), rel=1e-14)
    assert gamma_beta(0.3, 1.7) == pytest.approx(float(mp.beta(0.3, 1.7)), rel=1e-13)
    assert log_gamma(200.0) == pytest.approx(float(mp.loggamma(200)), rel=1e-14)
    with pytest.raises(DomainError):
        gamma_beta(-1.0, 2.0)


def test_r_constants_are_relaxation_values():
    r1, r2 = r_constants(0.6)
    assert r1 == pytest.approx(ml_reference(0.6, 1.0, -0.5), rel=1e-12)
    assert r2 == pytest.approx(0.6 * ml_reference(0.6, 0.6, -0.5), rel=1e-12)
    assert r_constants(1.0) == pytest.approx((math.exp(-0.5), math.exp(-0.5)))


def test_series_control_validation():
    with pytest.raises(DomainError):
        SeriesControl(abs_tol=0)
    with pytest.raises(DomainError):
        SeriesControl(max_terms=4)
