import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracheat.errors import DomainError
from fracheat.propagator import (
    Field,
    Grid,
    apply_heat,
    apply_p_alpha,
    apply_s_alpha,
    check_box,
    p_alpha_multipliers,
    quadrature_p_alpha,
    quadrature_s_alpha,
    s_alpha_multipliers,
)


@pytest.fixture(scope="module")
def gauss1d():
    g = Grid(1, 8.0, 256)
    return Field(g, np.exp(-g.radius**2))


def test_grid_validation():
    with pytest.raises(DomainError):
        Grid(4, 1.0, 16)
    with pytest.raises(DomainError):
        Grid(1, 1.0, 100)
    with pytest.raises(DomainError):
        Grid(1, -1.0, 16)
    with pytest.raises(DomainError):
        Grid(1, 1.0, 16, symbol="weird")


def test_grid_geometry():
    g = Grid(2, 4.0, 32)
    assert g.shape == (32, 32)
    assert g.spacing == pytest.approx(0.25)
    assert g.volume == pytest.approx(64.0)
    assert g.radius[g.origin_index] == 0.0


def test_field_is_read_only_and_checked():
    g = Grid(1, 1.0, 16)
    f = Field.constant(g, 2.0)
    with pytest.raises(ValueError):
        f.values[0] = 1.0
    with pytest.raises(DomainError):
        Field(g, np.ones(8))
    with pytest.raises(DomainError):
        Field(g, np.full(16, np.nan))
    assert (3 * f).sup() == 6.0
    assert f.mass() == pytest.approx(4.0)


def test_heat_matches_gaussian_convolution():
    g = Grid(1, 16.0, 1024, symbol="spectral")
    f = Field(g, np.exp(-g.radius**2))
    t = 0.5
    exact = np.exp(-g.radius**2 / (1 + 4 * t)) / math.sqrt(1 + 4 * t)
    assert np.abs(apply_heat(f, t).values - exact).max() < 1e-12


@pytest.mark.parametrize("alpha", [0.4, 0.7, 0.95])
@pytest.mark.parametrize("t", [0.01, 1.0])
def test_multiplier_and_quadrature_paths_agree(gauss1d, alpha, t):
    a = apply_p_alpha(gauss1d, alpha, t).values
    b = quadrature_p_alpha(gauss1d, alpha, t).values
    assert np.abs(a - b).max() < 1e-6
    a = apply_s_alpha(gauss1d, alpha, t).values
    b = quadrature_s_alpha(gauss1d, alpha, t).values
    assert np.abs(a - b).max() < 1e-6


def test_alpha_one_is_heat(gauss1d):
    assert np.abs(apply_p_alpha(gauss1d, 1.0, 0.3).values - apply_heat(gauss1d, 0.3).values).max() < 1e-12


def test_constants_are_fixed_by_p_and_divided_by_s():
    g = Grid(2, 4.0, 16)
    c = Field.constant(g, 2.0)
    assert np.allclose(apply_p_alpha(c, 0.5, 1.0).values, 2.0)
    assert np.allclose(apply_s_alpha(c, 0.5, 1.0).values, 2.0 / math.gamma(1.5))


def test_multiplier_tables_shape():
    g = Grid(2, 4.0, 16)
    m = p_alpha_multipliers(g, 0.6, [0.1, 0.2, 0.4])
    assert m.shape == (3,) + g.laplace_symbol.shape
    s = s_alpha_multipliers(g, 0.6, [0.1])
    assert np.all((0 < m) & (m <= 1 + 1e-14))
    assert np.all(s > 0)


@settings(max_examples=20, deadline=None)
@given(alpha=st.floats(0.2, 1.0), t=st.floats(1e-3, 10.0))
def test_p_alpha_preserves_mass_and_positivity(alpha, t):
    g = Grid(1, 8.0, 128)
    f = Field(g, np.exp(-4 * g.radius**2))
    out = apply_p_alpha(f, alpha, t)
    assert out.mass() == pytest.approx(f.mass(), rel=1e-10)
    assert out.values.min() > -1e-12 * f.sup()
    assert out.sup() <= f.sup() * (1 + 1e-12)


def test_times_must_be_positive(gauss1d):
    with pytest.raises(DomainError):
        apply_p_alpha(gauss1d, 0.5, 0.0)
    with pytest.raises(DomainError):
        apply_s_alpha(gauss1d, 1.2, 1.0)


def test_check_box_warns_for_wide_support():
    g = Grid(1, 4.0, 64)
    f = Field(g, (g.radius < 3.5).astype(float))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert check_box(g, Field(g, (g.radius < 0.5).astype(float)), 0.1)
    with pytest.warns(RuntimeWarning):
        assert not check_box(g, f, 1.0)
