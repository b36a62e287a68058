import math

import numpy as np
import pytest
from scipy import stats

from levyfield import levy_core as lc
from levyfield import transition_density as td
from levyfield.exceptions import InsufficientGridError


def test_brownian_density_matches_gaussian():
    g = td.invert_density(lc.brownian(1), 0.5)
    x = g.axis()
    assert np.max(np.abs(g.values - stats.norm.pdf(x, scale=1.0))) < 1e-9


def test_cauchy_density_matches_closed_form():
    g = td.invert_density(lc.cauchy(1), 1.0)
    x = g.axis()
    assert np.max(np.abs(g.values - 1 / (math.pi * (1 + x ** 2)))) < 1e-8


def test_derivative_of_brownian():
    g = td.invert_density(lc.brownian(1), 1.0, derivative=(0, 1))
    x = g.axis()
    exact = -x / 2 * stats.norm.pdf(x, scale=math.sqrt(2))
    assert np.max(np.abs(g.values - exact)) < 1e-8


def test_time_derivative_solves_heat_equation():
    e = lc.brownian(1)
    dt_ = td.invert_density(e, 1.0, derivative=(1, 0))
    dxx = td.invert_density(e, 1.0, derivative=(0, 2))
    assert np.max(np.abs(dt_.values - dxx.values)) < 1e-8


def test_density_2d_brownian_peak():
    g = td.invert_density(lc.brownian(2), 1.0)
    J = (g.values.shape[0] - 1) // 2
    assert abs(g.values[J, J] - 1 / (4 * math.pi)) < 1e-6


def test_no_density_for_compound_poisson():
    with pytest.raises(ValueError):
        td.invert_density(lc.compound_poisson(), 1.0)


def test_l1_space_closed_form_and_bound():
    b = lc.brownian(1)
    for t, h in [(1.0, 1.0), (0.25, 0.1)]:
        v = td.l1_increment_space(b, t, h).value
        exact = 2 * (2 * stats.norm.cdf(h / (2 * math.sqrt(2 * t))) - 1)
        assert abs(v - exact) < 1e-6
    assert td.l1_increment_space(lc.cauchy(1), 0.1, 1.0).value <= 2


def test_l1_time_brownian_values():
    b = lc.brownian(1)
    assert abs(td.l1_increment_time(b, 1.0, 1.0).value - 0.33213) < 1e-4
    assert abs(td.l1_increment_time(b, 1.0, 0.5).value - 0.19555) < 1e-4


def test_l1_fit_rejects_short_grid():
    params = td.L1BoundParams(1.0, 0.5, 0.5, 0.2, 0.5, 1, 2.0)
    with pytest.raises(InsufficientGridError):
        td.fit_l1_exponents(lc.brownian(1), params, [1.0], h_grid=[0.1, 0.2, 0.4])


def test_l1_bound_params_validation():
    with pytest.raises(ValueError):
        td.L1BoundParams(1.0, 0.5, 0.5, 0.3, 0.5, 1, 2.0)


def test_sup_scaling_law_brownian():
    e = lc.brownian(1)
    a = td.sup_increment_space(e, 0.5, [0.01]).value
    b = td.sup_increment_space(e, 2.0, [0.02]).value
    assert abs(b - a / 2) < 1e-6 * a


def test_sup_bound_fit():
    r = td.fit_sup_bound(lc.stable(1.5), [0.1, 1.0], np.logspace(-3, -1, 3), orders=(0, 1))
    assert r.holds and math.isfinite(r.fitted_C)


@pytest.mark.parametrize("e", [lc.brownian(1), lc.cauchy(1)])
def test_chapman_kolmogorov(e):
    assert td.chapman_kolmogorov_error(e, 0.5, 0.5) < 1e-7
