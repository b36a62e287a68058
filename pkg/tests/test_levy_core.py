import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from levyfield import levy_core as lc
from levyfield.exceptions import NondegeneracyError


def test_brownian_closed_form():
    e = lc.brownian(2)
    xi = np.array([[1.0, 2.0], [0.0, 0.0]])
    assert np.allclose(e(xi), [5.0, 0.0])


@pytest.mark.parametrize("alpha", [0.7, 1.0, 1.5])
def test_stable_triplet_matches_closed_form(alpha):
    e = lc.stable(alpha)
    xi = np.array([[0.3], [1.0], [4.0]])
    closed = lc.evaluate_psi(e, xi, form="closed")
    trip = lc.evaluate_psi(e, xi, form="triplet")
    assert np.allclose(closed, np.abs(xi[:, 0]) ** alpha, rtol=1e-10)
    assert np.allclose(trip, closed, rtol=1e-6, atol=1e-9)


def test_tempered_stable_triplet_matches_closed_form():
    e = lc.tempered_stable(1.5, 1.0)
    xi = np.array([[0.2], [1.0], [7.0]])
    assert np.allclose(lc.evaluate_psi(e, xi, form="triplet"),
                       lc.evaluate_psi(e, xi, form="closed"), rtol=1e-6)


@given(st.floats(0.3, 1.95), st.floats(-50, 50))
def test_stable_is_symmetric_and_nonnegative(alpha, x):
    e = lc.stable(alpha)
    v = e(np.array([[x], [-x]]))
    assert np.allclose(v[0], v[1])
    assert v[0].real >= 0


def test_beta_inf_estimates():
    assert abs(lc.estimate_beta_inf(lc.stable(1.5)) - 1.5) < 0.02
    assert abs(lc.estimate_beta_inf(lc.brownian(1)) - 2.0) < 0.02


def test_compound_poisson_is_degenerate():
    # Re Psi stays bounded, so no positive growth index is declared
    e = lc.compound_poisson()
    assert not e.assumption1_holds()
    assert e.asymptotics.beta_inf == 0.0
    assert np.all(np.real(e(np.logspace(0, 4, 41)[:, None])) <= 2 * sum(e.params["masses"]) + 1e-12)


def test_assumption2_brownian_value():
    r = lc.check_assumption2(lc.brownian(1), 0.5)
    assert r.finite
    assert abs(r.value - 4 / 3) < 1e-6


def test_assumptions_limiting_case():
    rep = lc.check_assumptions(lc.brownian(1), 0.5)
    assert not rep.assumption1_holds
    rep = lc.check_assumptions(lc.brownian(1), 0.5, limiting_case=True)
    assert rep.assumption1_holds and rep.assumption2_holds


def test_fourier_moment_brownian():
    # E|N(0, 2)|^0.5
    exact = math.sqrt(2) ** 0.5 * 2 ** 0.25 * math.gamma(0.75) / math.sqrt(math.pi)
    assert abs(lc.fractional_moment_fourier(lc.brownian(1), 1.0, 0.5) - exact) < 1e-6
    assert abs(exact - 0.9777410674) < 1e-9


def test_fourier_moment_cauchy():
    assert abs(lc.fractional_moment_fourier(lc.cauchy(1), 1.0, 0.5) - math.sqrt(2)) < 1e-6


@pytest.mark.parametrize("e", [lc.cauchy(1), lc.stable(1.5), lc.tempered_stable(1.5, 1.0)])
def test_moment_equivalence_agrees(e):
    for k0 in (0.3, 0.9):
        r = lc.verify_moment_equivalence(e, k0, replicas=20000)
        assert r.agree


def test_config_round_trip_and_unknown_keys():
    for e in (lc.stable(1.5), lc.tempered_stable(0.5, 2.0), lc.compound_poisson()):
        e2 = lc.exponent_from_config(e.to_config())
        xi = np.array([[0.5], [3.0]])
        assert np.allclose(e(xi), e2(xi))
    with pytest.raises(KeyError):
        lc.exponent_from_config({"kind": "stable", "alpha": 1.5, "alhpa": 1})


def test_invalid_parameters():
    with pytest.raises(ValueError):
        lc.stable(2.5)
    with pytest.raises(ValueError):
        lc.tempered_stable(1.0, 1.0)
