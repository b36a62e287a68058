import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from levyfield import levy_core as lc
from levyfield import spectral_noise as sn
from levyfield.exceptions import EnvelopeError


def test_dalang_examples():
    d = sn.dalang_check(sn.white_noise(1, 2.0), lc.brownian(1))
    assert d.finite and abs(d.value - 2 * math.pi) < 1e-8
    assert not sn.dalang_check(sn.white_noise(2), lc.brownian(2)).finite
    d = sn.dalang_check(sn.riesz_noise(0.5), lc.stable(1.5))
    exact = 2 * (2 / 3) * math.pi / math.sin(math.pi / 3)
    assert d.finite and abs(d.value - exact) < 1e-6


def test_dalang_needs_envelopes():
    noise = sn.custom_noise(lambda r: np.exp(-r), 1)
    with pytest.raises(EnvelopeError):
        sn.dalang_check(noise, lc.brownian(1))


@given(st.floats(0.05, 1.45), st.floats(0.05, 0.4))
def test_dalang_monotone_in_riesz_beta(beta, step):
    e = lc.stable(1.5)
    small = sn.dalang_check(sn.riesz_noise(beta), e).finite
    big = sn.dalang_check(sn.riesz_noise(beta + step), e).finite
    assert small or not big


def test_indices_examples():
    a = sn.compute_indices(sn.white_noise(1), lc.brownian(1))
    assert (a.iota_u, a.iota_m, a.iota_l) == (0.5, 0.5, 0.5)
    b = sn.compute_indices(sn.riesz_noise(0.5), lc.stable(1.5))
    assert np.allclose([b.iota_u, b.iota_m, b.iota_l], [2 / 3, 2 / 3, 0.5])
    c = sn.compute_indices(sn.finite_noise(1), lc.stable(0.8))
    assert (c.iota_u, c.iota_m, c.iota_l) == (1.0, 1.0, 1.0)


def test_bisection_agrees_with_closed_form():
    b = sn.compute_indices(sn.riesz_noise(0.5), lc.stable(1.5), method="bisection")
    assert np.allclose([b.iota_u, b.iota_m, b.iota_l], [2 / 3, 2 / 3, 0.5], atol=1e-3)
    assert not b.indeterminate


def test_indeterminate_outside_power_law_catalog():
    noise = sn.custom_noise(lambda r: 1 / ((1 + r) * np.log(math.e + r)), 1)
    idx = sn.compute_indices(noise, lc.brownian(1))
    assert idx.indeterminate
    assert all(lo < hi for lo, hi in idx.intervals)


def test_iota_u_zero_with_log_envelope():
    noise = sn.custom_noise(lambda r: r ** 0.5 / np.log(math.e + r) ** 2, 1, zero_exponent=0.5,
                            inf_exponent=0.5, inf_log_exponent=-2)
    assert sn.dalang_check(noise, lc.stable(1.5)).finite
    assert sn.compute_indices(noise, lc.stable(1.5)).iota_u == 0


def test_lemma31_reports():
    r = sn.verify_lemma31(sn.white_noise(1), lc.brownian(1), limiting_case=True)
    assert r.exists == (True, True, True) and r.values_agree
    r = sn.verify_lemma31(sn.riesz_noise(0.5), lc.stable(1.5))
    assert r.positivity_agree and not r.values_agree
    with pytest.raises(ValueError):
        sn.verify_lemma31(sn.white_noise(1), lc.brownian(1))


def test_tempered_order_and_validation():
    assert sn.white_noise(1).tempered_order == 1
    assert sn.riesz_noise(0.5).tempered_order == 1
    assert sn.riesz_noise(0.5).riesz_in_range
    with pytest.raises(ValueError):
        sn.custom_noise(lambda r: r ** -2.0, 1, zero_exponent=-1.5, inf_exponent=-2.0)


def test_white_synthesis_variance_and_decorrelation():
    lat = sn.TorusLattice(1, 64, 6.0)
    dt = 1e-3
    noise = sn.white_noise(1, 1 / (2 * math.pi))
    x = sn.synthesize_noise_increment(noise, lat, dt, seed=1, batch=10000)
    v = x[:, 0] ** 2
    assert abs(v.mean() - dt / lat.dx) < 3 * v.std() / 100
    c = x[:, 0] * x[:, 5]
    assert abs(c.mean()) < 3 * c.std() / 100


def test_riesz_synthesis_matches_lattice_kernel():
    lat = sn.TorusLattice(1, 64, 6.0)
    noise = sn.riesz_noise(0.5)
    x = sn.synthesize_noise_increment(noise, lat, 1.0, seed=2, batch=10000)
    kern = sn.lattice_covariance(noise, lat)
    c1, c2 = x[:, 0] * x[:, 1], x[:, 0] * x[:, 2]
    ratio = c1.mean() / c2.mean()
    # delta-method standard error of the ratio
    g = np.array([1 / c2.mean(), -c1.mean() / c2.mean() ** 2])
    se = math.sqrt(g @ np.cov(np.stack([c1, c2])) @ g / 10000)
    assert abs(ratio - kern[1] / kern[2]) < 3 * se


def test_mode_variances_match_weights():
    lat = sn.TorusLattice(1, 32, 6.0)
    noise = sn.riesz_noise(0.5)
    dt = 0.01
    x = sn.synthesize_noise_increment(noise, lat, dt, seed=3, batch=10000)
    f = np.fft.rfft(x, axis=1) / lat.N
    w, zero = sn.dual_weights(noise, lat)
    p = np.abs(f) ** 2
    m, se = p.mean(0)[1:], p.std(0)[1:] / 100
    assert np.all(np.abs(m - dt * w[1:]) < 3 * se + 1e-15)
    assert zero == 0.0


def test_synthesis_determinism():
    lat = sn.TorusLattice(2, 16, 6.0)
    noise = sn.white_noise(2)
    a = sn.synthesize_noise_increment(noise, lat, 0.1, seed=5)
    b = sn.synthesize_noise_increment(noise, lat, 0.1, seed=5)
    assert np.array_equal(a, b) and a.shape == (16, 16)
