import math

import numpy as np
import pytest
from sklearn.base import clone

from levyfield import levy_core as lc
from levyfield import moments as mo
from levyfield.exceptions import InsufficientReplicasError


def test_brownian_variance():
    x = mo.sample_increments(lc.brownian(1), 1.0, 200_000, seed=1)
    assert abs(x.var() - 2.0) < 0.03


def test_cauchy_sampler_median():
    x = mo.sample_increments(lc.cauchy(1), 2.0, 200_000, seed=2)
    assert abs(np.median(np.abs(x)) - 2.0) < 0.03


def test_stable_2d_characteristic_function():
    e = lc.stable(1.5, 2)
    x = mo.sample_increments(e, 1.0, 200_000, seed=3)
    xi = np.array([0.6, -0.8])
    emp = np.mean(np.cos(x @ xi))
    assert abs(emp - math.exp(-1.0)) < 0.01


def test_compound_poisson_zero_jumps():
    x = mo.sample_increments(lc.compound_poisson(), 1.0, 200_000, seed=4)
    # no drift correction for atoms at |x| <= 1 leaves -t*compensator when no jumps
    vals, counts = np.unique(np.round(x, 12), return_counts=True)
    assert abs(counts.max() / x.size - math.exp(-1)) < 0.005


def test_tempered_stable_moment_matches_fourier():
    e = lc.tempered_stable(1.5, 1.0)
    est = mo.estimate_fractional_moment(e, 1.0, 0.5, replicas=200_000, seed=5)
    exact = lc.fractional_moment_fourier(e, 1.0, 0.5)
    assert abs(est.mc_value - exact) < 4 * est.mc_stderr


def test_seed_determinism_and_thread_independence(monkeypatch):
    e = lc.stable(1.5)
    monkeypatch.setenv("LEVYFIELD_THREADS", "1")
    a = mo.sample_increments(e, 1.0, 150_000, seed=7)
    monkeypatch.setenv("LEVYFIELD_THREADS", "3")
    b = mo.sample_increments(e, 1.0, 150_000, seed=7)
    assert np.array_equal(a, b)


def test_estimator_api():
    est = mo.FractionalMomentEstimator(kappa0=0.5)
    assert clone(est).get_params() == est.get_params()
    x = mo.sample_increments(lc.brownian(1), 1.0, 50_000, seed=8)
    est.fit(x)
    assert abs(est.moment_ - 0.9777410674) < 4 * est.stderr_


def test_t_zero_and_replica_floor():
    e = lc.cauchy(1)
    assert mo.estimate_fractional_moment(e, 0.0, 0.5).mc_value == 0.0
    with pytest.raises(InsufficientReplicasError):
        mo.estimate_fractional_moment(e, 1.0, 0.5, replicas=100)


def test_kappa0_above_tail_index_rejected():
    with pytest.raises(ValueError):
        mo.estimate_fractional_moment(lc.stable(0.7), 1.0, 0.8, replicas=20000)


def test_integral_bound_ratio_stable_for_self_similar():
    r = mo.verify_integral_bound(lc.stable(1.5), 0.5, np.logspace(-2, 0, 3), replicas=50_000)
    assert r.holds and r.ratio_spread < 0.2


def test_growth_brownian():
    r = mo.verify_growth(lc.brownian(1), 0.5, np.logspace(-3, 0, 7), 0.245, replicas=100_000)
    assert r.holds
    assert abs(r.slope - 0.25) < 0.01
