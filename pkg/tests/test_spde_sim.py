import math

import numpy as np
import pytest

from levyfield import levy_core as lc
from levyfield import spde_sim as sp
from levyfield import spectral_noise as sn
from levyfield import transition_density as td
from levyfield.exceptions import InsufficientReplicasError, NoAdmissibleRangeError

Z = sp.Nonlinearity.zero()


def _model(**kw):
    base = dict(exponent=lc.brownian(1), noise=sn.white_noise(1, 1 / (2 * math.pi)), b=Z,
                sigma=Z, u0=sp.InitialCondition.sinusoid())
    base.update(kw)
    return sp.ModelSpec(**base)


def test_single_mode_semigroup():
    lat = sp.TorusLattice(1, 256, 6.0)
    r = sp.simulate(_model(), 1.0, 1e-2, lat, 1)
    x = lat.coordinates()
    exact = math.exp(-(2 * math.pi / 6) ** 2) * np.sin(2 * math.pi * x / 6)
    assert np.max(np.abs(r.final[0] - exact)) < 1e-10


def test_semigroup_matches_density_convolution():
    lat = sp.TorusLattice(1, 512, 6.0)
    u0 = sp.InitialCondition.weierstrass(0.4)
    e = lc.tempered_stable(1.5, 1.0)
    r = sp.simulate(_model(exponent=e, u0=u0), 0.2, 0.05, lat, 1)
    g = td.invert_density(e, 0.2, td.Lattice(1, 60.0, lat.dx))
    v0 = u0.evaluate(lat)
    # periodic convolution of u0 with p_t
    k = g.values * lat.dx
    J = (k.size - 1) // 2
    conv = np.zeros(lat.N)
    for off, w in zip(range(-J, J + 1), k):
        conv += w * np.roll(v0, off)
    assert np.max(np.abs(conv - r.final[0])) < 1e-6


def test_linear_drift_constant_initial():
    lat = sp.TorusLattice(1, 64, 6.0)
    m = _model(b=sp.Nonlinearity.linear(0.7), u0=sp.InitialCondition.constant(2.0))
    r = sp.simulate(m, 1.0, 1e-3, lat, 1)
    assert np.max(np.abs(r.final - 2 * math.exp(0.7))) < 1e-8


def test_multiplicative_mean_is_preserved():
    lat = sp.TorusLattice(1, 128, 6.0)
    m = _model(sigma=sp.Nonlinearity.linear(1.0), u0=sp.InitialCondition.constant(1.0))
    r = sp.simulate(m, 0.2, 1e-3, lat, 400, seed=3)
    f = r.final.mean(axis=1)
    assert abs(f.mean() - 1.0) < 3 * f.std() / math.sqrt(f.size)
    assert r.moments.finite


def test_clipped_drift_runs_and_is_bounded():
    lat = sp.TorusLattice(1, 64, 6.0)
    m = _model(b=sp.Nonlinearity.clipped_affine(2.0, 0.0, -1.0, 1.0),
               sigma=sp.Nonlinearity.constant(0.5))
    r = sp.simulate(m, 0.1, 1e-3, lat, 4, seed=1, keep_paths=2, path_stride=10)
    assert np.all(np.isfinite(r.snapshots))
    assert r.paths[0].values.shape == (11, 64)


def test_step_mild_matches_simulate_single_step():
    lat = sp.TorusLattice(1, 64, 6.0)
    m = _model(sigma=sp.Nonlinearity.constant(1.0))
    u0 = m.u0.evaluate(lat)
    a = sp.step_mild(u0, m, 1e-3, seed=4, lattice=lat)
    b = sp.step_mild(u0, m, 1e-3, seed=4, lattice=lat)
    assert np.array_equal(a, b) and a.shape == u0.shape


def test_lipschitz_check():
    with pytest.raises(ValueError):
        sp.Nonlinearity("linear", slope=2.0, lipschitz=1.0)
    assert sp.Nonlinearity.clipped_affine(3.0).lipschitz == 3.0


def test_rho_must_be_below_kappa0():
    with pytest.raises(ValueError):
        _model(u0=sp.InitialCondition.weierstrass(0.6), kappa0=0.5)


def test_two_dimensional_additive_variance():
    lat = sp.TorusLattice(2, 32, 6.0)
    noise = sn.finite_noise(2, c=1.0, scale=2.0)
    m = sp.ModelSpec(lc.stable(1.5, 2), noise, Z, sp.Nonlinearity.constant(1.0),
                     sp.InitialCondition.constant(0.0))
    r = sp.simulate(m, 0.5, 0.05, lat, 600, seed=2, site_stride=8)
    w, _ = sn.dual_weights(noise, lat)
    xi = lat.frequency_grid()
    g = np.real(lc.stable(1.5, 2)(xi.reshape(-1, 2))).reshape(lat.half_shape)
    var_k = np.where(g > 0, -np.expm1(-2 * 0.5 * g) / (2 * np.where(g > 0, g, 1)), 0.5)
    exact = float((lat.mode_counts() * w * var_k).sum())
    emp = r.final.var(axis=0).mean()
    assert abs(emp / exact - 1) < 0.1


def test_lvf1_round_trip(tmp_path):
    fp = sp.FieldPath(np.random.default_rng(0).normal(size=(5, 8)), 0.1, 0.25, 1.0, seed=42)
    path = tmp_path / "p.lvf1"
    sp.write_lvf1(path, fp)
    raw = path.read_bytes()
    assert raw[:4] == b"LVF1" and len(raw) == 4 + 48 + 5 * 8 * 8
    back = sp.read_lvf1(path)
    assert back == fp
    sp.save_paths(tmp_path / "d", [fp, fp])
    assert len(sp.load_paths(tmp_path / "d")) == 2
    fp.to_csv(tmp_path / "p.csv")
    assert (tmp_path / "p.csv").read_text().count("\n") == 6


def test_paper_ranges_and_errors():
    r = sp.paper_ranges(lc.stable(1.5), sn.riesz_noise(0.5), 0.6, 0.7)
    assert abs(r.alpha_end - 0.7 / 1.7) < 1e-12
    assert abs(r.beta_end - 1 / 3) < 1e-12 and abs(r.beta_end_printed - 0.7 / 1.7) < 1e-12
    assert abs(r.space_exponent - r.alpha_end / 2) < 1e-12
    noise = sn.custom_noise(lambda q: q ** 0.5 / np.log(math.e + q) ** 2, 1, zero_exponent=0.5,
                            inf_exponent=0.5, inf_log_exponent=-2)
    with pytest.raises(NoAdmissibleRangeError):
        sp.paper_ranges(lc.stable(1.5), noise, 0.6, 0.7)
    with pytest.raises(ValueError):
        sp.paper_ranges(lc.brownian(1), sn.white_noise(1), 0.6, 0.7)


def test_holder_preconditions():
    lat = sp.TorusLattice(1, 128, 6.0)
    m = _model(sigma=sp.Nonlinearity.constant(1.0))
    r = sp.simulate(m, 0.1, 1e-3, lat, 50, seed=1)
    with pytest.raises(InsufficientReplicasError):
        sp.estimate_holder(r, "space")


def test_holder_estimate_small_additive():
    lat = sp.TorusLattice(1, 1024, 6.0)
    m = _model(sigma=sp.Nonlinearity.constant(1.0), u0=sp.InitialCondition.constant(0.0))
    r = sp.simulate(m, 0.5, 0.01, lat, 600, seed=3)
    rep = sp.estimate_holder(r, "space")
    assert abs(rep.exponent - 0.5) < 0.05 and rep.ci[0] < rep.exponent < rep.ci[1]
    pr = sp.paper_ranges(lc.brownian(1), sn.white_noise(1), 0.9, 1.9 - 1e-9, limiting_case=True,
                         check=False)
    assert sp.estimate_holder(r, "space", paper_range=pr).consistent
