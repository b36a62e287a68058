"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line that is printed in the terminal summary.
"""

import filecmp
import math
import os
import time

import numpy as np
import pytest
from scipy import stats

from levyfield import cli
from levyfield import levy_core as lc
from levyfield import moments as mo
from levyfield import spde_sim as sp
from levyfield import spectral_noise as sn
from levyfield import transition_density as td

DENSITY_CATALOG = [
    lc.brownian(1), lc.cauchy(1), lc.stable(1.5), lc.stable(0.7), lc.stable(1.9),
    lc.tempered_stable(1.5, 1.0), lc.tempered_stable(0.5, 2.0),
]


def test_density_oracle(record_criterion):
    t0 = time.time()
    td.clear_density_cache()
    pb = td.invert_density(lc.brownian(1), 1.0).interpolate(0.0)
    pc = td.invert_density(lc.cauchy(1), 1.0).interpolate(0.0)
    worst = 0.0
    for e in DENSITY_CATALOG:
        for t in (0.1, 1.0):
            g = td.invert_density(e, t)
            worst = max(worst, abs(g.riemann_sum() + g.boundary_mass - 1))
    elapsed = time.time() - t0
    ok = (abs(pb - (4 * math.pi) ** -0.5) <= 1e-6 and abs(pc - 1 / math.pi) <= 1e-6
          and worst <= 1e-6 and elapsed < 10)
    record_criterion("density oracle", ok,
                     f"brownian p_1(0)={pb:.10f} cauchy p_1(0)={pc:.10f} "
                     f"max |mass-1|={worst:.2e} time={elapsed:.1f}s")
    assert ok


def _gauss_l1_space(t, h):
    return 2 * (2 * stats.norm.cdf(h / (2 * math.sqrt(2 * t))) - 1)


def test_l1_increment_suite(record_criterion):
    t0 = time.time()
    ts = [0.25, 0.5, 1.0, 2.0]
    grid = np.logspace(-3, 0, 8)
    details, ok = [], True
    for e in (lc.brownian(1), lc.cauchy(1)):
        params = td.L1BoundParams(1.0, 0.5, 0.5, 0.245, 0.5, 1, e.asymptotics.beta_inf)
        for kw in ({"h_grid": grid}, {"eps_grid": grid}):
            r = td.fit_l1_exponents(e, params, ts, **kw)
            good = r.holds and math.isfinite(r.fitted_C) and r.max_value <= 2
            ok = ok and good
            details.append(f"{e.name}/{r.direction}: C={r.fitted_C:.3g} max={r.max_value:.3f}")
    b = lc.brownian(1)
    v_space = td.l1_increment_space(b, 1.0, 1.0).value
    ok = ok and abs(v_space - 0.553) <= 0.005 and abs(v_space - _gauss_l1_space(1, 1)) <= 1e-6
    # temporal: Gaussian closed form for N(0, 2t) vs N(0, 2(t + eps))
    v_time = td.l1_increment_time(b, 1.0, 1.0).value
    s1, s2 = math.sqrt(2.0), 2.0
    xc = math.sqrt(2 * math.log(s2 / s1) / (1 / s1 ** 2 - 1 / s2 ** 2))
    exact_time = 2 * 2 * (stats.norm.cdf(xc / s1) - stats.norm.cdf(xc / s2))
    ok = ok and abs(v_time - exact_time) <= 1e-6
    elapsed = time.time() - t0
    ok = ok and elapsed < 120
    record_criterion("L1 increment suite", ok,
                     "; ".join(details) + f"; brownian space(1,1)={v_space:.5f} "
                     f"time(1,1)={v_time:.5f} (exact {exact_time:.5f}) time={elapsed:.0f}s")
    assert ok


CATALOG = [lc.brownian(1), lc.cauchy(1), lc.stable(1.5), lc.tempered_stable(1.5, 1.0),
           lc.compound_poisson()]


def test_moments_suite(record_criterion):
    t0 = time.time()
    est = mo.estimate_fractional_moment(lc.cauchy(1), 1.0, 0.5, replicas=1_000_000, seed=11)
    z = (est.mc_value - math.sqrt(2)) / est.mc_stderr
    g = mo.verify_growth(lc.stable(1.5), 0.75, np.logspace(-3, 0, 7), 0.3675, seed=12)
    ok = abs(z) <= 3 and abs(g.slope - 0.5) <= 0.03
    lines = [f"cauchy E|X|^0.5={est.mc_value:.5f}+-{est.mc_stderr:.5f} (z={z:.2f})",
             f"stable(1.5) slope={g.slope:.4f}"]
    for k, e in enumerate(CATALOG):
        r = mo.verify_growth(e, 0.5, np.logspace(-3, 0, 7), 0.49 * 0.5, seed=100 + k)
        ok = ok and r.holds and math.isfinite(r.fitted_C)
        lines.append(f"{e.name}: C={r.fitted_C:.3g} holds={r.holds}")
    elapsed = time.time() - t0
    ok = ok and elapsed < 180
    record_criterion("moments suite", ok, "; ".join(lines) + f"; time={elapsed:.0f}s")
    assert ok


def _sweep_cases():
    procs = [lc.stable(1.2), lc.stable(1.5), lc.stable(1.8), lc.tempered_stable(1.5, 1.0)]
    noises = [sn.riesz_noise(0.25), sn.riesz_noise(0.5), sn.riesz_noise(0.75),
              sn.white_noise(1), sn.finite_noise(1)]
    return [(p, q) for p in procs for q in noises]


def test_indices_suite(record_criterion):
    t0 = time.time()
    a = sn.compute_indices(sn.white_noise(1), lc.brownian(1))
    b = sn.compute_indices(sn.riesz_noise(0.5), lc.stable(1.5))
    ok = (np.allclose([a.iota_u, a.iota_m, a.iota_l], 0.5, atol=1e-3)
          and np.allclose([b.iota_u, b.iota_m, b.iota_l], [2 / 3, 2 / 3, 0.5], atol=1e-3))
    cases = _sweep_cases()
    bad = 0
    for p, q in cases:
        idx = sn.compute_indices(q, p)
        rep = sn.verify_lemma31(q, p)
        if not (idx.iota_l <= idx.iota_m <= idx.iota_u and rep.positivity_agree):
            bad += 1
    elapsed = time.time() - t0
    ok = ok and bad == 0 and len(cases) == 20 and elapsed < 30
    record_criterion("indices suite", ok,
                     f"white+brownian={a.as_dict()} riesz+stable="
                     f"({b.iota_u:.4f}, {b.iota_m:.4f}, {b.iota_l:.4f}) "
                     f"sweep failures={bad}/{len(cases)} time={elapsed:.1f}s")
    assert ok


@pytest.mark.slow
def test_spde_additive_benchmark(record_criterion):
    from _spde_benchmark import TARGET_VAR, run
    t0 = time.time()
    fine = run(1e-4)
    coarse = run(2e-4)
    elapsed = time.time() - t0
    v = fine["variance"]
    s, tm = fine["space"], fine["time"]
    ds = abs(s.exponent - coarse["space"].exponent)
    dtm = abs(tm.exponent - coarse["time"].exponent)
    ok = (abs(v / TARGET_VAR - 1) <= 0.05 and abs(tm.exponent - 0.25) <= 0.03
          and abs(s.exponent - 0.5) <= 0.03 and ds < 0.02 and dtm < 0.02
          and tm.ci_width <= 0.03 and elapsed < 1200)
    record_criterion("SPDE additive benchmark", ok,
                     f"Var u(1,x)={v:.4f} (target {TARGET_VAR:.4f}) "
                     f"time exponent={tm.exponent:.4f} CI=({tm.ci[0]:.4f},{tm.ci[1]:.4f}) "
                     f"space exponent={s.exponent:.4f} CI=({s.ci[0]:.4f},{s.ci[1]:.4f}) "
                     f"refinement shifts space={ds:.4f} time={dtm:.4f} time={elapsed:.0f}s")
    assert ok


def test_paper_range_arithmetic(record_criterion):
    r = sp.paper_ranges(lc.stable(1.5), sn.riesz_noise(0.5), rho=0.6, kappa0=0.7)
    # independent recomputation of the targets
    n, b, k0, iu = 1, 1.5, 0.7, 2 / 3
    frac = k0 / (n + k0)
    K = ((n + 1) / b + k0 / 2) * frac
    Kt = ((n + 2) / b + k0 / 2) * frac
    a_end = min(frac, min(iu, K) * b / (n + 1))
    ok = (abs(r.alpha_end - a_end) <= 1e-4 and abs(r.K - K) <= 1e-4
          and abs(r.K_tilde - Kt) <= 1e-4 and abs(a_end - 0.4118) <= 1e-4
          and abs(K - 0.693) <= 5e-4 and abs(Kt - 0.9676) <= 1e-4)
    record_criterion("paper-range arithmetic", ok,
                     f"alpha_end={r.alpha_end:.6f} K={r.K:.6f} K~={r.K_tilde:.6f}")
    assert ok


def _cli_suite(out):
    cmds = [
        ["indices", "--process", "brownian", "--noise", "white"],
        ["indices", "--process", "stable:alpha=1.5", "--noise", "riesz:beta=0.5"],
        ["moments", "--process", "cauchy", "--kappa0", "0.5", "--t-grid", "0.01,0.1,1",
         "--replicas", "20000", "--seed", "5"],
        ["density", "--process", "stable:alpha=1.5", "--t", "0.5", "--emit", "json,csv"],
    ]
    codes = []
    for k, c in enumerate(cmds):
        codes.append(cli.main(c + ["--out", os.path.join(out, str(k))]))
    return codes


def test_determinism(record_criterion, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    ca, cb = _cli_suite(str(a)), _cli_suite(str(b))
    same = True
    checked = 0
    for k in range(len(ca)):
        for name in os.listdir(a / str(k)):
            if "metadata" in name:
                continue
            checked += 1
            same = same and filecmp.cmp(a / str(k) / name, b / str(k) / name, shallow=False)
    model = sp.ModelSpec(lc.brownian(1), sn.white_noise(1), sp.Nonlinearity.zero(),
                         sp.Nonlinearity.linear(0.5), sp.InitialCondition.constant(1.0))
    lat = sp.TorusLattice(1, 128, 6.0)
    r1 = sp.simulate(model, 0.05, 1e-3, lat, 300, seed=9, block_size=128)
    r2 = sp.simulate(model, 0.05, 1e-3, lat, 300, seed=9, block_size=128)
    same_sim = np.array_equal(r1.snapshots, r2.snapshots) and np.array_equal(r1.recording, r2.recording)
    ok = same and same_sim and ca == [0, 0, 0, 0] and cb == ca
    record_criterion("determinism", ok,
                     f"{checked} report files byte-identical={same}, simulation identical={same_sim}, "
                     f"exit codes={ca}")
    assert ok
