"""Command line front end: ``levyfield <subcommand> ...``.

Every run writes ``<subcommand>_report.json`` (deterministic for a given
config and seed) and ``<subcommand>_metadata.json`` (timestamps, argv, output directory).
Exit status: 0 when all checked invariants hold, 1 on a violation, 2 on a
configuration error.
"""

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from . import levy_core as lc
from . import moments as mo
from . import spde_sim as sp
from . import spectral_noise as sn
from . import transition_density as td
from .config import ExperimentConfig, dumps, load_config
from .exceptions import ConfigError, LevyFieldError

__all__ = ["main", "run", "parse_spec", "DEFAULT_PROCESSES"]

DEFAULT_PROCESSES = ("cauchy", "stable:alpha=1.5", "tempered_stable:alpha=1.5,lam=1")
LEMMAS = ("2.1", "2.2", "2.3", "2.4", "2.5", "3.1")


def _value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_spec(text):
    """"stable:alpha=1.5,n=1" or a JSON object -> dict with a "kind" key."""
    if isinstance(text, dict):
        return dict(text)
    text = text.strip()
    if text.startswith("{"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON spec: {exc}") from None
    kind, _, rest = text.partition(":")
    d = {"kind": kind}
    for item in filter(None, rest.split(",")):
        k, eq, v = item.partition("=")
        if not eq:
            raise ConfigError(f"malformed spec item {item!r}")
        d[k.strip()] = _value(v.strip())
    return d


def _exponent(spec):
    try:
        return lc.exponent_from_config(parse_spec(spec))
    except KeyError as exc:
        raise ConfigError(exc.args[0]) from None


def _noise(spec, n):
    d = parse_spec(spec)
    d.setdefault("n", n)
    try:
        return sn.noise_from_config(d)
    except KeyError as exc:
        raise ConfigError(exc.args[0]) from None


# ---------------------------------------------------------------------------
# pipelines: each returns (report, csv_rows or None, violations)
# ---------------------------------------------------------------------------

def _density(cfg):
    b = cfg.block("density")
    e = _exponent(cfg.process or "brownian")
    t = float(b.get("t", 1.0))
    lat = None
    if "half_width" in b or "dx" in b:
        base = td.default_lattice(e, t)
        lat = td.Lattice(e.n, float(b.get("half_width", base.half_width)), float(b.get("dx", base.dx)))
    g = td.invert_density(e, t, lat, derivative=b.get("derivative"))
    rep = {"process": e.to_config(), "t": t, "dx": g.dx, "half_width": g.half_width,
           "derivative": list(g.derivative), "inversion_tail_error": g.inversion_tail_error,
           "alias_error": g.alias_error, "boundary_mass": g.boundary_mass,
           "riemann_sum": g.riemann_sum()}
    bad = []
    if e.n == 1:
        rep["value_at_0"] = float(g.interpolate(0.0))
    if not any(g.derivative):
        lo, hi = g.normalization_interval()
        rep["normalization_interval"] = [lo, hi]
        ok = lo - 1e-6 <= rep["riemann_sum"] <= hi + 1e-6
        if not ok:
            bad.append({"record": "normalization", "value": rep["riemann_sum"]})
    if "h" in b:
        h = np.zeros(e.n)
        h[0] = float(b["h"])
        inc = td.l1_increment_space(e, t, h)
        rep["l1_space"] = {"h": float(b["h"]), "value": inc.value, "upper": inc.upper}
        if inc.value > 2 + 1e-9:
            bad.append({"record": "l1_space", "value": inc.value})
    if "eps" in b:
        inc = td.l1_increment_time(e, t, float(b["eps"]))
        rep["l1_time"] = {"eps": float(b["eps"]), "value": inc.value, "upper": inc.upper}
        if inc.value > 2 + 1e-9:
            bad.append({"record": "l1_time", "value": inc.value})
    rows = g.to_rows()
    header = [f"x{i + 1}" for i in range(e.n)] if e.n > 1 else ["x"]
    return rep, (header + ["p"], rows), bad


def _moments(cfg):
    b = cfg.block("moments")
    e = _exponent(cfg.process or "cauchy")
    k0 = float(b.get("kappa0", 0.5))
    reps = int(b.get("replicas", 1_000_000))
    grid = b.get("t_grid")
    if grid is None:
        grid = [float(b.get("t", 1.0))]
    rows, recs = [], []
    seeds = np.random.SeedSequence(cfg.seed).generate_state(len(grid), dtype=np.uint64)
    for t, s in zip(grid, seeds):
        est = mo.estimate_fractional_moment(e, float(t), k0, reps, seed=int(s))
        recs.append({"t": est.t, "kappa0": k0, "mc_value": est.mc_value, "mc_stderr": est.mc_stderr,
                     "integral_bound": est.integral_bound, "method": est.method})
        rows.append([est.t, est.mc_value, est.mc_stderr, est.integral_bound])
    ratios = [r["mc_value"] / r["integral_bound"] for r in recs if r["integral_bound"]]
    C = max(ratios) if ratios else None
    for r in recs:
        r["fitted_C"] = C
    rep = {"process": e.to_config(), "estimates": recs, "fitted_C": C}
    bad = []
    if C is None or not math.isfinite(C):
        bad.append({"record": "integral_bound", "value": C})
    if len(grid) >= 3:
        kappa = float(b.get("kappa", 0.49 * k0))
        g = mo.verify_growth(e, k0, grid, kappa, replicas=reps, seed=cfg.seed)
        rep["growth"] = {"kappa": kappa, "fitted_C": g.fitted_C, "slope": g.slope,
                         "slope_stderr": g.slope_stderr, "exact_slope": g.exact_slope,
                         "holds": g.holds, "failures": list(g.failures)}
        if not g.holds:
            bad.append({"record": "growth", "failures": list(g.failures)})
    return rep, (["t", "mc_value", "mc_stderr", "integral_bound"], np.array(rows)), bad


def _limiting(e, flag):
    return bool(flag) or e.name == "brownian"


def _indices(cfg):
    b = cfg.block("indices")
    e = _exponent(cfg.process or "brownian")
    nz = _noise(cfg.noise or "white", e.n)
    d = sn.dalang_check(nz, e)
    rep = {"process": e.to_config(), "noise": nz.to_config(),
           "dalang": {"finite": d.finite, "value": d.value}}
    bad = []
    if not d.finite:
        bad.append({"record": "dalang", "value": d.value})
        return rep, None, bad
    idx = sn.compute_indices(nz, e, method=b.get("method", "auto"))
    rep.update(iota_u=idx.iota_u, iota_m=idx.iota_m, iota_l=idx.iota_l, method=idx.method,
               indeterminate=idx.indeterminate)
    l31 = sn.verify_lemma31(nz, e, limiting_case=_limiting(e, b.get("limiting_case")))
    rep["lemma31"] = {"positivity_agree": l31.positivity_agree, "values_agree": l31.values_agree}
    if not (idx.iota_l <= idx.iota_m + 1e-12 <= idx.iota_u + 2e-12):
        bad.append({"record": "ordering", "value": [idx.iota_l, idx.iota_m, idx.iota_u]})
    if not l31.positivity_agree:
        bad.append({"record": "lemma31", "exists": list(l31.exists)})
    return rep, None, bad


def _dalang(cfg):
    e = _exponent(cfg.process or "brownian")
    nz = _noise(cfg.noise or "white", e.n)
    d = sn.dalang_check(nz, e)
    return {"process": e.to_config(), "noise": nz.to_config(),
            "dalang": {"finite": d.finite, "value": d.value}}, None, []


def _model(cfg):
    e = _exponent(cfg.process or "brownian")
    nz = _noise(cfg.noise or "white_delta", e.n)
    m = cfg.block("model")
    try:
        b = sp.Nonlinearity.from_config(m.get("b", {"kind": "zero"}))
        s = sp.Nonlinearity.from_config(m.get("sigma", {"kind": "constant", "value": 1.0}))
        u0 = sp.InitialCondition.from_config(m.get("u0", {"kind": "constant", "amplitude": 0.0}))
    except KeyError as exc:
        raise ConfigError(exc.args[0]) from None
    return sp.ModelSpec(e, nz, b, s, u0, rho=m.get("rho"), kappa0=m.get("kappa0"))


def _simulate(cfg):
    b = cfg.block("simulate")
    model = _model(cfg)
    lat = sp.TorusLattice(model.n, int(b.get("N", 1024)), float(b.get("L", 6.0)))
    T, dt = float(b.get("T", 1.0)), float(b.get("dt", 1e-4))
    res = sp.simulate(model, T, dt, lat, int(b.get("replicas", 1)), cfg.seed,
                      site_stride=int(b.get("site_stride", 64)),
                      block_size=int(b.get("block_size", 250)))
    var = res.final.var(axis=0, ddof=1) if res.replicas > 1 else np.zeros(lat.shape)
    rep = {"model": model.to_config(), "T": T, "dt": dt, "N": lat.N, "L": lat.length,
           "replicas": res.replicas, "seed": cfg.seed,
           "moments": {"orders": list(res.moments.orders),
                       "sup_moment": list(res.moments.sup_moment),
                       "stderr": list(res.moments.stderr), "finite": res.moments.finite},
           "final_mean": float(res.final.mean()), "final_variance": float(var.mean()),
           "metadata": res.metadata}
    out = os.path.join(cfg.output_dir, "paths")
    space, timep = [], []
    st = res.snapshot_times
    regular = len(st) > 1 and np.allclose(np.diff(st), st[1] - st[0])
    for r in range(res.replicas):
        if regular:
            space.append(sp.FieldPath(res.snapshots[r], float(st[1] - st[0]), lat.dx, lat.length / 2,
                                      n=lat.n, seed=cfg.seed, t0=float(st[0])))
        if lat.n == 1:
            timep.append(sp.FieldPath(res.recording[r], dt, lat.dx * (res.recording_sites[1] - res.recording_sites[0])
                                      if len(res.recording_sites) > 1 else lat.dx,
                                      lat.length / 2, n=1, seed=cfg.seed,
                                      t0=float(res.recording_times[0])))
    extra = {"T": T, "dt": dt, "N": lat.N, "L": lat.length, "seed": cfg.seed}
    if space:
        sp.save_paths(os.path.join(out, "space"), space, extra)
    if timep:
        sp.save_paths(os.path.join(out, "time"), timep, extra)
    rep["paths_dir"] = "paths"
    bad = [] if res.moments.finite else [{"record": "moments", "value": list(res.moments.sup_moment)}]
    rows = np.column_stack([lat.coordinates(), res.final.mean(0).reshape(lat.N, -1)[:, 0],
                            var.reshape(lat.N, -1)[:, 0]])
    return rep, (["x", "mean", "variance"], rows), bad


def _holder(cfg):
    b = cfg.block("holder")
    direction = b.get("direction", "space")
    base = b.get("paths_dir", os.path.join(cfg.output_dir, "paths"))
    sub = os.path.join(base, direction)
    paths = sp.load_paths(sub if os.path.isdir(sub) else base)
    orders = b.get("orders", [2])
    pr = None
    if cfg.process and cfg.noise and "kappa0" in b and "rho" in b:
        e = _exponent(cfg.process)
        pr = sp.paper_ranges(e, _noise(cfg.noise, e.n), b["rho"], b["kappa0"],
                             limiting_case=_limiting(e, b.get("limiting_case")))
    reps, bad = [], []
    for p in orders:
        r = sp.estimate_holder(paths, direction, lags=b.get("lags"), order=int(p), paper_range=pr)
        reps.append(r.as_dict())
        if r.consistent is False:
            bad.append({"record": f"holder order {p}", "exponent": r.exponent})
    return {"direction": direction, "reports": reps}, None, bad


def _lemma_21(e, cfg, b):
    r = td.fit_sup_bound(e, [0.1, 0.25, 0.5, 1.0, 2.0], np.logspace(-3, -1, 5), orders=(0, 1))
    rep = {"fitted_C": r.fitted_C, "argmax": list(r.argmax), "holds": r.holds,
           "min_h_slope": float(np.min(r.h_slopes))}
    if e.n == 1:
        rep["chapman_kolmogorov_error"] = td.chapman_kolmogorov_error(e, 0.5, 0.5)
    return rep, r.holds


def _lemma_22(e, cfg, b):
    out, ok = [], True
    for k0 in np.round(np.arange(0.1, 0.95, 0.1), 10):
        r = lc.verify_moment_equivalence(e, float(k0), replicas=int(b.get("replicas", 100_000)),
                                         seed=cfg.seed)
        out.append({"kappa0": float(k0), "finite": list(r.finite), "agree": r.agree})
        ok = ok and r.agree
    return {"sweep": out, "holds": ok}, ok


def _lemma_23(e, cfg, b):
    r = mo.verify_integral_bound(e, float(b.get("kappa0", 0.5)), np.logspace(-2, 0, 3),
                                 replicas=int(b.get("replicas", 200_000)), seed=cfg.seed)
    return {"fitted_C": r.fitted_C, "ratio_spread": r.ratio_spread, "self_similar": r.self_similar,
            "t_grid": list(r.t_grid), "values": list(r.values), "bounds": list(r.bounds),
            "holds": r.holds}, r.holds


def _lemma_24(e, cfg, b):
    k0 = float(b.get("kappa0", 0.5))
    r = mo.verify_growth(e, k0, np.logspace(-3, 0, 7), 0.49 * k0,
                         replicas=int(b.get("replicas", 200_000)), seed=cfg.seed)
    return {"kappa": r.kappa, "fitted_C": r.fitted_C, "slope": r.slope,
            "slope_stderr": r.slope_stderr, "exact_slope": r.exact_slope,
            "failures": list(r.failures), "holds": r.holds}, r.holds


def _lemma_25(e, cfg, b):
    k0 = float(b.get("kappa0", 0.5))
    beta = e.asymptotics.beta_inf
    params = td.L1BoundParams(1.0, 0.5, 0.5, 0.49 * k0, k0, e.n, beta)
    ts = [0.25, 0.5, 1.0, 2.0]
    grid = np.logspace(-3, 0, 8)
    rs = td.fit_l1_exponents(e, params, ts, h_grid=grid)
    rt = td.fit_l1_exponents(e, params, ts, eps_grid=grid)
    rep = {d.direction: {"fitted_C": d.fitted_C, "max_value": d.max_value, "holds": d.holds,
                         "paper_exponent": d.paper_exponent, "min_lag_slope": min(d.lag_slopes),
                         "argmax": list(d.argmax)} for d in (rs, rt)}
    return rep, rs.holds and rt.holds


def _lemma_31(e, cfg, b):
    nz = _noise(cfg.noise or "white", e.n)
    r = sn.verify_lemma31(nz, e, limiting_case=_limiting(e, b.get("limiting_case")))
    return {"noise": nz.to_config(), "exists": list(r.exists),
            "positivity_agree": r.positivity_agree, "values_agree": r.values_agree,
            "indices": r.indices.as_dict(), "indeterminate": r.indeterminate}, r.positivity_agree


_LEMMA_FUNCS = {"2.1": _lemma_21, "2.2": _lemma_22, "2.3": _lemma_23, "2.4": _lemma_24,
                "2.5": _lemma_25, "3.1": _lemma_31}


def _verify(cfg):
    b = cfg.block("verify")
    lemma = str(b.get("lemma", ""))
    if lemma not in LEMMAS:
        raise ConfigError(f"unknown lemma {lemma!r}; choose from {', '.join(LEMMAS)}")
    procs = b.get("processes")
    if procs is None:
        procs = [cfg.process] if cfg.process else list(DEFAULT_PROCESSES)
    out, bad = [], []
    for spec in procs:
        e = _exponent(spec)
        rep, ok = _LEMMA_FUNCS[lemma](e, cfg, b)
        rep["process"] = e.to_config()
        out.append(rep)
        if not ok:
            bad.append({"record": f"lemma {lemma}", "process": e.to_config()})
    return {"lemma": lemma, "results": out}, None, bad


PIPELINES = {"density": _density, "moments": _moments, "indices": _indices, "dalang": _dalang,
             "simulate": _simulate, "holder": _holder, "verify-lemma": _verify}


def _write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in np.atleast_2d(rows):
            fh.write(",".join(format(float(v), ".17g") for v in row) + "\n")


def run(config, subcommand=None, argv=None):
    """Execute one pipeline; returns the exit status."""
    sub = subcommand or config.command
    if sub not in PIPELINES:
        raise ConfigError(f"unknown subcommand {sub!r}")
    os.makedirs(config.output_dir, exist_ok=True)
    start = time.time()
    report, csv, bad = PIPELINES[sub](config)
    # the output directory is provenance, kept out of the report so that
    # reruns elsewhere are byte-identical
    cfg = config.to_dict()
    cfg.pop("output_dir")
    report = {"subcommand": sub, "config": cfg, "result": report,
              "violations": bad, "passed": not bad}
    stem = sub.replace("-", "_")
    with open(os.path.join(config.output_dir, f"{stem}_report.json"), "w") as fh:
        fh.write(dumps(report))
    meta = {"started": time.strftime("%Y-%m-%dT%H:%M:%S", time.localtime(start)),
            "elapsed_seconds": time.time() - start, "argv": list(argv or []),
            "threads": mo.max_threads(), "output_dir": config.output_dir}
    with open(os.path.join(config.output_dir, f"{stem}_metadata.json"), "w") as fh:
        fh.write(dumps(meta))
    if csv is not None and "csv" in config.emit:
        _write_csv(os.path.join(config.output_dir, f"{stem}.csv"), *csv)
    return 0 if not bad else 1


def _parser():
    p = argparse.ArgumentParser(prog="levyfield", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="subcommand", required=True)

    def common(sp_, process=True, noise=False):
        sp_.add_argument("--config", help="JSON experiment config")
        if process:
            sp_.add_argument("--process", help='e.g. "stable:alpha=1.5" or a JSON object')
        if noise:
            sp_.add_argument("--noise", help='e.g. "riesz:beta=0.5", "white"')
        sp_.add_argument("--seed", type=int)
        sp_.add_argument("--out", help="output directory")
        sp_.add_argument("--emit", help="comma separated: json,csv")

    d = sub.add_parser("density", help="transition density by Fourier inversion")
    common(d)
    d.add_argument("--t", type=float)
    d.add_argument("--grid-halfwidth", type=float, dest="half_width")
    d.add_argument("--dx", type=float)
    d.add_argument("--derivative", help="comma separated orders, time first")
    d.add_argument("--h", type=float)
    d.add_argument("--eps", type=float)

    m = sub.add_parser("moments", help="fractional moments by Monte Carlo")
    common(m)
    m.add_argument("--kappa0", type=float)
    m.add_argument("--t", type=float)
    m.add_argument("--t-grid", dest="t_grid", help="comma separated times")
    m.add_argument("--replicas", type=int)

    i = sub.add_parser("indices", help="Dalang integral and fractal indices")
    common(i, noise=True)
    dl = sub.add_parser("dalang", help="Dalang integral only")
    common(dl, noise=True)

    s = sub.add_parser("simulate", help="simulate the mild solution")
    common(s, process=False)
    s.add_argument("--model-config", dest="model_config",
                   help="JSON file naming process, noise, b, sigma, u0, rho")
    for flag, typ in (("--T", float), ("--dt", float), ("--N", int), ("--L", float),
                      ("--replicas", int)):
        s.add_argument(flag, type=typ, dest=flag[2:])

    h = sub.add_parser("holder", help="empirical Holder exponents from saved paths")
    common(h, noise=True)
    h.add_argument("--paths-dir", dest="paths_dir")
    h.add_argument("--direction", choices=("space", "time"))
    h.add_argument("--orders", help="comma separated moment orders 2p")
    h.add_argument("--kappa0", type=float)
    h.add_argument("--rho", type=float)

    v = sub.add_parser("verify-lemma", help="numerical checks of one lemma")
    common(v, noise=True)
    v.add_argument("lemma", choices=LEMMAS)
    v.add_argument("--replicas", type=int)

    r = sub.add_parser("run", help="run the subcommand named in a config file")
    r.add_argument("config_file")
    r.add_argument("command", nargs="?")
    return p


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _build_config(args):
    if args.subcommand == "run":
        cfg = load_config(args.config_file).to_dict()
        if args.command:
            cfg["command"] = args.command
        return ExperimentConfig.from_dict(cfg), cfg.get("command")
    cfg = load_config(args.config).to_dict() if getattr(args, "config", None) else {}
    if getattr(args, "model_config", None):
        with open(args.model_config) as fh:
            try:
                mc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid model config: {exc}") from None
        allowed = {"process", "noise", "b", "sigma", "u0", "rho", "kappa0"}
        extra = sorted(set(mc) - allowed)
        if extra:
            raise ConfigError(f"unknown key(s) in model config: {', '.join(extra)}")
        for k in ("process", "noise"):
            if k in mc:
                cfg[k] = mc[k]
        model = {k: mc[k] for k in ("b", "sigma", "u0", "rho", "kappa0") if k in mc}
        if model:
            cfg["model"] = model
    for k in ("process", "noise"):
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.out is not None:
        cfg["output_dir"] = args.out
    if args.emit is not None:
        cfg["emit"] = [e.strip() for e in args.emit.split(",")]
    sub = args.subcommand
    block_name = {"verify-lemma": "verify", "dalang": None}.get(sub, sub)
    block = dict(cfg.get(block_name, {})) if block_name else {}
    skip = {"subcommand", "config", "process", "noise", "seed", "out", "emit", "model_config"}
    for k, v in vars(args).items():
        if k in skip or v is None:
            continue
        if k in ("t_grid", "orders"):
            v = _floats(v)
        elif k == "derivative":
            v = [int(x) for x in v.split(",")]
        block[k] = v
    if block_name and block:
        cfg[block_name] = block
    cfg["command"] = sub
    return ExperimentConfig.from_dict(cfg), sub


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        cfg, sub = _build_config(args)
        return run(cfg, sub, argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, LevyFieldError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
