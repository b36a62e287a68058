"""Additive heat + white noise benchmark shared by the acceptance suite."""

import math

import numpy as np

from levyfield import levy_core as lc
from levyfield import spde_sim as sp
from levyfield import spectral_noise as sn

TARGET_VAR = 1 / math.sqrt(2 * math.pi)


def benchmark_model():
    noise = sn.white_noise(1, 1 / (2 * math.pi))
    return sp.ModelSpec(lc.brownian(1), noise, sp.Nonlinearity.zero(),
                        sp.Nonlinearity.constant(1.0), sp.InitialCondition.constant(0.0))


def run(dt, replicas=2000, seed=20240, N=1024, L=6.0):
    model = benchmark_model()
    lat = sp.TorusLattice(1, N, L)
    res = sp.simulate(model, 1.0, dt, lat, replicas, seed)
    var = float(res.final.var(axis=0, ddof=1).mean())
    space = sp.estimate_holder(res, "space")
    time_ = sp.estimate_holder(res, "time")
    return {"variance": var, "space": space, "time": time_, "result": res}


if __name__ == "__main__":
    import time
    for dt in (1e-4, 2e-4):
        t0 = time.time()
        out = run(dt)
        print(dt, out["variance"], out["space"].exponent, out["space"].ci, out["space"].r2,
              out["time"].exponent, out["time"].ci, out["time"].r2, time.time() - t0, flush=True)
