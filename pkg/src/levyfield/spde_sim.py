"""Mild solution of du = -Psi(D) u dt + b(u) dt + sigma(u) dF on a torus.

Time stepping is exponential Euler in Fourier space: the semigroup
multiplier exp(-dt Psi(xi_k)) is exact per dual mode, the drift and the
noise coefficient are evaluated at the left point. When sigma is constant
the stochastic convolution is integrated exactly per mode, and a linear
drift is folded into the multiplier.
"""

import math
import json
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from . import levy_core as lc
from .exceptions import (InsufficientGridError, InsufficientReplicasError, NoAdmissibleRangeError,
                         RegressionQualityError, ResidueError, SchemeOverflowError)
from .moments import max_threads
from .spectral_noise import TorusLattice, compute_indices, dalang_check, dual_weights, white_modes
from ._validation import check_int, check_scalar, check_seed

__all__ = [
    "Nonlinearity", "InitialCondition", "ModelSpec", "TorusLattice", "MildStepper",
    "FieldPath", "SimulationResult", "MomentReport", "HolderReport", "PaperRanges",
    "HolderExponentEstimator", "step_mild", "simulate", "estimate_holder", "paper_ranges",
    "write_lvf1", "read_lvf1", "save_paths", "load_paths",
]

MAGIC = b"LVF1"
RESIDUE_TOL = 1e-8


# ---------------------------------------------------------------------------
# model ingredients
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Nonlinearity:
    """Scalar Lipschitz map: zero, constant, linear (slope*u) or
    clipped_affine (clip(slope*u + intercept, lo, hi))."""

    kind: str = "zero"
    slope: float = 0.0
    intercept: float = 0.0
    lo: float = -math.inf
    hi: float = math.inf
    lipschitz: float = None

    def __post_init__(self):
        if self.kind not in ("zero", "constant", "linear", "clipped_affine"):
            raise ValueError(f"unknown nonlinearity kind {self.kind!r}")
        if self.lo > self.hi:
            raise ValueError("clip bounds must satisfy lo <= hi")
        declared = self.lipschitz if self.lipschitz is not None else abs(self.slope)
        object.__setattr__(self, "lipschitz", float(declared))
        u = np.linspace(-10, 10, 200001)
        v = self(u)
        slope = np.max(np.abs(np.diff(v)) / np.diff(u))
        if slope > self.lipschitz + 1e-9:
            raise ValueError(f"declared Lipschitz constant {self.lipschitz} < observed {slope}")

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def constant(cls, value):
        return cls("constant", intercept=float(value))

    @classmethod
    def linear(cls, lam):
        return cls("linear", slope=float(lam))

    @classmethod
    def clipped_affine(cls, slope, intercept=0.0, lo=-1.0, hi=1.0):
        return cls("clipped_affine", float(slope), float(intercept), float(lo), float(hi))

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(u)
        if self.kind == "constant":
            return np.full_like(u, self.intercept)
        if self.kind == "linear":
            return self.slope * u
        return np.clip(self.slope * u + self.intercept, self.lo, self.hi)

    @property
    def is_constant(self):
        return self.kind in ("zero", "constant")

    @property
    def constant_value(self):
        return 0.0 if self.kind == "zero" else self.intercept

    def to_config(self):
        d = {"kind": self.kind}
        if self.kind == "constant":
            d["value"] = self.intercept
        elif self.kind == "linear":
            d["lam"] = self.slope
        elif self.kind == "clipped_affine":
            d.update(slope=self.slope, intercept=self.intercept, lo=self.lo, hi=self.hi)
        return d

    @classmethod
    def from_config(cls, cfg):
        if isinstance(cfg, (int, float)):
            return cls.constant(cfg) if cfg else cls.zero()
        cfg = dict(cfg)
        kind = cfg.pop("kind", None)
        keys = {"zero": set(), "constant": {"value"}, "linear": {"lam"},
                "clipped_affine": {"slope", "intercept", "lo", "hi"}}
        if kind not in keys:
            raise KeyError(f"unknown nonlinearity kind {kind!r}")
        extra = set(cfg) - keys[kind]
        if extra:
            raise KeyError(f"unknown key(s) for nonlinearity {kind}: {sorted(extra)}")
        if kind == "zero":
            return cls.zero()
        if kind == "constant":
            return cls.constant(cfg.get("value", 1.0))
        if kind == "linear":
            return cls.linear(cfg["lam"])
        return cls.clipped_affine(**cfg)


@dataclass(frozen=True)
class InitialCondition:
    """Bounded initial datum on the torus.

    ``weierstrass`` is sum_j b^{-j rho} cos(2 pi b^j x_1 / L), truncated below
    the lattice Nyquist frequency; it is rho-Holder uniformly in the
    truncation.
    """

    kind: str = "constant"
    amplitude: float = 1.0
    mode: int = 1
    rho: float = None
    base: int = 2

    def __post_init__(self):
        if self.kind not in ("constant", "sinusoid", "weierstrass"):
            raise ValueError(f"unknown initial condition kind {self.kind!r}")
        if self.kind == "weierstrass":
            check_scalar(self.rho, "rho", lo=0, hi=1, lo_open=True, hi_open=True)

    @classmethod
    def constant(cls, c=1.0):
        return cls("constant", amplitude=float(c))

    @classmethod
    def sinusoid(cls, amplitude=1.0, mode=1):
        return cls("sinusoid", amplitude=float(amplitude), mode=int(mode))

    @classmethod
    def weierstrass(cls, rho, amplitude=1.0, base=2):
        return cls("weierstrass", amplitude=float(amplitude), rho=float(rho), base=int(base))

    @property
    def sup_bound(self):
        if self.kind == "weierstrass":
            return abs(self.amplitude) / (1 - self.base ** -self.rho)
        return abs(self.amplitude)

    def evaluate(self, lattice):
        x = lattice.coordinates()
        shape = lattice.shape
        if self.kind == "constant":
            return np.full(shape, self.amplitude)
        k0 = 2 * math.pi / lattice.length
        x1 = x.reshape((-1,) + (1,) * (lattice.n - 1))
        if self.kind == "sinusoid":
            return np.broadcast_to(self.amplitude * np.sin(k0 * self.mode * x1), shape).copy()
        out = np.zeros((lattice.N,) + (1,) * (lattice.n - 1))
        j = 0
        while self.base ** j < lattice.N // 2:
            out += self.base ** (-j * self.rho) * np.cos(k0 * self.base ** j * x1)
            j += 1
        return np.broadcast_to(self.amplitude * out, shape).copy()

    def to_config(self):
        d = {"kind": self.kind, "amplitude": self.amplitude}
        if self.kind == "sinusoid":
            d["mode"] = self.mode
        if self.kind == "weierstrass":
            d.update(rho=self.rho, base=self.base)
        return d

    @classmethod
    def from_config(cls, cfg):
        cfg = dict(cfg)
        kind = cfg.pop("kind", "constant")
        keys = {"constant": {"amplitude", "value"}, "sinusoid": {"amplitude", "mode"},
                "weierstrass": {"amplitude", "rho", "base"}}
        if kind not in keys:
            raise KeyError(f"unknown initial condition kind {kind!r}")
        extra = set(cfg) - keys[kind]
        if extra:
            raise KeyError(f"unknown key(s) for initial condition {kind}: {sorted(extra)}")
        if "value" in cfg:
            cfg["amplitude"] = cfg.pop("value")
        return cls(kind, **cfg)


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Ingredients of the equation. ``rho`` is the declared Holder exponent
    of u0 and must lie below ``kappa0`` when both are given."""

    exponent: object
    noise: object
    b: Nonlinearity = field(default_factory=Nonlinearity.zero)
    sigma: Nonlinearity = field(default_factory=lambda: Nonlinearity.constant(1.0))
    u0: InitialCondition = field(default_factory=InitialCondition.constant)
    rho: float = None
    kappa0: float = None

    def __post_init__(self):
        if self.exponent.n != self.noise.n:
            raise ValueError("exponent and noise dimensions differ")
        rho = self.rho if self.rho is not None else self.u0.rho
        if rho is not None and self.kappa0 is not None and not 0 < rho < self.kappa0:
            raise ValueError("the Holder exponent of u0 must satisfy 0 < rho < kappa0")

    @property
    def n(self):
        return self.exponent.n

    def to_config(self):
        return {"process": self.exponent.to_config(), "noise": self.noise.to_config(),
                "b": self.b.to_config(), "sigma": self.sigma.to_config(),
                "u0": self.u0.to_config(), "rho": self.rho, "kappa0": self.kappa0}


# ---------------------------------------------------------------------------
# stepping
# ---------------------------------------------------------------------------

class MildStepper:
    """Precomputed Fourier multipliers for one (model, lattice, dt)."""

    def __init__(self, model, lattice, dt):
        self.model, self.lattice = model, lattice
        self.dt = check_scalar(dt, "dt", lo=0, lo_open=True)
        n, N = lattice.n, lattice.N
        if model.n != n:
            raise ValueError("model and lattice dimensions differ")
        xi = lattice.frequency_grid()
        psi = np.asarray(model.exponent(xi.reshape(-1, n)), dtype=complex).reshape(lattice.half_shape)
        self.psi = psi
        lam = model.b.slope if model.b.kind == "linear" else 0.0
        g = psi - lam
        self.mult = np.exp(-self.dt * g)
        if not np.all(np.isfinite(self.mult)):
            raise SchemeOverflowError("semigroup multiplier overflows; drift too strong for dt")
        self._check_hermitian()
        self.explicit_drift = model.b.kind == "clipped_affine"
        self.const_drift = model.b.constant_value if model.b.is_constant else 0.0
        self.size = N ** n
        w, self.zero_mode_weight = dual_weights(model.noise, lattice)
        self.weights = w
        self.additive = model.sigma.is_constant
        s = model.sigma.constant_value if self.additive else 1.0
        re = g.real
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            small = np.abs(re * self.dt) < 1e-8
            var = np.where(small, self.dt * (1 - re * self.dt),
                           -np.expm1(-2 * self.dt * re) / (2 * np.where(small, 1.0, re)))
        if self.additive:
            self.noise_amp = abs(s) * np.sqrt(w * var) * self.size
        else:
            self.noise_amp = np.sqrt(self.dt * w) * self.size
        if not np.all(np.isfinite(self.noise_amp)):
            raise SchemeOverflowError("noise amplitude is not finite")
        self.axes = tuple(range(1, n + 1))
        self.fourier_only = self.additive and not self.explicit_drift

    def _check_hermitian(self):
        """Psi(-xi) = conj Psi(xi) on the self-conjugate planes of the rfft layout;
        otherwise the real part of the inverse transform would drop mass."""
        N, n = self.lattice.N, self.lattice.n
        worst = 0.0
        for k in (0, N // 2):
            plane = self.mult[..., k]
            refl = plane
            for ax in range(n - 1):
                refl = np.roll(np.flip(refl, axis=ax), 1, axis=ax)
            worst = max(worst, float(np.max(np.abs(plane - np.conj(refl)))))
        if worst > RESIDUE_TOL:
            raise ResidueError(f"imaginary residue {worst:.3g} exceeds {RESIDUE_TOL}")

    def to_fourier(self, u):
        return np.fft.rfftn(u, axes=self.axes)

    def to_physical(self, uh):
        return np.fft.irfftn(uh, s=self.lattice.shape, axes=self.axes)

    def step(self, uh, rng, u=None):
        """Advance a batch of Fourier states (batch,) + half_shape by dt."""
        batch = uh.shape[0]
        noisy = np.any(self.noise_amp != 0)
        if self.fourier_only:
            out = uh * self.mult
            if self.const_drift:
                out[(slice(None),) + (0,) * self.lattice.n] += (
                    self.mult[(0,) * self.lattice.n] * self.dt * self.const_drift * self.size)
            if noisy:
                out += self.noise_amp * white_modes(rng, batch, self.lattice)
            return out
        if u is None:
            u = self.to_physical(uh)
        incr = np.zeros_like(u)
        if self.explicit_drift:
            incr += self.dt * self.model.b(u)
        elif self.const_drift:
            incr += self.dt * self.const_drift
        if self.additive:
            out = (uh + self.to_fourier(incr)) * self.mult
            if noisy:
                out += self.noise_amp * white_modes(rng, batch, self.lattice)
        else:
            if noisy:
                dF = self.to_physical(self.noise_amp * white_modes(rng, batch, self.lattice))
                incr += self.model.sigma(u) * dF
            out = (uh + self.to_fourier(incr)) * self.mult
        if not np.all(np.isfinite(out)):
            raise SchemeOverflowError("non-finite values in the time step")
        return out


def step_mild(state, model, dt, seed=None, lattice=None, length=None):
    """One exponential-Euler step of a single field (or a batch with a
    leading replica axis)."""
    state = np.asarray(state, dtype=float)
    n = model.n
    single = state.ndim == n
    if lattice is None:
        N = state.shape[-1]
        lattice = TorusLattice(n, N, length if length is not None else 6.0)
    st = MildStepper(model, lattice, dt)
    batch = state[None] if single else state
    rng = np.random.default_rng(np.random.SeedSequence(check_seed(seed or 0)))
    out = st.to_physical(st.step(st.to_fourier(batch), rng, u=batch))
    return out[0] if single else out


# ---------------------------------------------------------------------------
# paths and persistence
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class FieldPath:
    """One replica's field on a regular time grid: values[i] is u(t0 + i*dt)."""

    values: np.ndarray
    dt: float
    dx: float
    half_width: float
    n: int = 1
    seed: int = 0
    t0: float = 0.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(self.values)):
            raise ValueError("FieldPath values must be finite")

    @property
    def n_steps(self):
        return self.values.shape[0] - 1

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(self.values.shape[0])

    def __eq__(self, other):
        return (isinstance(other, FieldPath) and self.values.shape == other.values.shape
                and np.array_equal(self.values, other.values) and self.dt == other.dt
                and self.dx == other.dx and self.seed == other.seed)

    def to_csv(self, path):
        """Rows: time, then the field at every site (row-major)."""
        flat = self.values.reshape(self.values.shape[0], -1)
        with open(path, "w") as fh:
            fh.write("t," + ",".join(f"u{j}" for j in range(flat.shape[1])) + "\n")
            for t, row in zip(self.times, flat):
                fh.write(format(t, ".17g") + "," + ",".join(format(v, ".17g") for v in row) + "\n")


def write_lvf1(path, fp):
    """Header: b"LVF1", then n, N, N_t (int64), dt, dx (float64), seed (uint64),
    all little-endian; then the values as row-major little-endian float64."""
    N = fp.values.shape[1]
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<qqqddQ", fp.n, N, fp.n_steps, fp.dt, fp.dx, fp.seed))
        fh.write(np.ascontiguousarray(fp.values, dtype="<f8").tobytes())


def read_lvf1(path, half_width=None, t0=0.0):
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise ValueError(f"{path}: not an LVF1 file")
        n, N, Nt, dt, dx, seed = struct.unpack("<qqqddQ", fh.read(48))
        data = np.frombuffer(fh.read(), dtype="<f8")
    shape = (Nt + 1,) + (N,) * n
    if data.size != math.prod(shape):
        raise ValueError(f"{path}: payload size does not match header")
    hw = half_width if half_width is not None else N * dx / 2
    return FieldPath(data.reshape(shape).astype(float), dt, dx, hw, n=n, seed=seed, t0=t0)


def save_paths(directory, paths, extra=None):
    """Write path_XXXX.lvf1 files plus a manifest with their start times."""
    os.makedirs(directory, exist_ok=True)
    entries = []
    for k, fp in enumerate(paths):
        name = f"path_{k:04d}.lvf1"
        write_lvf1(os.path.join(directory, name), fp)
        entries.append({"file": name, "t0": fp.t0, "half_width": fp.half_width})
    manifest = {"paths": entries}
    if extra:
        manifest.update(extra)
    with open(os.path.join(directory, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)


def load_paths(directory):
    mpath = os.path.join(directory, "manifest.json")
    if os.path.exists(mpath):
        with open(mpath) as fh:
            manifest = json.load(fh)
        return [read_lvf1(os.path.join(directory, e["file"]), e.get("half_width"), e.get("t0", 0.0))
                for e in manifest["paths"]]
    names = sorted(f for f in os.listdir(directory) if f.endswith(".lvf1"))
    return [read_lvf1(os.path.join(directory, f)) for f in names]


# ---------------------------------------------------------------------------
# simulation driver
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MomentReport:
    """Largest replica-mean E|u(t_i, x_j)|^{2p} over the monitored grid."""

    orders: tuple
    sup_moment: tuple
    stderr: tuple
    finite: bool


@dataclass(eq=False)
class SimulationResult:
    """Snapshots (replicas, len(snapshot_times)) + lattice shape, a temporal
    recording (replicas, steps, sites) on a strided set of sites, and the
    first ``keep_paths`` replicas as FieldPath objects."""

    T: float
    dt: float
    lattice: TorusLattice
    snapshot_times: np.ndarray
    snapshots: np.ndarray
    recording_times: np.ndarray
    recording: np.ndarray
    recording_sites: np.ndarray
    moments: MomentReport
    paths: list
    seed: int
    metadata: dict = field(default_factory=dict)

    @property
    def replicas(self):
        return self.snapshots.shape[0]

    @property
    def final(self):
        return self.snapshots[:, -1]


def _plan(T, dt, snapshot_times, record_window, moment_stride):
    n_steps = int(round(T / dt))
    if n_steps < 1 or abs(n_steps * dt - T) > 1e-9 * max(1.0, T):
        raise ValueError("T must be a positive integer multiple of dt")
    if snapshot_times is None:
        snapshot_times = (0.75 * T, 0.875 * T, T)
    snap_steps = np.array(sorted({int(round(s / dt)) for s in snapshot_times}), dtype=int)
    if snap_steps.min() < 0 or snap_steps.max() > n_steps:
        raise ValueError("snapshot times must lie in [0, T]")
    if record_window is None:
        record_window = (T - min(T / 2, 500 * dt), T)
    r0, r1 = int(round(record_window[0] / dt)), int(round(record_window[1] / dt))
    if not 0 <= r0 <= r1 <= n_steps:
        raise ValueError("record window must lie in [0, T]")
    stride = moment_stride or max(1, n_steps // 100)
    mom_steps = np.unique(np.r_[np.arange(0, n_steps + 1, stride), n_steps])
    return n_steps, snap_steps, (r0, r1), mom_steps


def _run_block(st, u0, nrep, seed_seq, plan, site_index, keep, path_stride, orders):
    n_steps, snap_steps, (r0, r1), mom_steps = plan
    rng = np.random.default_rng(seed_seq)
    u = np.broadcast_to(u0, (nrep,) + u0.shape).copy()
    uh = st.to_fourier(u)
    snaps = np.empty((nrep, len(snap_steps)) + u0.shape)
    rec = np.empty((nrep, r1 - r0 + 1, len(site_index[1])))
    msum = np.zeros((len(mom_steps), len(orders)) + u0.shape)
    msq = np.zeros_like(msum)
    kept = [[] for _ in range(keep)]
    snap_pos = {s: k for k, s in enumerate(snap_steps)}
    mom_pos = {s: k for k, s in enumerate(mom_steps)}
    for i in range(n_steps + 1):
        need_phys = (i in snap_pos or r0 <= i <= r1 or i in mom_pos
                     or (keep and i % path_stride == 0) or not st.fourier_only)
        if need_phys:
            u = st.to_physical(uh)
            if i in snap_pos:
                snaps[:, snap_pos[i]] = u
            if r0 <= i <= r1:
                rec[:, i - r0] = u[site_index[0]]
            if i in mom_pos:
                a = np.abs(u)
                for k, p in enumerate(orders):
                    v = a ** (2 * p)
                    msum[mom_pos[i], k] = v.sum(0)
                    msq[mom_pos[i], k] = (v * v).sum(0)
            if keep and i % path_stride == 0:
                for r in range(keep):
                    kept[r].append(u[r].copy())
        if i < n_steps:
            uh = st.step(uh, rng, u=None if st.fourier_only else u)
    return snaps, rec, msum, msq, kept


def simulate(model, T, dt, lattice=None, replicas=1, seed=0, snapshot_times=None,
             record_window=None, site_stride=64, keep_paths=0, path_stride=1,
             block_size=250, moment_orders=(1, 2, 4), moment_stride=None,
             check_dalang=True):
    """Run ``replicas`` independent paths of the lattice scheme on [0, T].

    Replicas are processed in blocks; block k draws from child k of
    SeedSequence(seed), so the result does not depend on the thread count.
    """
    seed = check_seed(seed)
    replicas = check_int(replicas, "replicas", lo=1)
    lattice = lattice or TorusLattice(model.n, 1024, 6.0)
    if check_dalang and model.noise.declared and not dalang_check(model.noise, model.exponent).finite:
        raise ValueError("the Dalang condition fails for this model")
    st = MildStepper(model, lattice, dt)
    plan = _plan(T, dt, snapshot_times, record_window, moment_stride)
    u0 = model.u0.evaluate(lattice)
    if not np.all(np.isfinite(u0)):
        raise ValueError("initial condition must be bounded")
    sites = np.arange(0, lattice.N, site_stride)
    site_index = ((slice(None), sites) + (0,) * (lattice.n - 1), sites)
    sizes = [min(block_size, replicas - s) for s in range(0, replicas, block_size)]
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    keeps = []
    left = keep_paths
    for sz in sizes:
        keeps.append(min(left, sz))
        left -= keeps[-1]

    def work(k):
        return _run_block(st, u0, sizes[k], children[k], plan, site_index, keeps[k],
                          path_stride, moment_orders)

    workers = min(max_threads(), len(sizes))
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(work, range(len(sizes))))
    else:
        results = [work(k) for k in range(len(sizes))]
    snaps = np.concatenate([r[0] for r in results])
    rec = np.concatenate([r[1] for r in results])
    msum = sum(r[2] for r in results)
    msq = sum(r[3] for r in results)
    mean = msum / replicas
    var = np.maximum(msq / replicas - mean ** 2, 0)
    sups, ses = [], []
    for k in range(len(moment_orders)):
        m = mean[:, k]
        idx = np.unravel_index(np.argmax(m), m.shape)
        sups.append(float(m[idx]))
        ses.append(float(np.sqrt(var[:, k][idx] / max(replicas - 1, 1))))
    moments = MomentReport(tuple(moment_orders), tuple(sups), tuple(ses),
                           bool(np.all(np.isfinite(sups))))
    n_steps, snap_steps, (r0, r1), _ = plan
    paths = []
    for r in results:
        for vals in r[4]:
            paths.append(FieldPath(np.array(vals), dt * path_stride, lattice.dx, lattice.length / 2,
                                   n=lattice.n, seed=seed,
                                   metadata={"mode_cutoff": lattice.N // 2, "scheme": "exponential Euler"}))
    meta = {"scheme": "exponential Euler", "mode_cutoff": lattice.N // 2,
            "zero_mode_weight": st.zero_mode_weight, "noise_integration":
            "exact per mode" if st.additive else "left point", "block_size": block_size}
    return SimulationResult(T, dt, lattice, snap_steps * dt, snaps, np.arange(r0, r1 + 1) * dt, rec,
                            sites, moments, paths, seed, meta)


# ---------------------------------------------------------------------------
# Holder exponents
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PaperRanges:
    """Admissible parameter ranges and the Holder exponents they imply.

    ``beta_end`` uses (n + 2) in the second term, matching the definition of
    K_tilde; ``beta_end_printed`` keeps (n + 1).
    """

    n: int
    beta_inf: float
    kappa0: float
    rho: float
    iota_u: float
    K: float
    K_tilde: float
    alpha_end: float
    beta_end: float
    beta_end_printed: float
    eta_end: float
    space_exponent: float
    time_exponent: float

    def as_dict(self):
        return dict(self.__dict__)


def paper_ranges(exponent, noise, rho, kappa0, iota_u=None, limiting_case=False,
                 check=True):
    """Endpoints of the admissible (alpha, eta, K) and (beta, eta~, K~)
    ranges and the resulting spatial/temporal Holder exponents
    min(alpha, 2 rho)/2 and min(beta, rho)/2."""
    n = exponent.n
    kappa0 = check_scalar(kappa0, "kappa0", lo=0, lo_open=True)
    rho = check_scalar(rho, "rho", lo=0, lo_open=True)
    if check:
        rep = lc.check_assumptions(exponent, kappa0, limiting_case=limiting_case)
        if not (rep.assumption1_holds and rep.assumption2_holds):
            raise ValueError("the nondegeneracy and moment conditions must hold")
    b = exponent.asymptotics.beta_inf
    if iota_u is None:
        iota_u = compute_indices(noise, exponent).iota_u
    if iota_u <= 0:
        raise NoAdmissibleRangeError("iota_u = 0: no admissible Holder range")
    frac = kappa0 / (n + kappa0)
    K = ((n + 1) / b + kappa0 / 2) * frac
    Kt = ((n + 2) / b + kappa0 / 2) * frac
    a_end = min(frac, min(iota_u, K) * b / (n + 1))
    b_end = min(frac, min(iota_u, Kt) * b / (n + 2))
    b_print = min(frac, min(iota_u, Kt) * b / (n + 1))
    return PaperRanges(n, b, kappa0, rho, iota_u, K, Kt, a_end, b_end, b_print, iota_u,
                       min(a_end, 2 * rho) / 2, min(b_end, rho) / 2)


@dataclass(frozen=True)
class HolderReport:
    """Empirical Holder exponent slope/(2p) with a bootstrap interval."""

    direction: str
    order: int
    exponent: float
    ci: tuple
    r2: float
    lags: tuple
    moments: tuple
    replicas: int
    paper_range: PaperRanges = None
    predicted: float = None
    consistent: bool = None

    @property
    def ci_width(self):
        return self.ci[1] - self.ci[0]

    def as_dict(self):
        d = {k: getattr(self, k) for k in ("direction", "order", "exponent", "r2", "replicas",
                                           "predicted", "consistent")}
        d["ci"] = list(self.ci)
        d["lags"] = list(self.lags)
        d["moments"] = list(self.moments)
        d["paper_range"] = self.paper_range.as_dict() if self.paper_range else None
        return d


def _default_lags(step, mult):
    return step * mult * np.logspace(0, 1.5, 8)


def _structure_space(arr, shifts, p):
    """arr (R, S, N, ...): mean over snapshots and sites of |u(x+h)-u(x)|^p."""
    out = np.empty((arr.shape[0], len(shifts)))
    for k, s in enumerate(shifts):
        d = np.abs(np.roll(arr, -s, axis=2) - arr) ** p
        out[:, k] = d.reshape(arr.shape[0], -1).mean(1)
    return out


def _structure_time(arr, shifts, p):
    """arr (R, steps, sites): mean over start times and sites."""
    out = np.empty((arr.shape[0], len(shifts)))
    for k, s in enumerate(shifts):
        d = np.abs(arr[:, s:] - arr[:, :-s]) ** p
        out[:, k] = d.reshape(arr.shape[0], -1).mean(1)
    return out


def _slope(logh, logm):
    x = logh - logh.mean()
    return (logm - logm.mean(axis=-1, keepdims=True)) @ x / (x @ x)


class HolderExponentEstimator(BaseEstimator):
    """Structure-function regression of log E|increment|^{order} on log lag.

    fit() accepts a SimulationResult or a list of FieldPath replicas.
    """

    def __init__(self, direction="space", order=2, lags=None, n_boot=400, confidence=0.95,
                 random_state=0, min_replicas=500, min_r2=0.95):
        self.direction = direction
        self.order = order
        self.lags = lags
        self.n_boot = n_boot
        self.confidence = confidence
        self.random_state = random_state
        self.min_replicas = min_replicas
        self.min_r2 = min_r2

    def _data(self, X):
        if isinstance(X, SimulationResult):
            T = X.T
            if self.direction == "space":
                times = X.snapshot_times
                return X.snapshots, X.lattice.dx, times, T
            return X.recording, X.dt, X.recording_times, T
        paths = list(X)
        if not paths:
            raise InsufficientReplicasError("no paths given")
        fp = paths[0]
        vals = np.stack([p.values for p in paths])
        T = float(fp.times[-1])
        keep = fp.times >= T / 2 - 1e-12
        if self.direction == "space":
            return vals[:, keep], fp.dx, fp.times[keep], T
        sub = vals[:, keep].reshape(vals.shape[0], int(keep.sum()), -1)
        return sub, fp.dt, fp.times[keep], T

    def fit(self, X, y=None):
        if self.direction not in ("space", "time"):
            raise ValueError("direction must be 'space' or 'time'")
        arr, step, times, T = self._data(X)
        R = arr.shape[0]
        if R < self.min_replicas:
            raise InsufficientReplicasError(f"{R} replicas < required {self.min_replicas}")
        if np.min(times) < T / 2 - 1e-12:
            raise ValueError("increments must be taken at times in [T/2, T]")
        lags = np.asarray(self.lags if self.lags is not None else
                          _default_lags(step, 4 if self.direction == "space" else 8), dtype=float)
        shifts = np.unique(np.rint(lags / step).astype(int))
        eff = shifts * step
        if (len(shifts) < 3 or shifts[0] < 4 or np.min(lags) < 4 * step * (1 - 1e-9)
                or np.log10(np.max(lags) / np.min(lags)) < 1.5 - 1e-9):
            raise InsufficientGridError(
                "insufficient grid: lags need >= 3 distinct values >= 4 steps spanning 1.5 decades")
        if eff[-1] > 1 + 1e-12:
            raise ValueError("lags must not exceed 1")
        limit = arr.shape[2] if self.direction == "space" else arr.shape[1]
        if shifts[-1] >= limit:
            raise InsufficientGridError("insufficient grid: lag exceeds the recorded extent")
        f = _structure_space if self.direction == "space" else _structure_time
        M = f(arr, shifts, self.order)
        logh = np.log(eff)
        mean = M.mean(0)
        logm = np.log(mean)
        slope = float(_slope(logh, logm))
        resid = logm - (logm.mean() + slope * (logh - logh.mean()))
        ss = np.sum((logm - logm.mean()) ** 2)
        r2 = float(1 - np.sum(resid ** 2) / ss) if ss > 0 else 0.0
        rng = np.random.default_rng(np.random.SeedSequence(self.random_state))
        boots = np.empty(self.n_boot)
        for k in range(0, self.n_boot, 50):
            idx = rng.integers(0, R, size=(min(50, self.n_boot - k), R))
            bm = np.log(M[idx].mean(1))
            boots[k:k + len(idx)] = _slope(logh, bm)
        a = (1 - self.confidence) / 2
        lo, hi = np.quantile(boots / self.order, [a, 1 - a])
        self.exponent_ = slope / self.order
        self.ci_ = (float(lo), float(hi))
        self.r2_ = r2
        self.lags_ = eff
        self.moments_ = mean
        self.n_replicas_ = R
        if r2 < self.min_r2:
            raise RegressionQualityError(f"regression R^2 = {r2:.4f} < {self.min_r2}")
        return self

    def report(self, paper_range=None):
        pred = None
        ok = None
        if paper_range is not None:
            pred = paper_range.space_exponent if self.direction == "space" else paper_range.time_exponent
            width = self.ci_[1] - self.ci_[0]
            ok = bool(self.ci_[0] > 0 and self.exponent_ >= pred - width)
        return HolderReport(self.direction, int(self.order), float(self.exponent_), self.ci_,
                            self.r2_, tuple(map(float, self.lags_)), tuple(map(float, self.moments_)),
                            int(self.n_replicas_), paper_range, pred, ok)


def estimate_holder(paths, direction="space", lags=None, order=2, paper_range=None, **kw):
    """Fit a HolderExponentEstimator and return its HolderReport."""
    est = HolderExponentEstimator(direction=direction, order=order, lags=lags, **kw).fit(paths)
    return est.report(paper_range)
