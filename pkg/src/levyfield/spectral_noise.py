"""Spatially homogeneous Gaussian noise described by its spectral measure.

mu(dxi) = m(|xi|) dxi is radial. The Dalang integral, the three fractal
indices and the equivalence of their positivity are decided from declared
power-law envelopes of m and of Psi. Noise increments on a periodic lattice
are synthesised mode by mode.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _quadrature as q
from ._validation import check_int, check_power_of_two, check_scalar, check_seed
from .exceptions import EnvelopeError, IndeterminateError

__all__ = [
    "SpectralNoiseModel", "FractalIndices", "DalangResult", "Lemma31Report",
    "TorusLattice", "white_noise", "riesz_noise", "finite_noise", "custom_noise",
    "noise_from_config", "dalang_check", "compute_indices", "verify_lemma31",
    "dual_weights", "synthesize_noise_increment", "white_modes",
    "lattice_covariance",
]


@dataclass(frozen=True, eq=False)
class SpectralNoiseModel:
    """Radial spectral measure mu(dxi) = density(|xi|) dxi.

    ``zero_exponent`` p and ``inf_exponent`` q declare density ~ r^p near 0
    and ~ r^q (log r)^inf_log_exponent at infinity; q = -inf marks a finite
    measure with fast decay. ``None`` means undeclared.
    """

    kind: str
    n: int
    density: object
    c: float = 1.0
    beta: float = None
    zero_exponent: float = None
    inf_exponent: float = None
    inf_log_exponent: float = 0.0
    zero_value: float = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        check_int(self.n, "n", lo=1)
        check_scalar(self.c, "c", lo=0, lo_open=True)
        if self.zero_exponent is not None and not q.origin_finite(
                self.zero_exponent + self.n - 1):
            raise ValueError("mu is not locally integrable at the origin (not tempered)")

    def __call__(self, r):
        return self.density(np.asarray(r, dtype=float))

    @property
    def declared(self):
        return self.zero_exponent is not None and self.inf_exponent is not None

    @property
    def tempered_order(self):
        """Smallest integer k with int (1 + |xi|^2)^{-k} mu(dxi) < inf."""
        if self.inf_exponent is None:
            return None
        if self.inf_exponent == -math.inf:
            return 0
        k = 0
        while not q.tail_finite(self.inf_exponent + self.n - 1 - 2 * k, self.inf_log_exponent):
            k += 1
        return k

    @property
    def riesz_in_range(self):
        """0 < beta < min(n, 2) for Riesz kernels (recorded, not enforced)."""
        return None if self.kind != "riesz" else 0 < self.beta < min(self.n, 2)

    def to_config(self):
        d = {"kind": self.kind, "n": self.n, "c": self.c}
        d.update(self.params)
        return d


def white_noise(n=1, c=1.0):
    """mu = c * Lebesgue. c = (2 pi)^{-n} gives Gamma = delta."""
    return SpectralNoiseModel("white", n, lambda r: np.full(np.shape(r), float(c)), c=c,
                              zero_exponent=0.0, inf_exponent=0.0, zero_value=float(c))


def riesz_noise(beta, n=1, c=1.0):
    """mu(dxi) = c |xi|^{beta - n} dxi, i.e. Gamma(x) proportional to |x|^{-beta}."""
    beta = check_scalar(beta, "beta", lo=0, lo_open=True)
    p = beta - n

    def dens(r):
        with np.errstate(divide="ignore"):
            return c * np.where(r > 0, np.abs(r) ** p, np.inf if p < 0 else (c if p == 0 else 0))
    return SpectralNoiseModel("riesz", n, dens, c=c, beta=beta, zero_exponent=p,
                              inf_exponent=p, zero_value=0.0, params={"beta": beta})


def finite_noise(n=1, c=1.0, scale=1.0):
    """Finite spectral measure with Gaussian density c exp(-|xi|^2 / (2 scale^2))."""
    scale = check_scalar(scale, "scale", lo=0, lo_open=True)
    return SpectralNoiseModel(
        "finite", n, lambda r: c * np.exp(-0.5 * (np.asarray(r) / scale) ** 2), c=c,
        zero_exponent=0.0, inf_exponent=-math.inf, zero_value=float(c),
        params={"scale": scale})


def custom_noise(density, n=1, zero_exponent=None, inf_exponent=None,
                 inf_log_exponent=0.0, label="custom"):
    """User radial density; envelopes are optional but needed for exact
    finiteness decisions."""
    z = None
    try:
        v = float(np.asarray(density(np.array([0.0])))[0])
        z = v if math.isfinite(v) else 0.0
    except (ValueError, ZeroDivisionError, FloatingPointError):
        z = 0.0
    return SpectralNoiseModel("custom", n, density, zero_exponent=zero_exponent,
                              inf_exponent=inf_exponent, inf_log_exponent=inf_log_exponent,
                              zero_value=z, params={"label": label})


def noise_from_config(cfg):
    """Build a noise model from ``{"kind": "riesz", "beta": 0.5, "n": 1, "c": 1}``."""
    cfg = dict(cfg)
    kind = cfg.pop("kind", None)
    n = cfg.pop("n", 1)
    c = cfg.pop("c", 1.0)
    allowed = {"white": set(), "white_delta": set(), "riesz": {"beta"},
               "finite": {"scale"}}
    if kind not in allowed:
        raise KeyError(f"unknown noise kind {kind!r}")
    extra = set(cfg) - allowed[kind]
    if extra:
        raise KeyError(f"unknown key(s) for noise {kind}: {sorted(extra)}")
    if kind == "white":
        return white_noise(n, c)
    if kind == "white_delta":
        return white_noise(n, (2 * math.pi) ** -n)
    if kind == "riesz":
        return riesz_noise(cfg["beta"], n, c)
    return finite_noise(n, c, cfg.get("scale", 1.0))


# ---------------------------------------------------------------------------
# Dalang condition and indices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DalangResult:
    finite: bool
    value: float
    method: str = "exponent arithmetic"


def _check_pair(noise, exponent):
    if noise.n != exponent.n:
        raise ValueError("noise and exponent dimensions differ")


def _radial_mu_integral(noise, exponent, weight):
    """int_{R^n} weight(Psi(xi), |xi|) mu(dxi) for an integrand known to be finite.

    The head near 0 and the tail at infinity are completed from power-law
    envelopes of the integrand.
    """
    n = exponent.n
    dirs, w = q.sphere_design(n)

    def g(r):
        psi = exponent(r * dirs)
        return float(np.dot(w, weight(psi, r))) * float(noise(np.array([r]))[0]) * r ** (n - 1)

    beta = exponent.asymptotics.beta_inf
    scale = 1.0
    lo = 1e-10 * scale
    if noise.inf_exponent == -math.inf:
        hi = 60.0 * noise.params.get("scale", 1.0)
        val, _ = q.radial_quad(g, lo, hi, what="Dalang integral")
        tail = 0.0
    else:
        hi = 1e10
        val, _ = q.radial_quad(g, lo, hi, what="Dalang integral")
        # power-law tail of the integrand: estimate its exponent locally
        r1, r2 = hi / 10, hi
        g1, g2 = g(r1), g(r2)
        s = math.log(g2 / g1) / math.log(r2 / r1) if g1 > 0 and g2 > 0 else -math.inf
        tail = g2 * hi / -(s + 1) if s < -1 else math.inf
    p0 = noise.zero_exponent if noise.zero_exponent is not None else 0.0
    head = g(lo) * lo / (p0 + n) if p0 + n > 0 else math.inf
    return val + tail + head


def dalang_check(noise, exponent):
    """Decide int mu(dxi) / (1 + Re Psi(xi)) < inf and evaluate it when finite."""
    _check_pair(noise, exponent)
    beta = exponent.asymptotics.beta_inf
    if not noise.declared or beta is None:
        raise EnvelopeError("Dalang check needs declared envelopes for mu and Re Psi")
    n = noise.n
    if not q.origin_finite(noise.zero_exponent + n - 1):
        return DalangResult(False, math.inf)
    if not q.tail_finite(noise.inf_exponent + n - 1 - beta, noise.inf_log_exponent):
        return DalangResult(False, math.inf)
    val = _radial_mu_integral(noise, exponent, lambda psi, r: 1.0 / (1.0 + np.real(psi)))
    return DalangResult(True, val)


@dataclass(frozen=True)
class FractalIndices:
    """Upper, middle and lower indices with how they were obtained.

    ``positivity`` = (iota_u > 0, iota_m > 0, iota_l > 0). When a bisection
    cannot decide, ``indeterminate`` is True and ``intervals`` holds the
    bracket of each index.
    """

    iota_u: float
    iota_m: float
    iota_l: float
    method: str
    positivity: tuple
    indeterminate: bool = False
    intervals: tuple = ()

    def as_dict(self):
        return {"iota_u": self.iota_u, "iota_m": self.iota_m, "iota_l": self.iota_l}


_CONDITIONS = ("eta", "gamma", "delta")


def _tail_exponent(noise, exponent, which, s):
    """Radial exponent at infinity of the index-defining integrand."""
    env = exponent.asymptotics
    b, a = env.beta_inf, env.abs_inf
    base = noise.inf_exponent + noise.n - 1
    if which == "eta":
        return base - b * (1 - s)
    if which == "gamma":
        return base + a * s - b
    return base + 2 * s - b


def _finite_by_envelope(noise, exponent, which, s):
    if noise.inf_exponent == -math.inf:
        return True
    if not q.origin_finite(noise.zero_exponent + noise.n - 1):
        return False
    return q.tail_finite(_tail_exponent(noise, exponent, which, s), noise.inf_log_exponent)


def _finite_numeric(noise, exponent, which, s):
    """Decade-contribution test for undeclared envelopes (True/False/None)."""
    n = noise.n
    dirs, w = q.sphere_design(n)

    def g(r):
        psi = exponent(r * dirs)
        re = np.real(psi)
        if which == "eta":
            f = (1 + re) ** (s - 1)
        elif which == "gamma":
            f = np.abs(psi) ** s / (1 + re)
        else:
            f = r ** (2 * s) / (1 + re)
        return float(np.dot(w, f)) * float(noise(np.array([r]))[0]) * r ** (n - 1)

    contrib = q.decade_contributions(g, 10.0, +1, count=14)
    return q.numeric_finiteness(contrib)


def _finite(noise, exponent, which, s):
    if noise.inf_exponent is not None and noise.zero_exponent is not None \
            and exponent.asymptotics.beta_inf is not None:
        return _finite_by_envelope(noise, exponent, which, s)
    return _finite_numeric(noise, exponent, which, s)


def _closed_form(noise, exponent):
    if noise.inf_exponent == -math.inf:
        return 1.0, 1.0, 1.0
    env = exponent.asymptotics
    D = env.beta_inf - noise.inf_exponent - noise.n
    clamp = lambda v: min(1.0, max(0.0, v))
    return clamp(D / env.beta_inf), clamp(D / env.abs_inf), clamp(D / 2.0)


def _bisect(pred, tol=1e-3, max_iter=60):
    """sup{s in (0,1): pred(s)} for a monotone predicate; returns
    (value, (lo, hi), decided)."""
    tiny = 1e-9
    top = pred(1 - tiny)
    if top is True:
        return 1.0, (1 - tiny, 1.0), True
    bottom = pred(tiny)
    if bottom is False:
        return 0.0, (0.0, tiny), True
    lo, hi = tiny, 1 - tiny
    if top is None or bottom is None:
        return 0.5 * (lo + hi), (lo, hi), False
    for _ in range(max_iter):
        if hi - lo <= tol:
            return 0.5 * (lo + hi), (lo, hi), True
        mid = 0.5 * (lo + hi)
        v = pred(mid)
        if v is None:
            return mid, (lo, hi), False
        if v:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), (lo, hi), False


def compute_indices(noise, exponent, method="auto", tol=1e-3, check_dalang=True):
    """iota_u, iota_m, iota_l as suprema of their defining sets in (0, 1).

    ``method="exact"`` uses envelope exponent arithmetic (power laws only);
    ``"bisection"`` bisects on each parameter with finiteness decided per
    step; ``"auto"`` picks exact when envelopes are declared.
    """
    _check_pair(noise, exponent)
    declared = noise.declared and exponent.asymptotics.beta_inf is not None
    if method == "auto":
        method = "exact" if declared else "bisection"
    if check_dalang and declared and not dalang_check(noise, exponent).finite:
        raise ValueError("the Dalang condition fails; the indices are not defined here")
    if method == "exact":
        if not declared:
            raise EnvelopeError("exact indices need declared envelopes")
        u, m, l = _closed_form(noise, exponent)
        return FractalIndices(u, m, l, "exact exponent arithmetic", (u > 0, m > 0, l > 0))
    if method != "bisection":
        raise ValueError("method must be 'auto', 'exact' or 'bisection'")
    vals, ivs, ok = [], [], True
    for which in _CONDITIONS:
        v, iv, decided = _bisect(lambda s: _finite(noise, exponent, which, s), tol)
        vals.append(v)
        ivs.append(iv)
        ok = ok and decided
    u, m, l = vals
    return FractalIndices(u, m, l, "bisection with quadrature confirmation",
                          (u > 0, m > 0, l > 0), indeterminate=not ok, intervals=tuple(ivs))


@dataclass(frozen=True)
class Lemma31Report:
    params: tuple
    finite: dict
    exists: tuple
    positivity_agree: bool
    indices: FractalIndices
    values_agree: bool
    indeterminate: bool


def verify_lemma31(noise, exponent, params=None, limiting_case=False):
    """Sweep gamma, delta, eta over ``params`` and compare the three
    "some parameter makes the integral finite" statements.

    Positivity agreement is the asserted property; equality of the index
    values is only recorded.
    """
    _check_pair(noise, exponent)
    if not exponent.assumption1_holds(limiting_case):
        raise ValueError("the exponent is degenerate (beta_inf outside (0, 2))")
    ps = np.linspace(0.05, 0.95, 19) if params is None else np.asarray(params, dtype=float)
    finite = {}
    undecided = False
    for which in _CONDITIONS:
        row = [_finite(noise, exponent, which, float(s)) for s in ps]
        undecided = undecided or any(v is None for v in row)
        finite[which] = tuple(row)
    exists = tuple(any(v is True for v in finite[w]) for w in _CONDITIONS)
    try:
        idx = compute_indices(noise, exponent, check_dalang=False)
    except EnvelopeError:
        idx = compute_indices(noise, exponent, method="bisection", check_dalang=False)
    undecided = undecided or idx.indeterminate
    values_agree = abs(idx.iota_u - idx.iota_m) <= 1e-3 and abs(idx.iota_m - idx.iota_l) <= 1e-3
    # order (eta, gamma, delta) -> report as (gamma, delta, eta) = conditions (1), (2), (3)
    return Lemma31Report(tuple(ps.tolist()), finite, exists, len(set(exists)) == 1, idx,
                         bool(values_agree), undecided)


# ---------------------------------------------------------------------------
# synthesis on a torus
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TorusLattice:
    """N^n sites with spacing length/N on the torus [0, length)^n."""

    n: int
    N: int
    length: float

    def __post_init__(self):
        check_int(self.n, "n", lo=1)
        check_power_of_two(self.N)
        check_scalar(self.length, "length", lo=0, lo_open=True)

    @property
    def dx(self):
        return self.length / self.N

    @property
    def shape(self):
        return (self.N,) * self.n

    @property
    def half_shape(self):
        return (self.N,) * (self.n - 1) + (self.N // 2 + 1,)

    def coordinates(self):
        return np.arange(self.N) * self.dx

    def frequency_grid(self):
        """Dual frequencies in rfftn layout, shape half_shape + (n,)."""
        full = 2 * math.pi * np.fft.fftfreq(self.N, d=self.dx)
        half = 2 * math.pi * np.fft.rfftfreq(self.N, d=self.dx)
        axes = [full] * (self.n - 1) + [half]
        g = np.meshgrid(*axes, indexing="ij")
        return np.stack(g, axis=-1)

    def mode_counts(self):
        """How many full-spectrum modes each rfft bin stands for (1 or 2)."""
        cnt = np.full(self.half_shape, 2.0)
        cnt[..., 0] = 1.0
        if self.N % 2 == 0:
            cnt[..., -1] = 1.0
        return cnt


def dual_weights(noise, lattice):
    """mu-weights m(|xi_k|) (2 pi / length)^n on the rfft half lattice.

    The zero mode gets the density's limit at 0 (0 for Riesz, whose density
    is singular there). Returns (weights, zero_mode_weight).
    """
    if noise.n != lattice.n:
        raise ValueError("noise and lattice dimensions differ")
    xi = lattice.frequency_grid()
    r = np.linalg.norm(xi, axis=-1)
    cell = (2 * math.pi / lattice.length) ** lattice.n
    with np.errstate(divide="ignore", invalid="ignore"):
        m = np.asarray(noise(np.where(r > 0, r, 1.0)), dtype=float)
    z = noise.zero_value if noise.zero_value is not None else 0.0
    idx0 = (0,) * lattice.n
    m = m.copy()
    m[idx0] = z
    if not np.all(np.isfinite(m)) or np.any(m < 0):
        raise ValueError("spectral density must be finite and nonnegative on the dual lattice")
    return m * cell, z * cell


def white_modes(rng, batch, lattice):
    """Standard complex Gaussian coefficients with the symmetry of rfftn of
    real white noise, divided by sqrt(N^n): shape (batch,) + half_shape.

    Self-conjugate bins are real N(0, 1); conjugate pairs inside the planes
    k_last in {0, N/2} are made consistent.
    """
    shape = (batch,) + lattice.half_shape
    z = rng.standard_normal(shape + (2,)).view(np.complex128)[..., 0] * (1 / math.sqrt(2))
    N, n = lattice.N, lattice.n
    for k in (0, N // 2):
        plane = z[..., k]
        refl = plane
        for ax in range(1, n):
            refl = np.roll(np.flip(refl, axis=ax), 1, axis=ax)
        z[..., k] = (plane + np.conj(refl)) * (1 / math.sqrt(2))
    return z


def synthesize_noise_increment(noise, lattice, dt, seed=None, rng=None, batch=None):
    """One time slice of the noise increment on the torus.

    Independent Gaussian coefficients per dual mode with variance
    dt * weight, transformed to physical space. Returns an array of shape
    lattice.shape (or (batch,) + shape).
    """
    dt = check_scalar(dt, "dt", lo=0, lo_open=True)
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(check_seed(seed or 0)))
    w, _ = dual_weights(noise, lattice)
    b = 1 if batch is None else batch
    z = white_modes(rng, b, lattice)
    amp = np.sqrt(dt * w) * lattice.N ** lattice.n
    axes = tuple(range(1, lattice.n + 1))
    out = np.fft.irfftn(z * amp, s=lattice.shape, axes=axes)
    return out[0] if batch is None else out


def lattice_covariance(noise, lattice, dt=1.0):
    """Exact covariance E[dF(0) dF(x_j)] of the synthesised noise."""
    w, _ = dual_weights(noise, lattice)
    return np.fft.irfftn(dt * w, s=lattice.shape, axes=tuple(range(lattice.n))) * lattice.N ** lattice.n
