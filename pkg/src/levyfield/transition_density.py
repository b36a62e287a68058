"""Transition densities by Fourier inversion, and their increments.

p_t(x) = (2 pi)^{-n} int exp(-t Psi(xi)) exp(-i<x, xi>) dxi is evaluated with
an FFT on a lattice of spacing dx (frequency cutoff pi / dx) and period
P = N dx. Truncation in frequency is bounded with the declared lower envelope
of Re Psi; periodisation of heavy tails is removed to leading order with the
tail constant of the Levy density.
"""

import math
import threading
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import _quadrature as q
from ._validation import check_log_grid, check_scalar
from .exceptions import (BoundViolationError, CutoffError, GridTooCoarseError,
                         NondegeneracyError, ResidueError)

__all__ = [
    "Lattice", "DensityGrid", "L1BoundParams", "Increment", "L1FitReport",
    "SupFitReport", "default_lattice", "invert_density", "sup_increment_space",
    "l1_increment_space", "l1_increment_time", "fit_l1_exponents", "fit_sup_bound",
    "chapman_kolmogorov_error", "clear_density_cache",
]

RESIDUE_TOL = 1e-8
MAX_FFT = 2 ** 23


@dataclass(frozen=True)
class Lattice:
    """Symmetric lattice {-J dx, ..., J dx}^n with J = round(half_width / dx)."""

    n: int
    half_width: float
    dx: float

    def __post_init__(self):
        check_scalar(self.dx, "dx", lo=0, lo_open=True)
        check_scalar(self.half_width, "half_width", lo=0, lo_open=True)
        if self.half_width < self.dx:
            raise ValueError("half_width must be at least one lattice spacing")

    @property
    def J(self):
        return int(round(self.half_width / self.dx))

    @property
    def size(self):
        return 2 * self.J + 1

    def axis(self):
        return np.arange(-self.J, self.J + 1) * self.dx


def _width(exponent, t):
    b = exponent.asymptotics.beta_inf
    return t ** (1.0 / b)


def default_lattice(exponent, t, widths=8.0):
    """dx = min(0.01, width/512) and L = ``widths`` widths, width = t^(1/beta_inf).

    In n >= 2 the resolution is width/32 to keep n-dimensional FFTs small.
    """
    w = _width(exponent, t)
    dx = min(0.01, w / 512) if exponent.n == 1 else w / 32
    return Lattice(exponent.n, widths * w, dx)


@dataclass(frozen=True, eq=False)
class DensityGrid:
    """p_t (or a derivative) sampled on a lattice.

    ``derivative`` is (a0, a1, ..., an): a0 time derivatives, then spatial
    orders. ``boundary_mass`` is P(X_t outside the box), computed from an
    independent Fourier integral (n = 1 only, else None).
    """

    t: float
    dx: float
    half_width: float
    values: np.ndarray
    inversion_tail_error: float
    derivative: tuple
    n: int = 1
    boundary_mass: float = None
    residue: float = 0.0
    alias_error: float = 0.0
    fft_size: int = 0

    def axis(self):
        J = (self.values.shape[0] - 1) // 2
        return np.arange(-J, J + 1) * self.dx

    def riemann_sum(self):
        """Lattice sum over the box [-L, L]^n; each site carries its cell
        clipped to the box, so boundary sites weigh half a cell per axis."""
        v = self.values
        w = np.ones(v.shape[0])
        w[0] = w[-1] = 0.5
        for _ in range(self.n):
            v = np.tensordot(w, v, axes=(0, 0))
        return float(v * self.dx ** self.n)

    def normalization_interval(self):
        """Interval the Riemann sum must fall into (derivative order 0)."""
        bm = self.boundary_mass or 0.0
        e = self.inversion_tail_error + self.alias_error
        return 1 - 5 * e - bm, 1 + 5 * e

    def interpolate(self, x):
        """Linear interpolation (n = 1); zero outside the box."""
        if self.n != 1:
            raise ValueError("interpolation is provided for n = 1")
        ax = self.axis()
        return np.interp(x, ax, self.values, left=0.0, right=0.0)

    def to_rows(self):
        """Rows (x..., value) in row-major order, suitable for CSV."""
        ax = self.axis()
        grids = np.meshgrid(*([ax] * self.n), indexing="ij")
        cols = [g.ravel() for g in grids] + [self.values.ravel()]
        return np.stack(cols, axis=1)


# ---------------------------------------------------------------------------
# inversion
# ---------------------------------------------------------------------------

def _next_pow2(m):
    return 1 << int(math.ceil(math.log2(max(2, m))))


def _frequency_tail_bound(exponent, t, Xi, order_x, order_t, lower):
    """(2 pi)^{-n} int_{|xi|>Xi} |integrand| dxi from the envelopes."""
    env = exponent.asymptotics
    n, b = exponent.n, env.beta_inf
    a_exp = n + order_x + order_t * (env.abs_inf or 2.0)
    const = (2 * env.growth_const) ** order_t
    tt = t * lower
    R = max(Xi, env.split_radius)
    bound = q.upper_gamma_power(a_exp, b, tt, R)
    return const * q.sphere_area(n) * bound / (2 * math.pi) ** n


def _alias_correction(exponent, t, x, P, deriv):
    """Periodisation error of a heavy-tailed density (n = 1).

    Uses p_t(x) ~ sum_k a_k t^k |x|^{-s_k} for |x| large and sums the images
    x + mP, m != 0, with Hurwitz zeta functions. Handles derivative orders
    (0, 0), (1, 0) (one t derivative) and (0, 1) (one x derivative).
    """
    u = x / P
    out = np.zeros_like(x)
    for k, a, s in exponent.tail_terms:
        if deriv == (0, 0):
            out += a * t ** k * P ** (-s) * (special.zeta(s, 1 + u) + special.zeta(s, 1 - u))
        elif deriv == (1, 0):
            out += k * a * t ** (k - 1) * P ** (-s) * (special.zeta(s, 1 + u)
                                                      + special.zeta(s, 1 - u))
        elif deriv == (0, 1):
            out += -s * a * t ** k * P ** (-s - 1) * (special.zeta(s + 1, 1 + u)
                                                      - special.zeta(s + 1, 1 - u))
        else:
            return None
    return out


def _effective_lower(exponent, Xi):
    """min of Re Psi(r w) / r^beta over r in [Xi, 1e4 Xi] and design directions,
    never below the declared constant."""
    env = exponent.asymptotics
    dirs, _ = q.sphere_design(exponent.n)
    r = np.logspace(math.log10(Xi), math.log10(Xi) + 4, 17)
    re = np.real(exponent(r[:, None, None] * dirs[None, :, :]))
    return max(env.lower_const, float((re / r[:, None] ** env.beta_inf).min()))


def _spectrum(exponent, t, xis, deriv, extra=None):
    """exp(-t Psi) (-Psi)^a0 prod (-i xi_j)^aj on the frequency grid."""
    grids = np.meshgrid(*xis, indexing="ij", sparse=True)
    pts = np.stack(np.broadcast_arrays(*grids), axis=-1)
    psi = exponent(pts) if exponent.n > 1 else exponent(xis[0][:, None])
    f = np.exp(-t * psi)
    if extra is not None:
        f = extra(f, psi, grids)
    if deriv[0]:
        f = f * (-psi) ** deriv[0]
    for j, k in enumerate(deriv[1:]):
        if k:
            f = f * (-1j * grids[j]) ** k
    return f


def _invert(exponent, t, lattice, deriv, tol, widths_period, extra=None, t_ref=None):
    """Core FFT inversion. Returns (values, tail_error, residue, alias_error, N)."""
    n = exponent.n
    env = exponent.asymptotics
    if env.beta_inf is None or env.beta_inf <= 0 or not exponent.nondegenerate:
        raise ValueError(
            f"{exponent!r} is degenerate (no transition density); "
            "densities are only computed when Re Psi grows at infinity")
    t_ref = t if t_ref is None else t_ref
    width = _width(exponent, t_ref)
    dx = lattice.dx
    if width < 3 * dx:
        raise CutoffError(
            f"t too small for grid: density width {width:.3g} is narrower than 3 dx")
    Xi = math.pi / dx
    order_x = sum(deriv[1:])
    b = env.beta_inf
    if Xi < env.split_radius:
        raise CutoffError("cutoff pi/dx lies below the envelope split radius")
    lower = _effective_lower(exponent, Xi)
    if math.exp(-t_ref * lower * Xi ** b) * Xi ** (n + order_x) >= tol:
        raise CutoffError(
            f"cutoff insufficient: exp(-t Xi^beta) Xi^(n+k) >= {tol} at Xi = pi/dx = {Xi:.4g}")
    tail_err = _frequency_tail_bound(exponent, t_ref, Xi, order_x, deriv[0], lower)
    # period: keep aliasing from the tails below the tolerance
    P = max(4 * lattice.half_width, widths_period * width)
    heavy = exponent.tail_index < math.inf and bool(exponent.tail_terms)
    if not heavy and exponent.triplet is not None:
        nu = exponent.triplet.levy_measure
        lam = getattr(nu, "tempering", 0.0)
        if lam > 0:
            P = max(P, 2 * (lattice.half_width + 40.0 / lam))
    N = _next_pow2(P / dx)
    N = max(N, _next_pow2(2 * (lattice.size - 1)))
    if N ** n > MAX_FFT * (1 if n == 1 else 1 / 4):
        N = _next_pow2((MAX_FFT if n == 1 else MAX_FFT // 4) ** (1 / n)) // (2 if n > 1 else 1)
        if N < 2 * (lattice.size - 1):
            raise CutoffError("lattice too large for the FFT size limit")
    P = N * dx
    xi = 2 * math.pi * np.fft.fftfreq(N, d=dx)
    f = _spectrum(exponent, t, [xi] * n, deriv, extra)
    # the Nyquist slabs have no conjugate partner; they are negligible by the
    # cutoff check and are dropped
    for ax in range(n):
        idx = [slice(None)] * n
        idx[ax] = N // 2
        f[tuple(idx)] = 0.0
    g = np.fft.fftn(f) / P ** n
    J = lattice.J
    sel = np.r_[N - J:N, 0:J + 1]
    g = g[np.ix_(*([sel] * n))]
    scale = max(1.0, float(np.abs(g.real).max()))
    residue = float(np.abs(g.imag).max())
    if residue > RESIDUE_TOL * scale:
        raise ResidueError(f"imaginary residue {residue:.3g} exceeds tolerance")
    vals = g.real.copy()
    alias = 0.0
    if heavy:
        a = exponent.tail_index
        if n == 1:
            corr = _alias_correction(exponent, t_ref, lattice.axis(), P,
                                     (deriv[0], deriv[1])) if extra is None and \
                sum(deriv) <= 1 else None
            if corr is not None:
                vals -= corr
                # first omitted term of the tail expansion
                k = len(exponent.tail_terms) + 1
                alias = 4 * t_ref ** k * (P / 2) ** (-1 - k * a)
            else:
                alias = 4 * exponent.tail_const * t_ref * (P / 2) ** (-1 - a - sum(deriv))
        else:
            alias = 2 * n * exponent.tail_const * t_ref * (P / 2) ** (-n - a) * 3 ** n
    return vals, tail_err, residue, alias, N


def _boundary_mass_1d(exponent, t, L):
    """P(|X_t| > L) = 1 - (2/pi) int_0^inf Re phi(xi) sin(L xi)/xi dxi."""
    def re_phi(x):
        return float(np.real(np.exp(-t * exponent(np.array([[x]]))))[0])

    split = math.pi / L
    head, _ = q.quad_checked(lambda x: re_phi(x) * L * np.sinc(L * x / math.pi), 0.0,
                             split, epsabs=1e-13, epsrel=1e-12, what="box mass")
    # beyond the cutoff where Re phi is negligible nothing is added
    width = _width(exponent, t)
    top = width ** -1 * (60 / exponent.asymptotics.lower_const) ** (
        1 / exponent.asymptotics.beta_inf) + exponent.asymptotics.split_radius
    top = max(top, 2 * split)
    tail, _ = q.quad_checked(lambda x: re_phi(x) / x, split, top, weight="sin", wvar=L,
                             epsabs=1e-13, epsrel=1e-12, limit=2000, what="box mass")
    return 1.0 - 2.0 / math.pi * (head + tail)


_CACHE = {}
_CACHE_LOCK = threading.Lock()


def clear_density_cache():
    with _CACHE_LOCK:
        _CACHE.clear()


def _as_derivative(derivative, n):
    if derivative is None:
        return (0,) * (n + 1)
    d = tuple(int(k) for k in derivative)
    if len(d) == n:
        d = (0,) + d
    if len(d) != n + 1 or any(k < 0 for k in d):
        raise ValueError(f"derivative must be a multi-index of length {n + 1} (time first)")
    return d


def invert_density(exponent, t, lattice=None, derivative=None, tol=1e-10,
                   period_widths=256.0, use_cache=True):
    """Sample p_t, or a derivative of it, on a lattice.

    Parameters
    ----------
    exponent : CharacteristicExponent
    t : float
        Time, > 0.
    lattice : Lattice, optional
        Defaults to :func:`default_lattice`.
    derivative : tuple of int, optional
        (a0, a1, ..., an) with a0 the order in t; a length-n tuple is read as
        purely spatial.
    tol : float
        Required size of exp(-t Xi^beta) Xi^(n+k) at the cutoff Xi = pi/dx.
    period_widths : float
        Minimum FFT period in units of t^(1/beta_inf).
    """
    t = check_scalar(t, "t", lo=0, lo_open=True)
    b = exponent.asymptotics.beta_inf
    if b is None or b <= 0:
        raise NondegeneracyError(
            f"{exponent.name}: Re Psi has no positive growth index, so p_t need not exist")
    lattice = default_lattice(exponent, t) if lattice is None else lattice
    if lattice.n != exponent.n:
        raise ValueError("lattice dimension does not match the exponent")
    deriv = _as_derivative(derivative, exponent.n)
    key = (exponent.key, t, lattice, deriv, tol, period_widths)
    if use_cache:
        with _CACHE_LOCK:
            hit = _CACHE.get(key)
        if hit is not None:
            return hit
    vals, err, res, alias, N = _invert(exponent, t, lattice, deriv, tol, period_widths)
    bm = None
    if exponent.n == 1 and not any(deriv):
        bm = max(0.0, _boundary_mass_1d(exponent, t, lattice.J * lattice.dx))
    vals.setflags(write=False)
    grid = DensityGrid(t=t, dx=lattice.dx, half_width=lattice.J * lattice.dx, values=vals,
                       inversion_tail_error=err, derivative=deriv, n=exponent.n,
                       boundary_mass=bm, residue=res, alias_error=alias, fft_size=N)
    if use_cache:
        with _CACHE_LOCK:
            grid = _CACHE.setdefault(key, grid)
    return grid


# ---------------------------------------------------------------------------
# increments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Increment:
    """Measured increment with its comparison bound.

    For L1 increments ``value`` is the lattice sum and ``tail_bound`` bounds
    the contribution from outside the box, so the true integral lies in
    [value, value + tail_bound]. For sup increments ``bound`` is the
    envelope value without its constant.
    """

    value: float
    tail_bound: float = 0.0
    bound: float = None
    refined_value: float = None
    details: dict = field(default_factory=dict)

    @property
    def upper(self):
        return self.value + self.tail_bound


def _shift_factor(h):
    def extra(f, psi, grids):
        phase = sum(g * hj for g, hj in zip(grids, h))
        return f * np.expm1(-1j * phase)
    return extra


def _as_shift(h, n):
    h = np.atleast_1d(np.asarray(h, dtype=float))
    if h.shape != (n,):
        raise ValueError(f"h must have length {n}")
    return h


def sup_increment_space(exponent, t, h, derivative=None, lattice=None, theta=1.0):
    """sup_x |d^a p_t(x + h) - d^a p_t(x)| over the lattice.

    The comparison envelope is |h|^theta t^{-(theta + k + n)/beta_inf} with
    k = |a| (the constant is fitted by :func:`fit_sup_bound`).
    """
    t = check_scalar(t, "t", lo=0, lo_open=True)
    n = exponent.n
    h = _as_shift(h, n)
    deriv = _as_derivative(derivative, n)
    if deriv[0]:
        raise ValueError("sup increments are taken for spatial derivatives only")
    k = sum(deriv)
    hn = float(np.linalg.norm(h))
    beta = exponent.asymptotics.beta_inf
    bound = hn ** theta * t ** (-(theta + k + n) / beta) if beta else None
    if hn == 0:
        return Increment(0.0, bound=0.0)
    lattice = default_lattice(exponent, t) if lattice is None else lattice
    vals, err, _, alias, _ = _invert(exponent, t, lattice, deriv, 1e-10, 256.0,
                                     extra=_shift_factor(h))
    return Increment(float(np.abs(vals).max()), tail_bound=2 * err + 2 * alias,
                     bound=bound, details={"k": k, "h": hn, "t": t})


def _l1_sum(vals, dx, n):
    full = float(np.abs(vals).sum() * dx ** n)
    sub = vals[(slice(None, None, 2),) * n]
    coarse = float(np.abs(sub).sum() * (2 * dx) ** n)
    return full, coarse


def _moment(exponent, t, kappa0):
    from .levy_core import fractional_moment_fourier
    return fractional_moment_fourier(exponent, t, kappa0)


def _default_kappa0(exponent):
    return min(0.5, 0.5 * exponent.tail_index)


def l1_increment_space(exponent, t, h, lattice=None, kappa0=None, widths=64.0,
                       refine_tol=1e-4):
    """int |p_t(x + h) - p_t(x)| dx.

    Lattice summation over a box of ``widths`` widths; the mass outside the
    box is bounded by 2 E|X_t|^kappa0 / (L - |h|)^kappa0.
    """
    t = check_scalar(t, "t", lo=0, lo_open=True)
    n = exponent.n
    h = _as_shift(h, n)
    hn = float(np.linalg.norm(h))
    if hn > 1 + 1e-12:
        raise ValueError("l1_increment_space requires |h| <= 1")
    if hn == 0:
        return Increment(0.0)
    kappa0 = _default_kappa0(exponent) if kappa0 is None else kappa0
    lattice = default_lattice(exponent, t, widths) if lattice is None else lattice
    vals, err, _, alias, _ = _invert(exponent, t, lattice, (0,) * (n + 1), 1e-10,
                                     256.0, extra=_shift_factor(h))
    full, coarse = _l1_sum(vals, lattice.dx, n)
    if abs(full - coarse) > refine_tol:
        raise GridTooCoarseError(
            f"grid too coarse: refinement changes the L1 increment by {abs(full - coarse):.3g}")
    L = lattice.J * lattice.dx
    tail = 2 * _moment(exponent, t, kappa0) / max(L - hn, 1e-300) ** kappa0
    volume = (2 * L) ** n
    tail += volume * (2 * err + 2 * alias)
    return Increment(full, tail_bound=tail, refined_value=coarse,
                     details={"t": t, "h": hn, "kappa0": kappa0})


def l1_increment_time(exponent, t, eps, lattice=None, kappa0=None, widths=64.0,
                      refine_tol=1e-4):
    """int |p_{t+eps}(x) - p_t(x)| dx, with the same tail completion."""
    t = check_scalar(t, "t", lo=0, lo_open=True)
    eps = check_scalar(eps, "eps", lo=0)
    n = exponent.n
    if eps == 0:
        return Increment(0.0)
    kappa0 = _default_kappa0(exponent) if kappa0 is None else kappa0
    if lattice is None:
        base = default_lattice(exponent, t)
        lattice = type(base)(n, widths * _width(exponent, t + eps), base.dx)

    def extra(f, psi, grids):
        return f * np.expm1(-eps * psi)

    vals, err, _, alias, _ = _invert(exponent, t, lattice, (0,) * (n + 1), 1e-10,
                                     256.0 * (1 + eps / t) ** (1 / exponent.beta_inf),
                                     extra=extra)
    full, coarse = _l1_sum(vals, lattice.dx, n)
    if abs(full - coarse) > refine_tol:
        raise GridTooCoarseError(
            f"grid too coarse: refinement changes the L1 increment by {abs(full - coarse):.3g}")
    L = lattice.J * lattice.dx
    tail = (_moment(exponent, t, kappa0) + _moment(exponent, t + eps, kappa0)) / L ** kappa0
    tail += (2 * L) ** n * (2 * err + 2 * alias)
    return Increment(full, tail_bound=tail, refined_value=coarse,
                     details={"t": t, "eps": eps, "kappa0": kappa0})


# ---------------------------------------------------------------------------
# bound fitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class L1BoundParams:
    """Parameters of the L1 increment bounds.

    theta in (0, 1], tau, omega in (0, 1), 0 < kappa < kappa0 / 2.
    """

    theta: float
    tau: float
    omega: float
    kappa: float
    kappa0: float
    n: int
    beta_inf: float

    def __post_init__(self):
        check_scalar(self.theta, "theta", lo=0, hi=1, lo_open=True)
        check_scalar(self.tau, "tau", lo=0, hi=1, lo_open=True, hi_open=True)
        check_scalar(self.omega, "omega", lo=0, hi=1, lo_open=True, hi_open=True)
        check_scalar(self.kappa0, "kappa0", lo=0, hi=1, lo_open=True, hi_open=True)
        check_scalar(self.kappa, "kappa", lo=0, hi=self.kappa0 / 2, lo_open=True,
                     hi_open=True)
        check_scalar(self.beta_inf, "beta_inf", lo=0, hi=2, lo_open=True)

    @property
    def space_exponent(self):
        return self.tau * self.kappa0 / (self.n + self.kappa0) * self.theta

    @property
    def time_exponent(self):
        return self.omega * self.kappa0 / (self.n + self.kappa0) * self.theta

    @property
    def space_blowup(self):
        return (self.theta + self.n) / self.beta_inf + self.kappa

    @property
    def time_blowup(self):
        return (2 * self.theta + self.n) / self.beta_inf + self.kappa

    def space_bound(self, t, h):
        r = self.kappa0 / (self.n + self.kappa0)
        return (h ** self.theta / t ** self.space_blowup) ** (self.tau * r)

    def time_bound(self, t, eps):
        r = self.kappa0 / (self.n + self.kappa0)
        return (eps ** self.theta / t ** self.time_blowup) ** (self.omega * r)


@dataclass(frozen=True)
class L1FitReport:
    direction: str
    t_grid: tuple
    lag_grid: tuple
    values: np.ndarray
    uppers: np.ndarray
    bounds: np.ndarray
    fitted_C: float
    argmax: tuple
    lag_slopes: tuple
    t_slopes: tuple
    paper_exponent: float
    max_value: float
    holds: bool


def _slope(x, y):
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def fit_l1_exponents(exponent, params, t_grid, h_grid=None, eps_grid=None,
                     min_points=8):
    """Measure L1 increments on a grid and fit the single constant C.

    Exactly one of ``h_grid`` (space) or ``eps_grid`` (time) is given. The
    lag grid must be log-spaced with at least ``min_points`` points.
    """
    if (h_grid is None) == (eps_grid is None):
        raise ValueError("give exactly one of h_grid or eps_grid")
    space = h_grid is not None
    lags = check_log_grid(h_grid if space else eps_grid, "h_grid" if space else "eps_grid",
                          min_points=min_points)
    ts = np.asarray(t_grid, dtype=float).ravel()
    if ts.size < 1 or np.any(ts <= 0):
        raise ValueError("t_grid must contain positive times")
    if ts.size > 1:
        check_log_grid(ts, "t_grid", min_points=2)
    vals = np.empty((ts.size, lags.size))
    ups = np.empty_like(vals)
    bnd = np.empty_like(vals)
    for i, t in enumerate(ts):
        for j, s in enumerate(lags):
            if space:
                hv = np.zeros(exponent.n)
                hv[0] = s
                inc = l1_increment_space(exponent, t, hv, kappa0=params.kappa0)
                bnd[i, j] = params.space_bound(t, s)
            else:
                inc = l1_increment_time(exponent, t, s, kappa0=params.kappa0)
                bnd[i, j] = params.time_bound(t, s)
            vals[i, j] = inc.value
            ups[i, j] = inc.upper
    if not (np.all(np.isfinite(vals)) and np.all(bnd > 0) and np.all(np.isfinite(bnd))):
        raise BoundViolationError("no finite C fits the L1 bound on this grid")
    ratio = vals / bnd
    idx = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    C = max(1.0, float(ratio[idx]))
    lag_slopes = tuple(_slope(lags, vals[i]) for i in range(ts.size))
    t_slopes = tuple(_slope(ts, vals[:, j]) for j in range(lags.size)) if ts.size > 1 else ()
    paper = params.space_exponent if space else params.time_exponent
    holds = bool(np.all(vals <= C * bnd * (1 + 1e-12)) and vals.max() <= 2 + 1e-9
                 and min(lag_slopes) >= paper)
    return L1FitReport("space" if space else "time", tuple(ts.tolist()),
                       tuple(lags.tolist()), vals, ups, bnd, C,
                       (float(ts[idx[0]]), float(lags[idx[1]])), lag_slopes, t_slopes,
                       paper, float(vals.max()), holds)


@dataclass(frozen=True)
class SupFitReport:
    orders: tuple
    t_grid: tuple
    h_grid: tuple
    values: np.ndarray
    envelopes: np.ndarray
    fitted_C: float
    argmax: tuple
    h_slopes: np.ndarray
    theta: float
    holds: bool


def fit_sup_bound(exponent, t_grid, h_grid, orders=(0, 1), theta=1.0):
    """Single-constant fit of the sup-increment envelope over t, h and k.

    ``holds`` requires every measured h-slope to be at least theta - 0.05,
    i.e. the envelope's h-dependence is not violated at small h.
    """
    ts = np.asarray(t_grid, dtype=float)
    hs = check_log_grid(h_grid, "h_grid", min_points=2)
    vals = np.empty((len(orders), ts.size, hs.size))
    env = np.empty_like(vals)
    n = exponent.n
    for a, k in enumerate(orders):
        d = (k,) + (0,) * (n - 1)
        for i, t in enumerate(ts):
            for j, h in enumerate(hs):
                hv = np.zeros(n)
                hv[0] = h
                inc = sup_increment_space(exponent, t, hv, derivative=d, theta=theta)
                vals[a, i, j] = inc.value
                env[a, i, j] = inc.bound
    ratio = vals / env
    idx = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    C = float(ratio[idx])
    slopes = np.array([[_slope(hs, vals[a, i]) for i in range(ts.size)]
                       for a in range(len(orders))])
    holds = bool(np.isfinite(C) and np.all(slopes >= theta - 0.05))
    return SupFitReport(tuple(orders), tuple(ts.tolist()), tuple(hs.tolist()), vals, env,
                        C, (int(orders[idx[0]]), float(ts[idx[1]]), float(hs[idx[2]])),
                        slopes, theta, holds)


def chapman_kolmogorov_error(exponent, s, t, lattice=None):
    """max |p_s * p_t - p_{s+t}| over the central half of a common lattice (n = 1)."""
    from scipy.signal import fftconvolve
    if exponent.n != 1:
        raise ValueError("provided for n = 1")
    if lattice is None:
        base = default_lattice(exponent, min(s, t))
        lattice = Lattice(1, 128 * _width(exponent, s + t), base.dx)
    ps = invert_density(exponent, s, lattice, use_cache=False)
    pt = invert_density(exponent, t, lattice, use_cache=False)
    pst = invert_density(exponent, s + t, lattice, use_cache=False)
    conv = fftconvolve(ps.values, pt.values, mode="same") * lattice.dx
    J = lattice.J
    mid = slice(J - J // 2, J + J // 2 + 1)
    return float(np.abs(conv[mid] - pst.values[mid]).max())
