"""Characteristic exponents of Levy processes.

A :class:`CharacteristicExponent` bundles a vectorised map xi -> Psi(xi)
with declared radial envelopes (:class:`Asymptotics`). Envelopes drive every
finiteness decision; quadrature is only used to evaluate integrals already
known to be finite.

Convention: E exp(i<xi, X_t>) = exp(-t Psi(xi)) with

    Psi(xi) = i<a, xi> + 1/2 <xi, Sigma xi>
              + int (1 - exp(i<xi, x>) + i<xi, x> 1{|x| <= 1}) nu(dx).
"""

import math
import threading
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import interpolate, special

from . import _quadrature as q
from ._validation import as_frequencies, check_int, check_scalar
from .exceptions import (DimensionMismatchError, EnvelopeError, NondegeneracyError,
                         QuadratureError)

__all__ = [
    "AtomicMeasure", "RadialDensity", "LevyTriplet", "Asymptotics",
    "CharacteristicExponent", "AssumptionReport", "Assumption2Result",
    "MomentEquivalenceReport", "brownian", "stable", "cauchy", "compound_poisson",
    "tempered_stable", "custom_triplet", "exponent_from_config", "evaluate_psi",
    "estimate_beta_inf", "check_assumption2", "check_assumptions",
    "verify_moment_equivalence", "stable_measure_constant",
    "fractional_moment_fourier", "origin_integral",
]

EPS_INNER = 1e-8


def stable_measure_constant(n, alpha):
    """Constant c with int (1 - cos<xi,x>) c |x|^{-n-alpha} dx = |xi|^alpha."""
    return (alpha * 2 ** (alpha - 1) * math.gamma((n + alpha) / 2)
            / (math.pi ** (n / 2) * math.gamma(1 - alpha / 2)))


def _one_minus_angular(n, u):
    """1 - (spherical average of cos(u w_1)), stable for small u."""
    u = np.asarray(u, dtype=float)
    if n == 1:
        return 2.0 * np.sin(u / 2) ** 2
    small = u < 1e-2
    out = np.empty_like(u)
    us = u[small]
    out[small] = us ** 2 / (2 * n) - us ** 4 / (8 * n * (n + 2)) \
        + us ** 6 / (48 * n * (n + 2) * (n + 4))
    ub = u[~small]
    if n == 2:
        out[~small] = 1.0 - special.j0(ub)
    elif n == 3:
        out[~small] = 1.0 - np.sin(ub) / ub
    else:
        nu = n / 2 - 1
        out[~small] = 1.0 - math.gamma(n / 2) * (2 / ub) ** nu * special.jv(nu, ub)
    return out


# ---------------------------------------------------------------------------
# Levy measures and triplets
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AtomicMeasure:
    """Finite Levy measure: masses at a list of nonzero atoms."""

    locations: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        loc = np.atleast_2d(np.asarray(self.locations, dtype=float)).copy()
        m = np.atleast_1d(np.asarray(self.masses, dtype=float)).copy()
        if loc.shape[0] != m.shape[0]:
            raise ValueError("one mass is needed per atom")
        if np.any(m < 0) or not np.all(np.isfinite(m)):
            raise ValueError("atom masses must be finite and nonnegative")
        if np.any(np.linalg.norm(loc, axis=1) == 0):
            raise ValueError("a Levy measure assigns no mass to the origin")
        loc.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "masses", m)

    @property
    def n(self):
        return self.locations.shape[1]

    @property
    def total_mass(self):
        return float(self.masses.sum())

    def jump_part(self, xi):
        x = self.locations
        inner = xi @ x.T
        small = (np.linalg.norm(x, axis=1) <= 1.0)
        terms = 1.0 - np.exp(1j * inner) + 1j * inner * small
        return terms @ self.masses

    def tail_moment(self, kappa):
        r = np.linalg.norm(self.locations, axis=1)
        big = r > 1
        return float(np.sum(self.masses[big] * r[big] ** kappa))

    def small_second_moment(self):
        r = np.linalg.norm(self.locations, axis=1)
        return float(np.sum(self.masses[r <= 1] * r[r <= 1] ** 2))

    def mass_outside_unit_ball(self):
        r = np.linalg.norm(self.locations, axis=1)
        return float(np.sum(self.masses[r > 1]))

    def to_config(self):
        return {"atoms": self.locations.tolist(), "masses": self.masses.tolist()}


@dataclass(frozen=True)
class RadialDensity:
    """nu(dx) = c |x|^{-n-alpha} exp(-tempering |x|) on r_min <= |x| <= r_max."""

    n: int
    c: float
    alpha: float
    r_min: float = 0.0
    r_max: float = math.inf
    tempering: float = 0.0

    def __post_init__(self):
        check_int(self.n, "n", lo=1)
        check_scalar(self.c, "c", lo=0)
        check_scalar(self.alpha, "alpha", hi=2, hi_open=True)
        check_scalar(self.r_min, "r_min", lo=0)
        check_scalar(self.r_max, "r_max", lo=0, lo_open=True, allow_inf=True)
        check_scalar(self.tempering, "tempering", lo=0)
        if self.r_max <= self.r_min:
            raise ValueError("r_max must exceed r_min")
        light = self.r_max < math.inf or self.tempering > 0
        if self.alpha <= 0 and not light:
            raise ValueError("int (1 ^ |x|^2) nu(dx) diverges at infinity")

    def radial_weight(self, r):
        """Density of the radial image measure at r (includes r^{n-1})."""
        r = np.asarray(r, dtype=float)
        w = self.c * r ** (-1.0 - self.alpha) * np.exp(-self.tempering * r)
        return np.where((r >= self.r_min) & (r <= self.r_max), w, 0.0)

    @property
    def heavy_tail(self):
        return self.r_max == math.inf and self.tempering == 0

    def radial_integral_power(self, p, lo, hi):
        """int_lo^hi r^p c exp(-lam r) r^{-1-alpha} dr over the support (may be inf)."""
        lo = max(lo, self.r_min)
        hi = min(hi, self.r_max)
        if hi <= lo:
            return 0.0
        e = p - 1 - self.alpha
        if self.tempering == 0:
            if hi == math.inf:
                if e >= -1:
                    return math.inf
                return self.c * q.power_tail(e, lo)
            if abs(e + 1) < 1e-14:
                return self.c * math.log(hi / lo)
            return self.c * (hi ** (e + 1) - lo ** (e + 1)) / (e + 1)
        lam = self.tempering
        f = lambda r: self.c * r ** e * math.exp(-lam * r)
        if hi == math.inf:
            val, _ = q.quad_checked(f, lo, math.inf, what="tempered tail")
            return val
        val, _ = q.radial_quad(f, lo, hi, what="tempered moment")
        return val

    def jump_integral(self, s):
        """int (1 - cos<xi,x>) nu(dx) at |xi| = s, with an error estimate.

        Jumps below the inner cutoff EPS_INNER are replaced by the leading
        term s^2 r^2 / (2n) of the compensated integrand.
        """
        s = float(s)
        if s == 0:
            return 0.0, 0.0
        n, c, a, lam = self.n, self.c, self.alpha, self.tempering
        area = q.sphere_area(n)
        val = err = 0.0
        lo = max(self.r_min, EPS_INNER)
        hi = self.r_max
        if self.r_min < EPS_INNER:
            top = min(EPS_INNER, hi)
            head = (top ** (2 - a) - self.r_min ** (2 - a)) / (2 - a)
            val += c * s * s / (2 * n) * head
            err += c * s ** 4 * top ** (4 - a) / (8 * n * (n + 2) * (4 - a))
        if hi <= lo:
            return area * val, area * err

        def g(r):
            return c * r ** (-1 - a) * math.exp(-lam * r) * float(_one_minus_angular(n, r * s))

        mid = min(hi, max(lo, 8 * math.pi / s))
        v, e = q.radial_quad(g, lo, mid, what="jump integral")
        val += v
        err += e
        if hi > mid:
            v, e = self._oscillatory_part(s, mid, hi)
            val += v
            err += e
        return area * val, area * err

    def _oscillatory_part(self, s, a, hi):
        n, c, al, lam = self.n, self.c, self.alpha, self.tempering
        f = lambda r: c * r ** (-1 - al) * math.exp(-lam * r)
        if hi < math.inf and (hi - a) * s < 400:
            edges = np.linspace(a, hi, int((hi - a) * s / 10) + 2)
            tot = er = 0.0
            for x0, x1 in zip(edges[:-1], edges[1:]):
                v, e = q.quad_checked(
                    lambda r: f(r) * float(_one_minus_angular(n, r * s)), x0, x1,
                    what="jump integral")
                tot += v
                er += e
            return tot, er
        # int f - int f * A_n
        if lam == 0 and hi == math.inf:
            plain, perr = c * a ** (-al) / al, 0.0
        elif lam == 0:
            plain, perr = c * (a ** (-al) - hi ** (-al)) / al, 0.0
        else:
            plain, perr = q.quad_checked(f, a, hi, what="jump integral")
        if n == 1:
            osc, oerr = q.quad_checked(f, a, hi, weight="cos", wvar=s,
                                       what="oscillatory jump integral")
        elif n == 3:
            osc, oerr = q.quad_checked(lambda r: f(r) / (r * s), a, hi, weight="sin",
                                       wvar=s, what="oscillatory jump integral")
        elif n == 2:
            osc, oerr = self._bessel_tail(f, s, a, hi)
        else:
            raise ValueError("density-form Levy measures are supported for n <= 3")
        return plain - osc, perr + oerr

    @staticmethod
    def _bessel_tail(f, s, a, hi, zeros=400):
        """int_a^hi f(r) J0(r s) dr by summing between zeros of J0 and
        repeatedly averaging partial sums of the resulting alternating series."""
        z = special.jn_zeros(0, zeros) / s
        z = z[z > a]
        if hi < math.inf:
            z = z[z < hi]
        edges = np.concatenate([[a], z] + ([[hi]] if hi < math.inf else []))
        parts = []
        err = 0.0
        for x0, x1 in zip(edges[:-1], edges[1:]):
            v, e = q.quad_checked(lambda r: f(r) * special.j0(r * s), x0, x1,
                                  what="Bessel panel")
            parts.append(v)
            err += e
        partial = np.cumsum(parts)
        if hi < math.inf or partial.size < 24:
            return float(partial[-1]), err
        seq = partial[-24:]
        for _ in range(12):
            seq = 0.5 * (seq[1:] + seq[:-1])
        return float(seq[-1]), err + float(abs(seq[-1] - seq[-2]))

    def to_config(self):
        d = {"c": self.c, "alpha": self.alpha}
        if self.r_min:
            d["r_min"] = self.r_min
        if self.r_max != math.inf:
            d["r_max"] = self.r_max
        if self.tempering:
            d["tempering"] = self.tempering
        return d


@dataclass(frozen=True, eq=False)
class LevyTriplet:
    """(a, Sigma, nu); nu is None, an AtomicMeasure or a RadialDensity."""

    drift: np.ndarray
    gaussian: np.ndarray
    levy_measure: object = None

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.drift, dtype=float)).copy()
        n = a.shape[0]
        S = np.asarray(self.gaussian, dtype=float).reshape(n, n).copy() \
            if np.ndim(self.gaussian) else np.eye(n) * float(self.gaussian)
        if not np.allclose(S, S.T, atol=1e-10):
            raise ValueError("Sigma must be symmetric")
        if np.linalg.eigvalsh(S).min() < -1e-10:
            raise ValueError("Sigma must be positive semidefinite")
        nu = self.levy_measure
        if nu is not None and nu.n != n:
            raise DimensionMismatchError("Levy measure dimension does not match drift")
        a.setflags(write=False)
        S.setflags(write=False)
        object.__setattr__(self, "drift", a)
        object.__setattr__(self, "gaussian", S)

    @property
    def n(self):
        return self.drift.shape[0]

    def psi(self, xi, return_error=False):
        """Evaluate the Levy-Khintchine formula at points of shape (..., n)."""
        xi = np.asarray(xi, dtype=float)
        val = np.asarray(1j * (xi @ self.drift) + 0.5 * np.einsum(
            "...i,ij,...j->...", xi, self.gaussian, xi), dtype=complex)
        err = np.zeros(val.shape)
        nu = self.levy_measure
        if isinstance(nu, AtomicMeasure):
            val = val + nu.jump_part(xi)
        elif isinstance(nu, RadialDensity):
            s = np.linalg.norm(xi, axis=-1)
            flat = s.ravel()
            jv = np.empty(flat.shape)
            je = np.empty(flat.shape)
            for k, sk in enumerate(flat):
                jv[k], je[k] = nu.jump_integral(sk)
            val = val + jv.reshape(s.shape)
            err = je.reshape(s.shape)
        return (val, err) if return_error else val

    def asymptotics(self):
        """Envelope exponents implied by the triplet."""
        n = self.n
        nu = self.levy_measure
        gauss = np.linalg.eigvalsh(self.gaussian)
        has_gauss = gauss.max() > 1e-14
        full_gauss = gauss.min() > 1e-14
        net = self.drift.copy()
        # large-radius growth of Re Psi
        beta = 0.0
        if full_gauss:
            beta = 2.0
        elif isinstance(nu, RadialDensity) and nu.r_min == 0 and nu.c > 0:
            beta = nu.alpha if nu.alpha > 0 else 0.0
        re_zero = math.inf
        if has_gauss:
            re_zero = 2.0
        if isinstance(nu, AtomicMeasure) and nu.total_mass > 0:
            re_zero = 2.0
            r = np.linalg.norm(nu.locations, axis=1)
            net = net - (nu.masses[r > 1, None] * nu.locations[r > 1]).sum(axis=0)
        if isinstance(nu, RadialDensity) and nu.c > 0:
            re_zero = min(re_zero, nu.alpha if nu.heavy_tail else 2.0)
        abs_zero = 1.0 if np.linalg.norm(net) > 1e-14 else re_zero
        abs_inf = max(beta, 1.0 if np.linalg.norm(self.drift) > 0 else 0.0)
        if has_gauss:
            abs_inf = 2.0
        if isinstance(nu, RadialDensity) and nu.r_min == 0 and nu.alpha > 0:
            abs_inf = max(abs_inf, nu.alpha)
        return dict(beta_inf=beta, abs_inf=abs_inf, re_zero=re_zero,
                    abs_zero=min(abs_zero, re_zero), growth_const=self.growth_constant())

    def growth_constant(self):
        """A rigorous C with |Psi(xi)| <= C (1 + |xi|^2)."""
        C = 0.5 * float(np.linalg.norm(self.drift)) + 0.5 * float(
            np.linalg.eigvalsh(self.gaussian).max(initial=0.0))
        nu = self.levy_measure
        if isinstance(nu, AtomicMeasure):
            C += 0.5 * nu.small_second_moment() + 2 * nu.mass_outside_unit_ball()
        elif isinstance(nu, RadialDensity):
            area = q.sphere_area(self.n)
            C += 0.5 * area * nu.radial_integral_power(2.0, 0.0, 1.0)
            C += 2 * area * nu.radial_integral_power(0.0, 1.0, math.inf)
        return C

    def tail_moment(self, kappa):
        """int_{|x|>1} |x|^kappa nu(dx) (inf when divergent)."""
        nu = self.levy_measure
        if nu is None:
            return 0.0
        if isinstance(nu, AtomicMeasure):
            return nu.tail_moment(kappa)
        return q.sphere_area(self.n) * nu.radial_integral_power(kappa, 1.0, math.inf)

    def to_config(self):
        d = {"drift": self.drift.tolist(), "gaussian": self.gaussian.tolist()}
        nu = self.levy_measure
        if isinstance(nu, AtomicMeasure):
            d["levy_measure"] = {"type": "atomic", **nu.to_config()}
        elif isinstance(nu, RadialDensity):
            d["levy_measure"] = {"type": "radial", **nu.to_config()}
        return d

    @classmethod
    def from_config(cls, d):
        d = dict(d)
        drift = np.atleast_1d(np.asarray(d.pop("drift", [0.0]), dtype=float))
        n = drift.shape[0]
        gaussian = d.pop("gaussian", 0.0)
        lm = d.pop("levy_measure", None)
        if d:
            raise KeyError(f"unknown triplet key(s): {sorted(d)}")
        nu = None
        if lm is not None:
            lm = dict(lm)
            kind = lm.pop("type", None)
            if kind == "atomic":
                nu = AtomicMeasure(np.asarray(lm.pop("atoms"), dtype=float).reshape(-1, n),
                                   lm.pop("masses"))
            elif kind == "radial":
                nu = RadialDensity(n=n, **lm)
                lm = {}
            else:
                raise KeyError(f"unknown levy_measure type {kind!r}")
            if lm:
                raise KeyError(f"unknown levy_measure key(s): {sorted(lm)}")
        return cls(drift, gaussian, nu)


# ---------------------------------------------------------------------------
# characteristic exponents
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Asymptotics:
    """Declared radial envelopes of Psi.

    Re Psi >= lower_const * r**beta_inf for r >= split_radius, |Psi| grows like
    r**abs_inf at infinity, and near the origin Re Psi and |Psi| behave like
    r**re_zero and r**abs_zero. ``None`` means undeclared.
    """

    beta_inf: float = None
    abs_inf: float = None
    re_zero: float = None
    abs_zero: float = None
    growth_const: float = 1.0
    lower_const: float = 1.0
    split_radius: float = 1.0


class CharacteristicExponent:
    """Immutable wrapper around a vectorised characteristic exponent.

    Parameters
    ----------
    name : str
        Catalog key (``"brownian"``, ``"stable"``, ...) or a user label.
    n : int
        Spatial dimension.
    psi : callable
        Maps an array of shape (..., n) to complex values of shape (...).
    asymptotics : Asymptotics
    triplet : LevyTriplet, optional
    params : dict, optional
        Catalog parameters, used for hashing, serialisation and samplers.
    kind : {"closed_form", "triplet"}
    tail_index : float
        Sup of kappa with E|X_t|^kappa finite (inf for light tails).
    tail_const : float, optional
        c such that the Levy density behaves like c |x|^{-n-tail_index}.
    tail_terms : tuple, optional
        Triples (k, a_k, s_k) with p_t(x) ~ sum a_k t^k |x|^{-s_k} at large
        |x|; used to remove periodisation error of heavy-tailed densities.
    nondegenerate : bool
        Whether Psi vanishes only at the origin.
    """

    def __init__(self, name, n, psi, asymptotics, triplet=None, params=None,
                 kind="closed_form", tail_index=math.inf, tail_const=None,
                 tail_terms=None, nondegenerate=True):
        self.name = name
        self.n = check_int(n, "n", lo=1)
        self._psi = psi
        self.asymptotics = asymptotics
        self.triplet = triplet
        self.params = dict(params or {})
        self.kind = kind
        self.tail_index = tail_index
        self.tail_const = tail_const
        if tail_terms is None and tail_const is not None:
            tail_terms = ((1, tail_const, n + tail_index),)
        self.tail_terms = tuple(tail_terms or ())
        self.nondegenerate = nondegenerate
        if kind == "closed_form":
            self.key = (name, n) + tuple(sorted((k, _freeze(v)) for k, v in self.params.items()))
        else:
            self.key = (name, n, id(self))

    def __repr__(self):
        p = ", ".join(f"{k}={v}" for k, v in self.params.items())
        return f"CharacteristicExponent({self.name}, n={self.n}{', ' + p if p else ''})"

    def __call__(self, xi):
        arr, single = as_frequencies(xi, self.n)
        out = np.asarray(self._psi(arr), dtype=complex)
        return complex(out.reshape(-1)[0]) if single else out

    def re(self, xi):
        return np.real(self(xi))

    def im(self, xi):
        return np.imag(self(xi))

    @property
    def beta_inf(self):
        return self.asymptotics.beta_inf

    @property
    def has_sampler(self):
        return self.name in ("brownian", "stable", "cauchy", "compound_poisson",
                             "tempered_stable")

    def assumption1_holds(self, limiting_case=False):
        b = self.asymptotics.beta_inf
        if b is None:
            return False
        if limiting_case:
            return 0 < b <= 2
        return 0 < b < 2

    def to_config(self):
        d = {"kind": self.name, "n": self.n}
        d.update(self.params)
        if self.name == "custom_triplet":
            d["triplet"] = self.triplet.to_config()
            a = self.asymptotics
            d["asymptotics"] = {k: getattr(a, k) for k in
                                ("beta_inf", "abs_inf", "re_zero", "abs_zero")}
            d.pop("label", None)
        return d


def _freeze(v):
    if isinstance(v, (list, tuple)):
        return tuple(_freeze(x) for x in v)
    return v


def brownian(n=1):
    """Psi(xi) = |xi|^2, i.e. X_t ~ N(0, 2t I)."""
    n = check_int(n, "n", lo=1)
    trip = LevyTriplet(np.zeros(n), 2.0 * np.eye(n))
    return CharacteristicExponent(
        "brownian", n, lambda xi: np.sum(xi * xi, axis=-1).astype(complex),
        Asymptotics(2.0, 2.0, 2.0, 2.0, growth_const=1.0), triplet=trip)


def stable(alpha, n=1):
    """Isotropic alpha-stable, Psi(xi) = |xi|^alpha, 0 < alpha < 2."""
    n = check_int(n, "n", lo=1)
    alpha = check_scalar(alpha, "alpha", lo=0, hi=2, lo_open=True, hi_open=True)
    c = stable_measure_constant(n, alpha)
    trip = LevyTriplet(np.zeros(n), np.zeros((n, n)), RadialDensity(n, c, alpha))
    name = "cauchy" if alpha == 1.0 else "stable"
    params = {} if name == "cauchy" else {"alpha": alpha}
    return CharacteristicExponent(
        name, n, lambda xi: np.linalg.norm(xi, axis=-1) ** alpha + 0j,
        Asymptotics(alpha, alpha, alpha, alpha, growth_const=1.0), triplet=trip,
        params=params, tail_index=alpha, tail_const=c,
        tail_terms=_stable_tail_series(alpha) if n == 1 else None)


def _stable_tail_series(alpha, terms=4):
    """Large-|x| expansion of the symmetric stable density on R."""
    out = []
    for k in range(1, terms + 1):
        a = (-1) ** (k + 1) * math.gamma(k * alpha + 1) / math.factorial(k) \
            * math.sin(k * math.pi * alpha / 2) / math.pi
        if abs(a) > 1e-15:
            out.append((k, a, 1 + k * alpha))
    return tuple(out)


def cauchy(n=1):
    """Psi(xi) = |xi|; X_1 has the standard multivariate Cauchy law."""
    return stable(1.0, n)


def compound_poisson(atoms=((1.0,),), masses=(1.0,), drift=None):
    """Finite atomic Levy measure (no Gaussian part).

    Re Psi stays bounded, so the nondegeneracy condition fails and the
    process has no transition density; it is kept for the moment-equivalence checks.
    """
    nu = AtomicMeasure(atoms, masses)
    n = nu.n
    a = np.zeros(n) if drift is None else np.asarray(drift, dtype=float)
    trip = LevyTriplet(a, np.zeros((n, n)), nu)
    env = trip.asymptotics()
    params = {"atoms": nu.locations.tolist(), "masses": nu.masses.tolist()}
    if drift is not None:
        params["drift"] = a.tolist()
    return CharacteristicExponent(
        "compound_poisson", n, trip.psi,
        Asymptotics(env["beta_inf"], env["abs_inf"], env["re_zero"], env["abs_zero"],
                    growth_const=env["growth_const"]),
        triplet=trip, params=params, nondegenerate=False)


def tempered_stable_constant(alpha):
    """Levy density constant making Psi(xi) ~ |xi|^alpha at infinity (n = 1)."""
    return -1.0 / (2.0 * math.gamma(-alpha) * math.cos(math.pi * alpha / 2))


def tempered_stable(alpha, lam=1.0):
    """Symmetric tempered stable law on R (n = 1).

    nu(dx) = c exp(-lam |x|) |x|^{-1-alpha} dx with c chosen so that
    Psi(xi) / |xi|^alpha -> 1; alpha in (0, 1) or (1, 2).
    """
    alpha = check_scalar(alpha, "alpha", lo=0, hi=2, lo_open=True, hi_open=True)
    lam = check_scalar(lam, "lam", lo=0, lo_open=True)
    if alpha == 1.0:
        raise ValueError("tempered_stable needs alpha != 1")
    c = tempered_stable_constant(alpha)
    den = math.cos(math.pi * alpha / 2)

    def psi(xi):
        x = xi[..., 0]
        mod = (lam * lam + x * x) ** (alpha / 2) * np.cos(alpha * np.arctan(np.abs(x) / lam))
        return ((mod - lam ** alpha) / den) + 0j

    trip = LevyTriplet(np.zeros(1), np.zeros((1, 1)),
                       RadialDensity(1, c, alpha, tempering=lam))
    M = 10.0 * lam
    r = np.logspace(math.log10(M), 8, 400)
    ratio = np.real(psi(r[:, None])) / r ** alpha
    return CharacteristicExponent(
        "tempered_stable", 1, psi,
        Asymptotics(alpha, alpha, 2.0, 2.0, growth_const=1.0,
                    lower_const=float(ratio.min()) * (1 - 1e-3), split_radius=M),
        triplet=trip, params={"alpha": alpha, "lam": lam})


class _TabulatedJump:
    """Spline of the radial jump integral J(s) on a log grid (lazy, locked)."""

    def __init__(self, density):
        self.density = density
        self._lock = threading.Lock()
        self._spline = None

    def _build(self):
        s = np.logspace(-6, 6, 241)
        J = np.array([self.density.jump_integral(v)[0] for v in s])
        J = np.maximum(J, 1e-300)
        ls, lJ = np.log(s), np.log(J)
        self._lo = (ls[0], lJ[0], (lJ[1] - lJ[0]) / (ls[1] - ls[0]))
        self._hi = (ls[-1], lJ[-1], (lJ[-1] - lJ[-2]) / (ls[-1] - ls[-2]))
        return interpolate.CubicSpline(ls, lJ)

    def __call__(self, s):
        if self._spline is None:
            with self._lock:
                if self._spline is None:
                    self._spline = self._build()
        s = np.asarray(s, dtype=float)
        out = np.zeros(s.shape)
        pos = s > 0
        ls = np.log(s[pos])
        v = self._spline(np.clip(ls, self._lo[0], self._hi[0]))
        v = np.where(ls < self._lo[0], self._lo[1] + self._lo[2] * (ls - self._lo[0]), v)
        v = np.where(ls > self._hi[0], self._hi[1] + self._hi[2] * (ls - self._hi[0]), v)
        out[pos] = np.exp(v)
        return out


def custom_triplet(triplet, asymptotics=None, label="custom"):
    """Exponent defined by a user triplet.

    Envelope exponents are derived from the triplet unless ``asymptotics`` is
    given. Density-form jump integrals are tabulated once on a log grid for
    fast vectorised evaluation; :func:`evaluate_psi` with ``form="triplet"``
    still evaluates them by direct quadrature.
    """
    if not isinstance(triplet, LevyTriplet):
        raise TypeError("triplet must be a LevyTriplet")
    env = triplet.asymptotics()
    if asymptotics is None:
        asymptotics = Asymptotics(env["beta_inf"], env["abs_inf"], env["re_zero"],
                                  env["abs_zero"], growth_const=env["growth_const"])
    nu = triplet.levy_measure
    table = _TabulatedJump(nu) if isinstance(nu, RadialDensity) else None

    def psi(xi):
        base = 1j * (xi @ triplet.drift) + 0.5 * np.einsum(
            "...i,ij,...j->...", xi, triplet.gaussian, xi)
        if isinstance(nu, AtomicMeasure):
            base = base + nu.jump_part(xi)
        elif table is not None:
            base = base + table(np.linalg.norm(xi, axis=-1))
        return base

    tail = math.inf
    tail_const = None
    if isinstance(nu, RadialDensity) and nu.heavy_tail and nu.c > 0:
        tail, tail_const = nu.alpha, nu.c
    gauss_full = np.linalg.eigvalsh(triplet.gaussian).min() > 1e-14
    nondeg = gauss_full or (isinstance(nu, RadialDensity) and nu.r_min == 0 and nu.c > 0)
    return CharacteristicExponent("custom_triplet", triplet.n, psi, asymptotics,
                                  triplet=triplet, params={"label": label}, kind="triplet",
                                  tail_index=tail, tail_const=tail_const,
                                  nondegenerate=nondeg)


def exponent_from_config(cfg):
    """Build an exponent from a JSON-style dict, e.g. ``{"kind": "stable",
    "alpha": 1.5, "n": 1}``. Unknown keys raise KeyError."""
    cfg = dict(cfg)
    kind = cfg.pop("kind", None)
    n = cfg.pop("n", 1)
    allowed = {
        "brownian": set(), "cauchy": set(), "stable": {"alpha"},
        "tempered_stable": {"alpha", "lam"},
        "compound_poisson": {"atoms", "masses", "drift"},
        "custom_triplet": {"triplet", "asymptotics"},
    }
    if kind not in allowed:
        raise KeyError(f"unknown process kind {kind!r}")
    extra = set(cfg) - allowed[kind]
    if extra:
        raise KeyError(f"unknown key(s) for {kind}: {sorted(extra)}")
    if kind == "brownian":
        return brownian(n)
    if kind == "cauchy":
        return cauchy(n)
    if kind == "stable":
        return stable(cfg["alpha"], n)
    if kind == "tempered_stable":
        if n != 1:
            raise ValueError("tempered_stable is provided for n = 1 only")
        return tempered_stable(cfg["alpha"], cfg.get("lam", 1.0))
    if kind == "compound_poisson":
        return compound_poisson(cfg.get("atoms", [[1.0]]), cfg.get("masses", [1.0]),
                                cfg.get("drift"))
    trip = LevyTriplet.from_config(cfg["triplet"])
    if trip.n != n:
        raise DimensionMismatchError("triplet dimension does not match n")
    asym = cfg.get("asymptotics")
    if asym is not None:
        asym = dict(asym)
        base = trip.asymptotics()
        unknown = set(asym) - {"beta_inf", "abs_inf", "re_zero", "abs_zero",
                               "growth_const", "lower_const", "split_radius"}
        if unknown:
            raise KeyError(f"unknown asymptotics key(s): {sorted(unknown)}")
        asym.setdefault("growth_const", base["growth_const"])
        asym = Asymptotics(**asym)
    return custom_triplet(trip, asym)


def evaluate_psi(exponent, xi, form="auto", return_error=False):
    """Psi(xi) for a single point or an array of points.

    ``form="triplet"`` forces the Levy-Khintchine evaluation (jump integrals
    by quadrature for density-form measures); ``"closed"`` forces the closed
    form; ``"auto"`` prefers the closed form.
    """
    arr, single = as_frequencies(xi, exponent.n)
    if not np.all(np.isfinite(arr)):
        raise ValueError("xi must be finite")
    use_triplet = form == "triplet" or (form == "auto" and exponent.kind == "triplet")
    if form not in ("auto", "closed", "triplet"):
        raise ValueError("form must be 'auto', 'closed' or 'triplet'")
    if use_triplet:
        if exponent.triplet is None:
            raise ValueError("exponent has no triplet form")
        val, err = exponent.triplet.psi(arr, return_error=True)
    else:
        if exponent.kind == "triplet" and form == "closed":
            raise ValueError("exponent has no closed form")
        val = np.asarray(exponent._psi(arr), dtype=complex)
        err = np.zeros(val.shape)
    if single:
        val, err = complex(val.reshape(-1)[0]), float(err.reshape(-1)[0])
    return (val, err) if return_error else val


# ---------------------------------------------------------------------------
# assumptions
# ---------------------------------------------------------------------------

def _rays(n, count):
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        phi = np.arange(count) * 2 * math.pi / count + 0.1
        return np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    # Fibonacci sphere
    k = np.arange(count) + 0.5
    z = 1 - 2 * k / count
    phi = math.pi * (3 - math.sqrt(5)) * k
    s = np.sqrt(1 - z * z)
    dirs = np.zeros((count, n))
    dirs[:, 0], dirs[:, 1], dirs[:, 2] = s * np.cos(phi), s * np.sin(phi), z
    return dirs


def estimate_beta_inf(exponent, ray_count=16, radius_schedule=None,
                      return_diagnostics=False):
    """Lower growth index of Re Psi at infinity.

    Least-squares slope of log Re Psi against log |xi| over the largest decade
    of ``radius_schedule``, minimised over rays (a surrogate for liminf).
    """
    r = np.logspace(0, 4, 41) if radius_schedule is None else \
        np.asarray(radius_schedule, dtype=float)
    if r.ndim != 1 or r.size < 2 or np.any(np.diff(r) <= 0) or r[0] <= 0:
        raise ValueError("radius_schedule must be positive and increasing")
    if r[-1] < 1e3:
        raise ValueError("radius_schedule must reach at least 1e3")
    top = r[r >= r[-1] / 10]
    if top.size < 2:
        raise ValueError("radius_schedule needs >= 2 radii in its largest decade")
    dirs = _rays(exponent.n, check_int(ray_count, "ray_count", lo=1))
    slopes = []
    for d in dirs:
        re = np.real(exponent(top[:, None] * d[None, :]))
        if np.any(re <= 0):
            raise NondegeneracyError(
                f"Re Psi vanishes on the ray {d.tolist()} at large radius")
        slopes.append(np.polyfit(np.log(top), np.log(re), 1)[0])
    slopes = np.asarray(slopes)
    beta = float(slopes.min())
    declared = exponent.asymptotics.beta_inf
    diag = {"slopes": slopes.tolist(), "declared": declared,
            "disagreement": None if declared is None else abs(beta - declared),
            "disagrees": declared is not None and abs(beta - declared) > 0.05}
    return (beta, diag) if return_diagnostics else beta


@dataclass(frozen=True)
class Assumption2Result:
    kappa0: float
    finite: bool
    value: float
    error: float
    method: str
    refinement: tuple = ()


def origin_integral(exponent, kappa, part="abs", eps_schedule=(1e-4, 1e-6, 1e-8)):
    """int_{|xi| <= 1} f(Psi(xi)) / |xi|^{n + kappa} dxi for f = |.| or Re.

    Finiteness comes from the declared near-zero envelope; the finite part is
    integrated on [eps, 1] and the piece on [0, eps] is completed from the
    envelope. Returns (finite, value, error, method, refinement).
    """
    n = exponent.n
    fun = np.abs if part == "abs" else np.real
    env = exponent.asymptotics.abs_zero if part == "abs" else exponent.asymptotics.re_zero
    g_ang = q.angular_average(lambda x: fun(exponent(x)), n)
    g = lambda r: g_ang(r) * r ** (-1 - kappa)
    if env is not None:
        if not q.origin_finite(env - kappa - 1):
            return False, math.inf, 0.0, "exponent arithmetic", ()
        vals = []
        for eps in eps_schedule:
            v, e = q.radial_quad(g, eps, 1.0, what="origin integral")
            p = env - kappa
            lead = g_ang(eps) / eps ** env if env != math.inf else 0.0
            rem = lead * eps ** p / p if env != math.inf else 0.0
            vals.append((v + rem, e))
        spread = abs(vals[-1][0] - vals[-2][0])
        return True, vals[-1][0], vals[-1][1] + spread, "exponent arithmetic", \
            tuple(v for v, _ in vals)
    # no envelope: decide by decade contributions towards the origin
    contrib = q.decade_contributions(g, 1.0, -1, count=14)
    verdict = q.numeric_finiteness(contrib)
    if verdict is None:
        raise EnvelopeError(
            "near-zero envelope undeclared and the epsilon-refinement does not "
            "stabilise; declare asymptotics for this exponent")
    if not verdict:
        return False, math.inf, 0.0, "epsilon refinement", tuple(np.cumsum(contrib))
    ratio = contrib[-1] / contrib[-2] if contrib[-2] > 0 else 0.0
    tail = contrib[-1] * ratio / (1 - ratio) if ratio < 1 else 0.0
    total = float(contrib.sum() + tail)
    return True, total, float(tail), "epsilon refinement", tuple(np.cumsum(contrib))


def check_assumption2(exponent, kappa0):
    """Is int_{|xi|<=1} |Psi| / |xi|^{n+kappa0} finite, and what is it?"""
    kappa0 = check_scalar(kappa0, "kappa0", lo=0, hi=1, lo_open=True, hi_open=True)
    finite, val, err, method, refine = origin_integral(exponent, kappa0, "abs")
    return Assumption2Result(kappa0, finite, val, err, method, refine)


@dataclass(frozen=True)
class AssumptionReport:
    beta_inf: float
    kappa0: float
    assumption1_holds: bool
    assumption2_holds: bool
    limiting_case: bool = False
    diagnostics: dict = field(default_factory=dict)


def check_assumptions(exponent, kappa0, limiting_case=False, **beta_kw):
    """Nondegeneracy (power growth of Re Psi, 0 < beta_inf < 2) and the
    fractional moment condition together.

    With ``limiting_case=True`` beta_inf = 2 (Gaussian part) is accepted and
    labelled as a limiting case rather than rejected.
    """
    try:
        beta, diag = estimate_beta_inf(exponent, return_diagnostics=True, **beta_kw)
    except NondegeneracyError as exc:
        beta, diag = 0.0, {"error": str(exc)}
    declared = exponent.asymptotics.beta_inf
    b = declared if declared is not None else beta
    a1 = (0 < b < 2) or (limiting_case and abs(b - 2) < 1e-12)
    a2 = check_assumption2(exponent, kappa0)
    return AssumptionReport(
        beta_inf=b, kappa0=a2.kappa0, assumption1_holds=bool(a1 and b > 0),
        assumption2_holds=a2.finite, limiting_case=bool(limiting_case and b == 2),
        diagnostics={"beta_regression": beta, **diag, "assumption2_value": a2.value,
                     "assumption2_error": a2.error, "assumption2_method": a2.method})


def fractional_moment_fourier(exponent, t, kappa):
    """E|X_t|^kappa from int (1 - Re e^{-t Psi}) / |xi|^{n+kappa} dxi.

    Requires Re Psi to grow at infinity (beta_inf > 0); returns inf when the
    envelope arithmetic shows the moment is infinite.
    """
    n = exponent.n
    env = exponent.asymptotics
    if env.beta_inf is None or env.beta_inf <= 0:
        raise ValueError("Fourier moment formula needs Re Psi to grow at infinity")
    if t == 0:
        return 0.0
    if not q.origin_finite(min(env.re_zero, 2 * env.abs_zero) - kappa - 1):
        return math.inf
    design = q.sphere_design(n)

    def h(r):
        z = np.exp(-t * exponent(r * design[0]))
        return float(np.dot(design[1], 1 - np.real(z))) * r ** (-1 - kappa)

    width = t ** (-1 / env.beta_inf)
    R = width * (60.0 / env.lower_const) ** (1 / env.beta_inf) + env.split_radius
    lo = 1e-8 * width
    v1, _ = q.radial_quad(h, lo, R, what="Fourier moment")
    # near the origin the integrand behaves like r^(p-1)
    p = min(env.re_zero, 2 * env.abs_zero) - kappa
    head = h(lo) * lo / p
    tail = q.sphere_area(n) * R ** (-kappa) / kappa
    return (v1 + head + tail) * stable_measure_constant(n, kappa)


@dataclass(frozen=True)
class MomentEquivalenceReport:
    kappa0: float
    finite: tuple
    values: tuple
    agree: bool
    mc_value: float = None
    mc_stderr: float = None


def verify_moment_equivalence(exponent, kappa0, t=1.0, replicas=100_000, seed=0):
    """Evaluate the four equivalent moment statements.

    (1) E|X_t|^kappa0, (2) int_{|x|>1} |x|^kappa0 nu(dx), (3) the Re Psi origin
    integral, (4) the |Psi| origin integral. Finiteness of (1) is decided from
    the envelopes via the Fourier moment formula; its value comes from Monte
    Carlo when a sampler exists and from the Fourier formula otherwise.
    """
    if exponent.triplet is None:
        raise ValueError("a triplet form is required")
    kappa0 = check_scalar(kappa0, "kappa0", lo=0, hi=1, lo_open=True, hi_open=True)
    env = exponent.asymptotics
    fin1 = q.origin_finite(min(env.re_zero, 2 * env.abs_zero) - kappa0 - 1)
    v1 = math.inf
    mc = se = None
    if fin1:
        if exponent.has_sampler:
            from .moments import estimate_fractional_moment
            est = estimate_fractional_moment(exponent, t, kappa0, replicas, seed=seed,
                                             integral_bound=False)
            v1, mc, se = est.mc_value, est.mc_value, est.mc_stderr
        else:
            v1 = fractional_moment_fourier(exponent, t, kappa0)
    v2 = exponent.triplet.tail_moment(kappa0)
    f3, v3, _, _, _ = origin_integral(exponent, kappa0, "re")
    f4, v4, _, _, _ = origin_integral(exponent, kappa0, "abs")
    finite = (bool(fin1), bool(math.isfinite(v2)), bool(f3), bool(f4))
    return MomentEquivalenceReport(kappa0, finite, (v1, v2, v3, v4),
                                   agree=len(set(finite)) == 1, mc_value=mc, mc_stderr=se)
