"""Radial quadrature and power-law envelope arithmetic.

Improper integrals over R^n are split into a radial part, handled by
``scipy.integrate.quad`` on logarithmic panels, and a fixed angular design.
Whether such an integral is finite is never decided by quadrature; it is
decided from declared power-law envelopes by :func:`tail_finite` and
:func:`origin_finite`.
"""

import math
import warnings

import numpy as np
from scipy import integrate, special

from .exceptions import QuadratureError

ABS_TOL = 1e-9
REL_TOL = 1e-7


def sphere_area(n):
    """Surface measure of the unit sphere in R^n (2 for n = 1)."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def sphere_design(n, size=None):
    """Directions and weights integrating functions on S^{n-1}.

    Weights sum to the sphere area, so radial integrands are integrated
    exactly. n = 1 uses the two points +-1; n = 2 equispaced angles; n = 3 a
    Gauss-Legendre x trapezoid product rule.
    """
    if n == 1:
        return np.array([[1.0], [-1.0]]), np.ones(2)
    if n == 2:
        m = size or 32
        phi = (np.arange(m) + 0.5) * 2 * math.pi / m
        return np.stack([np.cos(phi), np.sin(phi)], axis=-1), np.full(m, 2 * math.pi / m)
    if n == 3:
        m = size or 12
        z, wz = np.polynomial.legendre.leggauss(m)
        k = 2 * m
        phi = (np.arange(k) + 0.5) * 2 * math.pi / k
        zz, pp = np.meshgrid(z, phi, indexing="ij")
        s = np.sqrt(1 - zz ** 2)
        dirs = np.stack([s * np.cos(pp), s * np.sin(pp), zz], axis=-1).reshape(-1, 3)
        w = (wz[:, None] * np.full(k, 2 * math.pi / k)[None, :]).ravel()
        return dirs, w
    raise ValueError("angular designs are provided for n <= 3 only")


def tail_finite(p, log_exponent=0.0):
    """Is int_1^inf r^p (log r)^l dr finite?"""
    if p == -math.inf:
        return True
    if abs(p + 1) < 1e-12:
        return log_exponent < -1
    return p < -1


def origin_finite(p, log_exponent=0.0):
    """Is int_0^1 r^p (log 1/r)^l dr finite?"""
    if p == math.inf:
        return True
    if abs(p + 1) < 1e-12:
        return log_exponent < -1
    return p > -1


def quad_checked(f, a, b, epsabs=ABS_TOL, epsrel=REL_TOL, limit=200, what="integral",
                 **kw):
    """``scipy.integrate.quad`` that raises instead of warning on failure."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(f, a, b, epsabs=epsabs, epsrel=epsrel, limit=limit,
                             full_output=1, **kw)
    val, err = out[0], out[1]
    ier = 0 if len(out) < 4 else 1
    if not math.isfinite(val) or (ier and err > 1e3 * max(epsabs, epsrel * abs(val))):
        raise QuadratureError(
            f"{what} did not converge on [{a}, {b}] (estimate {val}, error {err})")
    return val, err


def log_panels(a, b, per_panel=1.0):
    """Break [a, b] (0 < a < b < inf) into panels of equal log width."""
    la, lb = math.log10(a), math.log10(b)
    k = max(1, int(math.ceil((lb - la) / per_panel)))
    return np.logspace(la, lb, k + 1)


def radial_quad(g, a, b, epsabs=ABS_TOL, epsrel=REL_TOL, what="radial integral"):
    """Integrate a scalar function of r over [a, b] with 0 < a < b < inf.

    The substitution r = e^s is used on each decade, which keeps integrands
    with power-law behaviour well conditioned.
    """
    if b <= a:
        return 0.0, 0.0
    edges = log_panels(a, b)
    total, err = 0.0, 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, e = quad_checked(lambda s: g(math.exp(s)) * math.exp(s), math.log(lo),
                            math.log(hi), epsabs=epsabs / len(edges), epsrel=epsrel,
                            what=what)
        total += v
        err += e
    return total, err


def angular_average(fun, n, design=None):
    """Return r -> sum_k w_k fun(r * omega_k) for a vectorised ``fun``."""
    dirs, w = design if design is not None else sphere_design(n)

    def g(r):
        return float(np.dot(w, np.real(fun(r * dirs))))
    return g


def power_tail(p, a):
    """int_a^inf r^p dr for p < -1."""
    return a ** (p + 1) / (-(p + 1))


def power_head(p, a):
    """int_0^a r^p dr for p > -1."""
    return a ** (p + 1) / (p + 1)


def upper_gamma_power(a_exp, beta, t, R):
    """int_R^inf r^{a_exp - 1} exp(-t r^beta) dr, a_exp > 0."""
    s = a_exp / beta
    return t ** (-s) / beta * special.gamma(s) * special.gammaincc(s, t * R ** beta)


def decade_contributions(g, start, sign, count=14):
    """Integrals of ``g`` over successive decades going outwards (sign=+1)
    or towards the origin (sign=-1), starting at radius ``start``."""
    out = []
    r = start
    for _ in range(count):
        r2 = r * 10.0 ** sign
        lo, hi = (r, r2) if sign > 0 else (r2, r)
        v, _ = quad_checked(lambda s: g(math.exp(s)) * math.exp(s), math.log(lo),
                            math.log(hi), epsabs=0.0, epsrel=1e-8, what="decade panel")
        out.append(abs(v))
        r = r2
    return np.asarray(out)


def numeric_finiteness(contrib, finite_ratio=0.8, infinite_ratio=0.97):
    """Classify a sequence of decade contributions.

    Returns True (geometric decay), False (no decay) or None (undecided).
    Used only when no envelope is declared.
    """
    c = np.asarray(contrib, dtype=float)
    tail = c[-6:]
    if np.all(tail == 0):
        return True
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = tail[1:] / tail[:-1]
    ratios = ratios[np.isfinite(ratios)]
    if ratios.size == 0:
        return None
    r = float(np.max(ratios))
    if r <= finite_ratio:
        return True
    if float(np.min(ratios)) >= infinite_ratio:
        return False
    return None
