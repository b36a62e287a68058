"""Small argument checks shared by the public modules."""

import math
import numbers

import numpy as np

from .exceptions import DimensionMismatchError, InsufficientGridError


def check_scalar(x, name, lo=None, hi=None, lo_open=False, hi_open=False,
                 allow_inf=False):
    """Return ``x`` as a float after checking bounds; raise ValueError otherwise."""
    if isinstance(x, bool) or not isinstance(x, (numbers.Real, np.floating, np.integer)):
        raise TypeError(f"{name} must be a real number, got {type(x).__name__}")
    x = float(x)
    if math.isnan(x) or (not allow_inf and math.isinf(x)):
        raise ValueError(f"{name} must be finite, got {x}")
    if lo is not None and (x < lo or (lo_open and x == lo)):
        op = ">" if lo_open else ">="
        raise ValueError(f"{name} must be {op} {lo}, got {x}")
    if hi is not None and (x > hi or (hi_open and x == hi)):
        op = "<" if hi_open else "<="
        raise ValueError(f"{name} must be {op} {hi}, got {x}")
    return x


def check_int(x, name, lo=None):
    if isinstance(x, bool) or not isinstance(x, (numbers.Integral, np.integer)):
        raise TypeError(f"{name} must be an integer, got {type(x).__name__}")
    x = int(x)
    if lo is not None and x < lo:
        raise ValueError(f"{name} must be >= {lo}, got {x}")
    return x


def check_seed(seed):
    seed = check_int(seed, "seed", lo=0)
    if seed >= 2 ** 64:
        raise ValueError("seed must fit in 64 bits")
    return seed


def check_power_of_two(N, name="N"):
    N = check_int(N, name, lo=2)
    if N & (N - 1):
        raise ValueError(f"{name} must be a power of two, got {N}")
    return N


def as_frequencies(xi, n):
    """Coerce ``xi`` to shape (..., n).

    For ``n == 1`` scalars and 1-d arrays of points are accepted. Returns the
    array and a flag telling whether the caller passed a single point.
    """
    arr = np.asarray(xi, dtype=float)
    if n == 1:
        if arr.ndim == 0:
            return arr.reshape(1), True
        if arr.shape[-1] != 1:
            arr = arr[..., None]
        single = arr.shape == (1,)
        return arr, single
    if arr.ndim == 0 or arr.shape[-1] != n:
        raise DimensionMismatchError(
            f"expected points with last axis of length {n}, got shape {arr.shape}")
    return arr, arr.ndim == 1


def check_finite_array(arr, name):
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_log_grid(grid, name, min_points=2, per_decade=None):
    """Validate an increasing, strictly positive, roughly log-spaced grid."""
    g = np.asarray(grid, dtype=float).ravel()
    if g.size < min_points:
        raise InsufficientGridError(
            f"insufficient grid: {name} has {g.size} point(s), need >= {min_points}")
    if np.any(g <= 0) or not np.all(np.isfinite(g)):
        raise ValueError(f"{name} must be finite and positive")
    if np.any(np.diff(g) <= 0):
        raise ValueError(f"{name} must be strictly increasing")
    if g.size > 2:
        steps = np.diff(np.log(g))
        if steps.max() > 1.5 * steps.min() + 1e-12:
            raise ValueError(f"{name} must be log-spaced")
    if per_decade is not None and g.size > 1:
        decades = math.log10(g[-1] / g[0])
        if (g.size - 1) < per_decade * decades - 1e-9:
            raise InsufficientGridError(
                f"insufficient grid: {name} has fewer than {per_decade} points per decade")
    return g
