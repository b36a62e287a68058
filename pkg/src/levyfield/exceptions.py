"""Exception hierarchy.

Every error raised deliberately by the package derives from
:class:`LevyFieldError`; most also derive from :class:`ValueError` so that
callers using the usual ``except ValueError`` idiom still catch them.
"""


class LevyFieldError(Exception):
    """Base class for all package errors."""


class DimensionMismatchError(LevyFieldError, ValueError):
    pass


class QuadratureError(LevyFieldError, RuntimeError):
    """A quadrature did not reach its requested tolerance."""


class NondegeneracyError(LevyFieldError, ValueError):
    """Re Psi vanishes away from the origin."""


class EnvelopeError(LevyFieldError, ValueError):
    """Asymptotic envelopes are missing and numerics cannot decide."""


class CutoffError(LevyFieldError, ValueError):
    """Frequency cutoff or lattice resolution insufficient."""


class ResidueError(LevyFieldError, RuntimeError):
    """Imaginary residue of a Fourier inversion exceeded tolerance."""


class GridTooCoarseError(LevyFieldError, RuntimeError):
    pass


class InsufficientGridError(LevyFieldError, ValueError):
    pass


class SamplerUnavailableError(LevyFieldError, NotImplementedError):
    pass


class InsufficientReplicasError(LevyFieldError, RuntimeError):
    pass


class BoundViolationError(LevyFieldError, RuntimeError):
    pass


class IndeterminateError(LevyFieldError, RuntimeError):
    pass


class NoAdmissibleRangeError(LevyFieldError, ValueError):
    pass


class RegressionQualityError(LevyFieldError, RuntimeError):
    pass


class SchemeOverflowError(LevyFieldError, FloatingPointError):
    pass


class ConfigError(LevyFieldError, ValueError):
    pass
