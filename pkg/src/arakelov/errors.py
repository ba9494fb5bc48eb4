"""Exception hierarchy shared by all modules."""


class ArakelovError(Exception):
    """Base class for every error raised by this package."""


class InputError(ArakelovError, ValueError):
    """Malformed user input (files, flags, numeric ranges)."""


class NotSymmetric(InputError):
    pass


class NotPositiveDefinite(InputError):
    pass


class UnsupportedGenus(InputError):
    pass


class TruncationRadiusExceeded(ArakelovError):
    """The certified theta truncation box would need a radius above the cap."""


class DegenerateEstimate(ArakelovError):
    """Too many Monte Carlo samples fell on the singular locus."""


class CoincidentPoints(ArakelovError, ValueError):
    """Two surface points agree modulo the lattice where distinct points are required."""


class TooCloseToSingularity(ArakelovError, ValueError):
    pass


class CoverageFailure(ArakelovError):
    pass


class ChartTooLarge(InputError):
    pass


class SeparabilityFailure(ArakelovError):
    """The norm-weight matrix failed to factor into row and column weights."""


class InvalidInputs(InputError):
    pass


class InvalidMerklRange(InputError):
    pass


class QuadratureNonConvergence(ArakelovError):
    pass


class ViolationDetected(ArakelovError):
    """A proven inequality failed numerically; this signals a bug."""


class PoleCollision(UserWarning):
    """A section norm was evaluated at one of its prescribed zeros."""
