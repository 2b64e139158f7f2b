"""Exception hierarchy.

``DomainError`` subclasses signal bad input; ``InvariantError`` subclasses
signal that an internal consistency check failed, which points at a bug
rather than at the caller.
"""


class BilliardError(Exception):
    """Base class for every error raised by this package."""


class DomainError(BilliardError, ValueError):
    """An argument lies outside the domain of the operation."""


class InvariantError(BilliardError, RuntimeError):
    """An internal invariant does not hold."""


class NonPositiveRadius(DomainError):
    pass


class SphericalRadiusTooLarge(DomainError):
    pass


class ThetaOutOfRange(DomainError):
    pass


class InvalidAlpha(DomainError):
    pass


class EmptyInterval(DomainError):
    pass


class InvalidInterval(DomainError):
    pass


class NegativeDensity(DomainError):
    pass


class BinMismatch(DomainError):
    pass


class InvalidPath(DomainError):
    pass


class NotAdmissible(DomainError):
    pass


class TooFewPoints(DomainError):
    pass


class UnsupportedAlphaForm(DomainError):
    pass


class TruncatedStateSpace(DomainError):
    pass


class ReducibleChain(DomainError):
    pass


class NormalizationFailure(InvariantError):
    pass


class ImageEscapesStateSpace(InvariantError):
    pass


class NoConvergence(InvariantError):
    pass
