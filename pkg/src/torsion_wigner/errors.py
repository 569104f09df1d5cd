"""Exception hierarchy shared by all modules."""


class TorsionWignerError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameterError(TorsionWignerError, ValueError):
    """A physical or numerical parameter is out of its allowed range."""


class InvalidStateError(TorsionWignerError, ValueError):
    """A state violates positivity, normalization or the uncertainty bound."""


class InvalidProfileError(InvalidParameterError):
    """A cross-section profile has non-positive or irregular samples."""


class NoSuchModeError(InvalidParameterError):
    """The requested mode is identically zero."""


class UnreachableTargetError(InvalidParameterError):
    """A requested target value cannot be reached with the given inputs."""


class PreconditionError(TorsionWignerError, ValueError):
    """An operation's documented precondition does not hold."""


class GridMismatchError(TorsionWignerError, ValueError):
    """Two grid Wigner functions do not share the same axes."""


class CoverageError(TorsionWignerError, ValueError):
    """A grid does not cover the support of the state placed on it."""


class NumericalError(TorsionWignerError, ArithmeticError):
    """A numerical procedure failed to converge or to meet its tolerance."""


class ResolutionError(NumericalError):
    """A Fourier reconstruction is under-resolved."""


class TruncationError(NumericalError):
    """A truncated Fock space loses more norm than allowed."""


class ImpossibleOutcomeError(NumericalError):
    """A measurement outcome has vanishing probability."""
