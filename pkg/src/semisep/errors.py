"""Exception and warning types shared across the package."""


class SemisepError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(SemisepError, ValueError):
    """An input lies outside the domain where the requested quantity is defined."""


class ShapeError(SemisepError, ValueError):
    """A kernel factor returned an array of the wrong shape."""


class ConditioningError(SemisepError, ArithmeticError):
    """A matrix that must be inverted is numerically singular."""


class PoleError(SemisepError, ArithmeticError):
    """The operator I - alpha K is (numerically) not invertible."""


class SizeError(SemisepError, ValueError):
    """A dense or combinatorial computation would be too large."""


class SpectralCollisionError(SemisepError, ArithmeticError):
    """The spectral parameter sits on the spectrum of the unperturbed operator."""


class DegenerateSymbolError(SemisepError, ArithmeticError):
    """A rational symbol has (nearly) repeated roots."""


class ResolutionWarning(UserWarning):
    """The grid is too coarse for the oscillation of the kernel."""


class TraceClassWarning(UserWarning):
    """The two trace expressions disagree, so K may not be trace class."""
