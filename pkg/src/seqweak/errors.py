"""Exception types raised across the package."""


class SeqWeakError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(SeqWeakError, ValueError):
    pass


class DegeneratePostselectionError(SeqWeakError, ArithmeticError):
    """Pre- and post-selected states are (numerically) orthogonal."""


class VanishingPostselectionError(SeqWeakError, ArithmeticError):
    """The post-selected pointer field carries no norm."""


class UndefinedCoherenceError(SeqWeakError, ArithmeticError):
    pass


class NoSignalError(SeqWeakError, ArithmeticError):
    """Background-subtracted frames contain no net counts."""


class ConfigurationError(SeqWeakError, ValueError):
    pass


class ConvergenceError(SeqWeakError, AssertionError):
    """Observed approximation order falls outside the expected window."""
