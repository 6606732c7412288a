"""Exception hierarchy. The CLI maps these onto exit codes."""


class SymBergmanError(Exception):
    """Base class."""


class InvalidInputError(SymBergmanError, ValueError):
    """Non-finite entries, wrong shapes, out-of-range arguments."""


class ConfigError(SymBergmanError, ValueError):
    """Malformed model file or run configuration."""


class NumericalDomainError(SymBergmanError, ArithmeticError):
    """A value left the domain where an operation is defined."""


class FactorizationError(NumericalDomainError):
    """Cholesky failed; ``pivot`` is the index of the failing column."""

    def __init__(self, message, pivot):
        super().__init__(message)
        self.pivot = pivot


class NonDivisibleError(NumericalDomainError):
    """A jet did not vanish on the diagonal y = x."""

    def __init__(self, message, degree, norm):
        super().__init__(message)
        self.degree = degree
        self.norm = norm


class TruncationError(SymBergmanError):
    """A jet was too short for the quantity requested from it."""


class ConvergenceError(SymBergmanError, RuntimeError):
    """An iteration that should terminate did not."""
