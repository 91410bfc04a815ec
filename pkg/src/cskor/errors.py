"""Exception types shared across the package."""


class CskorError(Exception):
    """Base class for all package errors."""


class ValidationError(CskorError, ValueError):
    """Bad user input: malformed specs, out-of-range arguments."""


class DomainError(ValidationError):
    """Argument outside the domain of an operation."""


class DegenerateDistributionError(ValidationError):
    """A point mass was supplied where a nondegenerate law is required."""

    def __init__(self, message: str = "degenerate: a point mass collapses the domain to a point"):
        super().__init__(message)


class UncenterableError(ValidationError):
    """The distribution has no finite mean, so it cannot be centered."""


class NumericalError(CskorError, ArithmeticError):
    """A numerical procedure failed to converge or produced unusable output."""


class RunawayPathError(NumericalError):
    """A simulated path exceeded the step budget without leaving the domain."""
