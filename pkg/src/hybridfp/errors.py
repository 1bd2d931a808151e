"""Exception types shared by the solver modules."""

from __future__ import annotations


class HybridFPError(Exception):
    """Base class for all errors raised by :mod:`hybridfp`."""


class InvalidArgumentError(HybridFPError, ValueError):
    """An argument is outside the documented domain of an operation."""


class SingularOperatorError(HybridFPError, ArithmeticError):
    """A denominator inside the operator data is numerically zero."""


class InvalidCertificateError(HybridFPError, ValueError):
    """Certificate inputs produced non-finite values."""


class InvalidProblemError(HybridFPError, ValueError):
    """Problem data violate a structural invariant."""


class UnknownCaseError(HybridFPError, LookupError):
    """A benchmark case identifier is not registered."""

    def __str__(self) -> str:
        return f"unknown case: {self.args[0]}" if self.args else "unknown case"
