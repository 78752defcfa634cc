"""Exception hierarchy shared by all fracwell modules."""

from __future__ import annotations


class FracwellError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(FracwellError, ValueError):
    """An argument lies outside the supported evaluation domain."""


class ConvergenceError(FracwellError, ArithmeticError):
    """An iterative procedure stopped before reaching its tolerance."""


class BlowUpError(ConvergenceError):
    """A computed solution value exceeded the blow-up guard."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class BracketError(ConvergenceError):
    """No sign change was found while expanding a root bracket."""


class CoverageError(FracwellError, ValueError):
    """A trajectory does not span the interval it is asked about."""


class DegenerateError(FracwellError, ValueError):
    """Input data are degenerate for the requested fit or grid."""


class ConfigError(FracwellError, ValueError):
    """A run configuration failed validation.

    ``violations`` holds every problem found, not only the first one.
    """

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
