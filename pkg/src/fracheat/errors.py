"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class FracHeatError(Exception):
    """Base class for package errors."""


class DomainError(FracHeatError, ValueError):
    """An argument lies outside the admissible range of an operation."""


class EvaluationError(FracHeatError, ArithmeticError):
    """A numerical procedure failed to reach its tolerance.

    ``partial`` carries whatever partial result was available and ``terms``
    the number of terms or iterations spent.
    """

    def __init__(self, message: str, partial=None, terms: int | None = None):
        super().__init__(message)
        self.partial = partial
        self.terms = terms


class SamplingError(FracHeatError):
    """A datum could not be represented on the requested grid."""


class RegressionError(FracHeatError):
    """A scaling fit could not be performed (too few or degenerate rows)."""


class SweepError(FracHeatError):
    """Too many sweep points ended inconclusive."""
