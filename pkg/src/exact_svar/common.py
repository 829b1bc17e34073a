"""Shared result containers and exception types."""

from __future__ import annotations

from dataclasses import dataclass, field


class ExactSvarError(Exception):
    """Base class for package-specific errors."""


class ConvergenceError(ExactSvarError):
    """A series or iteration hit its term/iteration cap before converging.

    Carries the partial sum and a bound on the neglected remainder so callers
    can decide whether the partial result is still usable.
    """

    def __init__(self, message, partial=None, bound=None, terms_used=None):
        super().__init__(message)
        self.partial = partial
        self.bound = bound
        self.terms_used = terms_used


class NumericalError(ExactSvarError):
    """A quadrature or root-finding step could not meet its error budget.

    ``estimate`` holds the best available value.
    """

    def __init__(self, message, estimate=None, est_error=None):
        super().__init__(message)
        self.estimate = estimate
        self.est_error = est_error


class DataError(ExactSvarError):
    """Invalid observation data; ``index`` names the offending entry."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


@dataclass(frozen=True)
class DistributionResult:
    """A CDF/PDF/quantile value with an attached error estimate.

    ``method`` is a short tag naming the evaluation route; ``derived`` marks
    values obtained from a formula derived here rather than stated directly
    (the gamma-parent density carries this flag).
    """

    value: float
    est_error: float
    method: str
    derived: bool = False
    notes: dict = field(default_factory=dict, compare=False)

    def __float__(self):
        return float(self.value)
