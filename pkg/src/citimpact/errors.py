"""Exception types shared across the package.

Statistical degeneracies get their own exception classes so that batch
drivers can turn them into per-cell status values instead of aborting.
"""


class CitImpactError(Exception):
    """Base class for all package errors."""


class ParseError(CitImpactError):
    """A corpus CSV row is malformed; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ValidationError(CitImpactError):
    """A domain invariant is violated (duplicate ids, bad shares, ...)."""


class UnknownArticleError(CitImpactError):
    """Article id not present in the slice."""


class DegenerateSampleError(CitImpactError):
    """Sample too short or constant for moment statistics."""


class EmptySampleError(CitImpactError):
    """Total weight is zero; no mean can be formed."""


class NoArticlesError(CitImpactError):
    """The country has zero weighted articles in the slice."""


class ZeroDenominatorError(CitImpactError):
    """The overall (world) mean is zero, so the ratio is undefined."""


class NotIdentifiedError(CitImpactError):
    """The pure-country prediction is not estimable from the design."""


class InsufficientDataError(CitImpactError):
    """Too few rows to fit the regression."""


class CIUnavailableError(CitImpactError):
    """A confidence interval cannot be computed for this cell."""


class EmptySeriesError(CitImpactError):
    """No computable cells exist for the requested trend series."""


class ConfigError(CitImpactError):
    """Invalid run configuration or synthetic-corpus specification."""


class SmallSampleWarning(UserWarning):
    """Proportion interval requested with a weighted count below 30."""
