"""Exceptions and warnings shared across the package."""


class FailcastError(Exception):
    """Base class for package-specific errors."""


class DomainError(FailcastError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigError(FailcastError):
    """A run configuration is malformed or inconsistent."""


class DataError(FailcastError):
    """Input records violate the dataset schema or internal consistency."""


class RiskSetError(DataError):
    """A risk-set update references unknown or inconsistent units."""


class InvalidTruncationError(DataError):
    """A left-truncation age already exhausts the lifetime distribution."""


class ExhaustedRiskError(FailcastError):
    """A unit's current age leaves zero conditional survival probability."""


class InitializationError(FailcastError):
    """No finite starting point could be found for an MCMC chain."""


class ConvergenceError(FailcastError):
    """Chain diagnostics are unavailable or indicate sampling failure."""


class CalibrationError(FailcastError):
    """Censor-time calibration could not bracket its root."""


class DegenerateIntervalWarning(UserWarning):
    """An interval-censored record has zero probability mass."""


class RiskSetWarning(UserWarning):
    """A risk-set update was redundant (e.g. removing an inactive unit)."""


class PredictionWarning(UserWarning):
    """Units were dropped from a prediction (e.g. exhausted risk)."""
