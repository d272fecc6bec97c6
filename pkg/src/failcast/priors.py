"""Prior building blocks, including 95%-central-interval notation.

Positive-valued priors are most naturally specified through a central 95%
interval of a lognormal: ``LognormalInterval(lower, upper)`` places 2.5% of
mass below ``lower`` and 2.5% above ``upper``.  Hierarchical standard
deviations get half-t or half-Cauchy priors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import stats
from scipy.special import expit, log_ndtr, ndtri

from .errors import DomainError

__all__ = [
    "interval_to_lognormal",
    "LognormalInterval",
    "Normal",
    "HalfT",
    "HalfCauchy",
    "LognormalTrunc01",
    "LogitNormal",
    "PriorSpec",
    "lognormal_logpdf",
    "normal_logpdf",
]

_Z975 = float(ndtri(0.975))
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_NEG_INF = float("-inf")


def interval_to_lognormal(lower: float, upper: float) -> tuple[float, float]:
    """(location, scale) of ``log X`` for a lognormal with 95% central interval (lower, upper)."""
    if not (0.0 < lower < upper) or not math.isfinite(upper):
        raise DomainError("need 0 < lower < upper")
    loc = 0.5 * (math.log(lower) + math.log(upper))
    scale = (math.log(upper) - math.log(lower)) / (2.0 * _Z975)
    return loc, scale


def normal_logpdf(x, mean, sd):
    x = np.asarray(x, dtype=float)
    z = (x - mean) / sd
    return -0.5 * z * z - math.log(sd) - _LOG_SQRT_2PI


def lognormal_logpdf(x, loc, scale):
    """Log-density of X with ``log X ~ N(loc, scale^2)``; -inf for x <= 0."""
    if np.ndim(x) == 0:
        x = float(x)
        if not (x > 0.0 and math.isfinite(x)):
            return _NEG_INF
        lx = math.log(x)
        z = (lx - loc) / scale
        out = -0.5 * z * z - lx - math.log(scale) - _LOG_SQRT_2PI
        return out if math.isfinite(out) else _NEG_INF
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        lx = np.log(x)
        z = (lx - loc) / scale
        out = -0.5 * z * z - lx - math.log(scale) - _LOG_SQRT_2PI
    return np.where(x > 0.0, out, _NEG_INF)


@dataclass(frozen=True)
class LognormalInterval:
    """Lognormal prior given through its central 95% interval."""

    lower: float
    upper: float

    def __post_init__(self):
        interval_to_lognormal(self.lower, self.upper)

    def log_params(self) -> tuple[float, float]:
        return interval_to_lognormal(self.lower, self.upper)

    def logpdf(self, x) -> float:
        loc, scale = self.log_params()
        return lognormal_logpdf(x, loc, scale)

    def median(self) -> float:
        return math.sqrt(self.lower * self.upper)


@dataclass(frozen=True)
class Normal:
    mean: float
    sd: float

    def __post_init__(self):
        if not self.sd > 0.0:
            raise DomainError("sd must be positive")

    def logpdf(self, x) -> float:
        return normal_logpdf(x, self.mean, self.sd)

    def median(self) -> float:
        return self.mean


@dataclass(frozen=True)
class HalfT:
    """Student-t folded onto (0, inf); the boundary itself is excluded."""

    df: float
    scale: float

    def __post_init__(self):
        if not (self.df > 0.0 and self.scale > 0.0):
            raise DomainError("df and scale must be positive")

    def logpdf(self, x) -> float:
        if x <= 0.0:
            return _NEG_INF
        z = x / self.scale
        nu = self.df
        const = (math.lgamma((nu + 1.0) / 2.0) - math.lgamma(nu / 2.0)
                 - 0.5 * math.log(nu * math.pi))
        return (math.log(2.0) + const - math.log(self.scale)
                - 0.5 * (nu + 1.0) * math.log1p(z * z / nu))

    def median(self) -> float:
        return self.scale * float(stats.t.ppf(0.75, self.df))


@dataclass(frozen=True)
class HalfCauchy:
    scale: float

    def __post_init__(self):
        if not self.scale > 0.0:
            raise DomainError("scale must be positive")

    def logpdf(self, x) -> float:
        if x <= 0.0:
            return _NEG_INF
        z = x / self.scale
        return math.log(2.0) - math.log(math.pi * self.scale) - math.log1p(z * z)

    def median(self) -> float:
        return self.scale


@dataclass(frozen=True)
class LognormalTrunc01:
    """Interval-specified lognormal restricted and renormalized to (0, 1)."""

    lower: float
    upper: float

    def __post_init__(self):
        interval_to_lognormal(self.lower, self.upper)

    def logpdf(self, x) -> float:
        if not (0.0 < x < 1.0):
            return _NEG_INF
        loc, scale = interval_to_lognormal(self.lower, self.upper)
        # mass below 1 equals P(log X < 0)
        log_mass = float(log_ndtr(-loc / scale))
        return float(lognormal_logpdf(x, loc, scale)) - log_mass

    def median(self) -> float:
        loc, scale = interval_to_lognormal(self.lower, self.upper)
        from scipy.special import ndtr
        mass = float(ndtr(-loc / scale))
        return float(math.exp(loc + scale * ndtri(0.5 * mass)))


@dataclass(frozen=True)
class LogitNormal:
    """X in (0,1) with ``logit X ~ N(mean, sd^2)``."""

    mean: float
    sd: float

    def __post_init__(self):
        if not self.sd > 0.0:
            raise DomainError("sd must be positive")

    def logpdf(self, x) -> float:
        if not (0.0 < x < 1.0):
            return _NEG_INF
        lo = math.log(x) - math.log1p(-x)
        return (float(normal_logpdf(lo, self.mean, self.sd))
                - math.log(x) - math.log1p(-x))

    def median(self) -> float:
        return float(expit(self.mean))


PriorSpec = Union[LognormalInterval, Normal, HalfT, HalfCauchy, LognormalTrunc01, LogitNormal]
