"""Log-location-scale lifetime kernels and the two-failure-mode mixture.

Lifetimes ``T`` are modeled through ``log T = mu + sigma * Z`` where ``Z``
follows one of three standardized laws: smallest extreme value (Weibull
lifetimes), largest extreme value (Frechet lifetimes), or normal (lognormal
lifetimes).  The usual scale parameter can be replaced by a quantile ``t_p``,
which is friendlier to elicit and keeps estimation stable under heavy
censoring: ``mu = log(t_p) - sigma * Phi^{-1}(p)``.

The limited-failure-population mixture combines an early failure mode that
only affects a defective fraction ``pi`` of units with a wearout mode that
affects every unit:

    F(t) = 1 - (1 - pi * F1(t)) * (1 - F2(t))

All densities are computed in log space; tail terms use ``expm1``/``log1p``
forms so that heavily censored likelihoods do not lose precision.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, ndtr, ndtri

from .errors import DomainError

__all__ = [
    "Family",
    "LlsParams",
    "QuantileParam",
    "GlfpParams",
    "LogLocationScale",
    "Glfp",
    "std_cdf",
    "std_quantile",
    "lls_cdf",
    "lls_logpdf",
    "lls_quantile",
    "mu_from_quantile",
    "glfp_cdf",
    "glfp_logpdf",
]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_ERR = dict(over="ignore", divide="ignore", invalid="ignore")


class Family(enum.Enum):
    """Standardized distribution of the log-lifetime."""

    SEV = "sev"        # smallest extreme value; T is Weibull
    LEV = "lev"        # largest extreme value; T is Frechet
    NORMAL = "normal"  # normal; T is lognormal


# ---------------------------------------------------------------------------
# standardized kernels (arguments are z = (log t - mu) / sigma)

def _sev_cdf(z):
    return -np.expm1(-np.exp(z))


def _sev_logcdf(z):
    return np.log(-np.expm1(-np.exp(z)))


def _sev_logsf(z):
    return -np.exp(z)


def _sev_logpdf(z):
    return z - np.exp(z)


def _sev_quantile(q):
    return np.log(-np.log1p(-q))


def _lev_cdf(z):
    return np.exp(-np.exp(-z))


def _lev_logcdf(z):
    return -np.exp(-z)


def _lev_logsf(z):
    return np.log(-np.expm1(-np.exp(-z)))


def _lev_logpdf(z):
    return -z - np.exp(-z)


def _lev_quantile(q):
    return -np.log(-np.log(q))


def _norm_cdf(z):
    return ndtr(z)


def _norm_logcdf(z):
    return log_ndtr(z)


def _norm_logsf(z):
    return log_ndtr(np.negative(z))


def _norm_logpdf(z):
    return -0.5 * z * z - _LOG_SQRT_2PI


def _norm_quantile(q):
    return ndtri(q)


@dataclass(frozen=True)
class _Kernel:
    cdf: callable
    logcdf: callable
    logsf: callable
    logpdf: callable
    quantile: callable


_KERNELS = {
    Family.SEV: _Kernel(_sev_cdf, _sev_logcdf, _sev_logsf, _sev_logpdf, _sev_quantile),
    Family.LEV: _Kernel(_lev_cdf, _lev_logcdf, _lev_logsf, _lev_logpdf, _lev_quantile),
    Family.NORMAL: _Kernel(_norm_cdf, _norm_logcdf, _norm_logsf, _norm_logpdf, _norm_quantile),
}


def family_kernel(family: Family) -> _Kernel:
    """Return the standardized cdf/log-density kernel for a family."""
    try:
        return _KERNELS[family]
    except KeyError:
        raise DomainError(f"unknown family: {family!r}") from None


def _maybe_scalar(out, *inputs):
    if all(np.ndim(x) == 0 for x in inputs):
        return float(out)
    return out


def _check_positive_time(t):
    t = np.asarray(t, dtype=float)
    if not np.all(t > 0.0) or not np.all(np.isfinite(t)):
        raise DomainError("time must be positive and finite")
    return t


def _check_open_unit(q, name="q"):
    q = np.asarray(q, dtype=float)
    if not np.all((q > 0.0) & (q < 1.0)):
        raise DomainError(f"{name} must lie strictly in (0, 1)")
    return q


# ---------------------------------------------------------------------------
# parameter containers

@dataclass(frozen=True)
class LlsParams:
    """Location and scale of the log-lifetime.

    For the SEV family, ``eta = exp(mu)`` is the Weibull scale and
    ``beta = 1/sigma`` the Weibull shape.
    """

    mu: float
    sigma: float

    def __post_init__(self):
        if not (self.sigma > 0.0 and math.isfinite(self.sigma)):
            raise DomainError("sigma must be positive and finite")
        if not math.isfinite(self.mu):
            raise DomainError("mu must be finite")


@dataclass(frozen=True)
class QuantileParam:
    """Quantile reparameterization: the ``p`` quantile ``t_p`` replaces the scale."""

    p: float
    t_p: float
    sigma: float

    def __post_init__(self):
        if not (0.0 < self.p < 1.0):
            raise DomainError("p must lie strictly in (0, 1)")
        if not (self.t_p > 0.0 and math.isfinite(self.t_p)):
            raise DomainError("t_p must be positive and finite")
        if not (self.sigma > 0.0 and math.isfinite(self.sigma)):
            raise DomainError("sigma must be positive and finite")


@dataclass(frozen=True)
class GlfpParams:
    """Two-failure-mode mixture parameters.

    ``pi`` is the proportion of defective units susceptible to the early
    failure mode (component 1); every unit is susceptible to the wearout
    mode (component 2).  Both components are Weibull (SEV family), each
    specified through a quantile parameterization.  ``pi`` may sit at the
    closed ends 0 and 1, where the model reduces to a single Weibull and to
    classic independent competing risks respectively.
    """

    pi: float
    comp1: QuantileParam
    comp2: QuantileParam

    def __post_init__(self):
        if not (0.0 <= self.pi <= 1.0):
            raise DomainError("pi must lie in [0, 1]")


# ---------------------------------------------------------------------------
# functional surface

def std_cdf(z, family: Family):
    """Standardized cdf ``Phi(z)`` of the chosen family."""
    arr = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("z must be finite")
    with np.errstate(**_ERR):
        return _maybe_scalar(family_kernel(family).cdf(arr), z)


def std_quantile(q, family: Family):
    """Standardized quantile ``Phi^{-1}(q)`` of the chosen family."""
    arr = _check_open_unit(q)
    with np.errstate(**_ERR):
        return _maybe_scalar(family_kernel(family).quantile(arr), q)


def lls_cdf(t, params: LlsParams, family: Family):
    """cdf of a log-location-scale lifetime at time ``t > 0``."""
    arr = _check_positive_time(t)
    z = (np.log(arr) - params.mu) / params.sigma
    with np.errstate(**_ERR):
        return _maybe_scalar(family_kernel(family).cdf(z), t)


def lls_logpdf(t, params: LlsParams, family: Family):
    """Log-density of a log-location-scale lifetime at time ``t > 0``."""
    arr = _check_positive_time(t)
    log_t = np.log(arr)
    z = (log_t - params.mu) / params.sigma
    with np.errstate(**_ERR):
        out = family_kernel(family).logpdf(z) - math.log(params.sigma) - log_t
    return _maybe_scalar(out, t)


def lls_quantile(q, params: LlsParams, family: Family):
    """Quantile ``exp(mu + sigma * Phi^{-1}(q))`` for ``q`` in (0, 1)."""
    arr = _check_open_unit(q)
    with np.errstate(**_ERR):
        out = np.exp(params.mu + params.sigma * family_kernel(family).quantile(arr))
    return _maybe_scalar(out, q)


def mu_from_quantile(qp: QuantileParam, family: Family) -> LlsParams:
    """Recover ``(mu, sigma)`` from a quantile parameterization."""
    zp = float(family_kernel(family).quantile(np.asarray(qp.p)))
    return LlsParams(mu=math.log(qp.t_p) - qp.sigma * zp, sigma=qp.sigma)


# ---------------------------------------------------------------------------
# GLFP mixture in terms of component (mu, sigma) pairs; used by the
# vectorized likelihood as well as the object API below.

def _glfp_cdf(log_t, pi, mu1, s1, mu2, s2):
    # F2 + pi*F1*S2 is exact at pi = 0 and free of lower-tail cancellation
    with np.errstate(**_ERR):
        z1 = (log_t - mu1) / s1
        z2 = (log_t - mu2) / s2
        return _sev_cdf(z2) + pi * _sev_cdf(z1) * np.exp(_sev_logsf(z2))


def _glfp_logsf(log_t, pi, mu1, s1, mu2, s2):
    with np.errstate(**_ERR):
        z1 = (log_t - mu1) / s1
        z2 = (log_t - mu2) / s2
        return np.log1p(-pi * _sev_cdf(z1)) + _sev_logsf(z2)


def _glfp_logcdf(log_t, pi, mu1, s1, mu2, s2):
    with np.errstate(**_ERR):
        z1 = (log_t - mu1) / s1
        z2 = (log_t - mu2) / s2
        early = np.log(pi) + _sev_logcdf(z1) + _sev_logsf(z2)
        return np.logaddexp(_sev_logcdf(z2), early)


def _glfp_logpdf(log_t, pi, mu1, s1, mu2, s2):
    with np.errstate(**_ERR):
        z1 = (log_t - mu1) / s1
        z2 = (log_t - mu2) / s2
        lpdf1 = _sev_logpdf(z1) - np.log(s1) - log_t
        lpdf2 = _sev_logpdf(z2) - np.log(s2) - log_t
        term1 = np.log(pi) + lpdf1 + _sev_logsf(z2)
        term2 = lpdf2 + np.log1p(-pi * _sev_cdf(z1))
        return np.logaddexp(term1, term2)


def _glfp_mus(params: GlfpParams):
    c1 = mu_from_quantile(params.comp1, Family.SEV)
    c2 = mu_from_quantile(params.comp2, Family.SEV)
    return c1.mu, c1.sigma, c2.mu, c2.sigma


def glfp_cdf(t, params: GlfpParams):
    """cdf ``1 - (1 - pi F1)(1 - F2)`` of the two-mode mixture."""
    arr = _check_positive_time(t)
    mu1, s1, mu2, s2 = _glfp_mus(params)
    return _maybe_scalar(_glfp_cdf(np.log(arr), params.pi, mu1, s1, mu2, s2), t)


def glfp_logpdf(t, params: GlfpParams):
    """Log-density ``log[pi f1 (1-F2) + f2 (1 - pi F1)]`` of the mixture."""
    arr = _check_positive_time(t)
    mu1, s1, mu2, s2 = _glfp_mus(params)
    return _maybe_scalar(_glfp_logpdf(np.log(arr), params.pi, mu1, s1, mu2, s2), t)


# ---------------------------------------------------------------------------
# object API used by the likelihood, prediction, and plotting layers

@dataclass(frozen=True)
class LogLocationScale:
    """A log-location-scale lifetime distribution."""

    family: Family
    mu: float
    sigma: float

    def __post_init__(self):
        LlsParams(self.mu, self.sigma)  # reuse validation

    @classmethod
    def from_quantile(cls, family: Family, p: float, t_p: float, sigma: float):
        params = mu_from_quantile(QuantileParam(p, t_p, sigma), family)
        return cls(family, params.mu, params.sigma)

    def _z(self, t):
        arr = _check_positive_time(t)
        return (np.log(arr) - self.mu) / self.sigma, arr

    def cdf(self, t):
        z, _ = self._z(t)
        with np.errstate(**_ERR):
            return _maybe_scalar(family_kernel(self.family).cdf(z), t)

    def sf(self, t):
        z, _ = self._z(t)
        with np.errstate(**_ERR):
            return _maybe_scalar(np.exp(family_kernel(self.family).logsf(z)), t)

    def logcdf(self, t):
        z, _ = self._z(t)
        with np.errstate(**_ERR):
            return _maybe_scalar(family_kernel(self.family).logcdf(z), t)

    def logsf(self, t):
        z, _ = self._z(t)
        with np.errstate(**_ERR):
            return _maybe_scalar(family_kernel(self.family).logsf(z), t)

    def logpdf(self, t):
        z, arr = self._z(t)
        with np.errstate(**_ERR):
            out = family_kernel(self.family).logpdf(z) - math.log(self.sigma) - np.log(arr)
        return _maybe_scalar(out, t)

    def pdf(self, t):
        with np.errstate(**_ERR):
            return np.exp(self.logpdf(t))

    def quantile(self, q):
        arr = _check_open_unit(q)
        with np.errstate(**_ERR):
            out = np.exp(self.mu + self.sigma * family_kernel(self.family).quantile(arr))
        return _maybe_scalar(out, q)

    def rvs(self, rng: np.random.Generator, size=None):
        u = rng.uniform(size=size)
        u = np.clip(u, np.finfo(float).tiny, 1.0 - 1e-16)
        with np.errstate(**_ERR):
            return np.exp(self.mu + self.sigma * family_kernel(self.family).quantile(u))


@dataclass(frozen=True)
class Glfp:
    """Two-failure-mode mixture distribution (both components SEV)."""

    pi: float
    early: LogLocationScale
    wearout: LogLocationScale

    def __post_init__(self):
        if not (0.0 <= self.pi <= 1.0):
            raise DomainError("pi must lie in [0, 1]")
        if self.early.family is not Family.SEV or self.wearout.family is not Family.SEV:
            raise DomainError("mixture components must be SEV (Weibull)")

    @classmethod
    def from_params(cls, params: GlfpParams):
        mu1, s1, mu2, s2 = _glfp_mus(params)
        return cls(params.pi,
                   LogLocationScale(Family.SEV, mu1, s1),
                   LogLocationScale(Family.SEV, mu2, s2))

    def _args(self):
        return self.pi, self.early.mu, self.early.sigma, self.wearout.mu, self.wearout.sigma

    def cdf(self, t):
        arr = _check_positive_time(t)
        return _maybe_scalar(_glfp_cdf(np.log(arr), *self._args()), t)

    def sf(self, t):
        with np.errstate(**_ERR):
            return np.exp(self.logsf(t))

    def logsf(self, t):
        arr = _check_positive_time(t)
        return _maybe_scalar(_glfp_logsf(np.log(arr), *self._args()), t)

    def logcdf(self, t):
        arr = _check_positive_time(t)
        return _maybe_scalar(_glfp_logcdf(np.log(arr), *self._args()), t)

    def logpdf(self, t):
        arr = _check_positive_time(t)
        return _maybe_scalar(_glfp_logpdf(np.log(arr), *self._args()), t)

    def pdf(self, t):
        with np.errstate(**_ERR):
            return np.exp(self.logpdf(t))

    def rvs(self, rng: np.random.Generator, size=None):
        t2 = self.wearout.rvs(rng, size=size)
        t1 = self.early.rvs(rng, size=size)
        defective = rng.uniform(size=size) < self.pi
        return np.where(defective, np.minimum(t1, t2), t2)
