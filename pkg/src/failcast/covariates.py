"""Seasonal time-varying-covariate models for warranty return data.

Units accumulate a daily exposure ``exp(zeta(s))`` with ``zeta(s) =
alpha * Canada + beta_{m(s)}``, where ``m(s)`` is the calendar month of
service day ``s``.  Two lifetime constructions share this covariate
process:

* cumulative damage (CD): damage ``u(d) = sum_{s=1..d} exp(zeta(s))`` grows
  deterministically until it crosses a random Frechet threshold with
  ``mu0 = 0`` fixed and scale ``sigma0``;
* proportional hazards (PH): the hazard on day ``d`` is the Frechet baseline
  ``lambda0(d)`` scaled by ``exp(zeta(d))``; cumulative hazards replace the
  integral by a daily sum.

Day convention: day ``s`` covers the calendar date ``entry_date + s``, and
sums run over completed days ``1..d_n``, so ``zeta == 0`` gives ``u = d_n``.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .distributions import _lev_logpdf, _lev_logsf
from .errors import ConfigError, DataError, DomainError, FailcastError
from .likelihood import CensorCode, LifetimeRecord
from .models import _check_prior_keys
from .prediction import PredictiveDistribution, _poisson_mixture_cdf
from .priors import LognormalInterval, Normal

__all__ = [
    "CovariateHistory",
    "SeasonalParams",
    "damage",
    "damage_daily",
    "cd_loglik",
    "ph_hazard",
    "ph_cum_hazard",
    "ph_loglik",
    "SeasonalCdModel",
    "SeasonalPhModel",
    "seasonal_predict",
]

_NEG_INF = float("-inf")


def _months_of_days(entry_date: dt.date, start_day: int, end_day: int) -> np.ndarray:
    """0-based calendar month of each service day ``s`` in ``(start_day, end_day]``."""
    if end_day <= start_day:
        return np.empty(0, dtype=np.intp)
    base = np.datetime64(entry_date)
    days = base + np.arange(start_day + 1, end_day + 1).astype("timedelta64[D]")
    return (days.astype("datetime64[M]").astype(np.int64) % 12).astype(np.intp)


@dataclass(frozen=True)
class CovariateHistory:
    """A unit's service window and fixed covariates.

    ``days_in_service`` is the number of completed days ``d_n`` before the
    data-freeze (censored units) or return (failed units).
    """

    unit_id: str
    entry_date: dt.date
    days_in_service: int
    canada: bool = False

    def __post_init__(self):
        if self.days_in_service < 1 or int(self.days_in_service) != self.days_in_service:
            raise DataError("days_in_service must be a positive integer")

    def month_counts(self, start_day: int = 0, end_day: Optional[int] = None) -> np.ndarray:
        """Days spent in each calendar month over ``(start_day, end_day]``."""
        if end_day is None:
            end_day = self.days_in_service
        months = _months_of_days(self.entry_date, start_day, end_day)
        return np.bincount(months, minlength=12).astype(float)

    @property
    def z(self) -> np.ndarray:
        """13-vector: Canada indicator followed by 12 month day-counts."""
        return np.concatenate([[1.0 if self.canada else 0.0], self.month_counts()])

    def month_of_day(self, s: int) -> int:
        """0-based calendar month of service day ``s``."""
        if not (1 <= s):
            raise DomainError("service days start at 1")
        return int(_months_of_days(self.entry_date, s - 1, s)[0])


@dataclass(frozen=True)
class SeasonalParams:
    """Country effect, 12 month effects, and the Frechet baseline scale."""

    alpha: float
    beta: np.ndarray
    sigma0: float

    mu0 = 0.0  # fixed; the latent damage scale is arbitrary

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        if beta.shape != (12,):
            raise DomainError("beta must have one effect per calendar month")
        if not (self.sigma0 > 0.0 and math.isfinite(self.sigma0)):
            raise DomainError("sigma0 must be positive and finite")
        object.__setattr__(self, "beta", beta)

    def zeta(self, hist: CovariateHistory, day: int) -> float:
        """Log daily exposure on service day ``day``."""
        return self.alpha * hist.canada + float(self.beta[hist.month_of_day(day)])


def damage(hist: CovariateHistory, params: SeasonalParams) -> float:
    """Cumulative damage via the aggregated month-count form."""
    scale = math.exp(params.alpha * hist.canada)
    return scale * float(hist.month_counts() @ np.exp(params.beta))


def damage_daily(hist: CovariateHistory, params: SeasonalParams) -> float:
    """Cumulative damage via the literal day-by-day sum (cross-check route)."""
    months = _months_of_days(hist.entry_date, 0, hist.days_in_service)
    zeta = params.alpha * hist.canada + params.beta[months]
    return float(np.sum(np.exp(zeta)))


def _lev_log_terms(x, sigma0):
    """(logpdf, logsf) of a Frechet(mu0=0, sigma0) at x > 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise DomainError("threshold argument must be positive")
    with np.errstate(over="ignore", divide="ignore"):
        lx = np.log(x)
        z = lx / sigma0
        logpdf = _lev_logpdf(z) - math.log(sigma0) - lx
        return logpdf, _lev_logsf(z)


def _delta_from_records(records: Sequence[LifetimeRecord]) -> np.ndarray:
    delta = np.empty(len(records))
    for i, rec in enumerate(records):
        if rec.censor is CensorCode.EXACT:
            delta[i] = 1.0
        elif rec.censor is CensorCode.RIGHT:
            delta[i] = 0.0
        else:
            raise DataError("seasonal models support exact/right-censored records only")
        if rec.multiplicity != 1:
            raise DataError("seasonal models need per-unit records (multiplicity 1)")
    return delta


def _check_alignment(records, histories):
    if len(records) != len(histories):
        raise DataError("records and histories must align one-to-one")
    for rec, hist in zip(records, histories):
        if abs(rec.time - hist.days_in_service) > 1e-9:
            raise DataError(
                f"unit {rec.unit_id}: record age {rec.time} != history days {hist.days_in_service}"
            )


def cd_loglik(records: Sequence[LifetimeRecord], histories: Sequence[CovariateHistory],
              params: SeasonalParams) -> float:
    """Cumulative-damage log-likelihood for one cluster.

    Returned units contribute ``zeta(d_n) + log f0(u)`` (the chain-rule
    factor is the final day's exposure), censored units ``log S0(u)``.
    """
    _check_alignment(records, histories)
    delta = _delta_from_records(records)
    u = np.array([damage(h, params) for h in histories])
    zeta_last = np.array([params.zeta(h, h.days_in_service) for h in histories])
    logpdf, logsf = _lev_log_terms(u, params.sigma0)
    total = float(delta @ (zeta_last + logpdf) + (1.0 - delta) @ logsf)
    return total if math.isfinite(total) else _NEG_INF


def ph_hazard(day: int, hist: CovariateHistory, params: SeasonalParams) -> float:
    """Hazard on service day ``day``: baseline times ``exp(zeta(day))``."""
    logpdf, logsf = _lev_log_terms(float(day), params.sigma0)
    lam0 = float(logpdf - logsf)
    if not math.isfinite(lam0):
        raise FailcastError(f"baseline hazard overflows at day {day}")
    return math.exp(lam0 + params.zeta(hist, day))


def _baseline_day_mass(sigma0: float, max_age: int) -> np.ndarray:
    """Exact baseline-hazard mass of each service day 1..max_age.

    The covariate factor is constant within a day, so the integral reduces
    to ``sum_s exp(zeta(s)) * [Lambda0(s) - Lambda0(s-1)]`` with the
    baseline cumulative hazard ``Lambda0 = -log S0`` in closed form; with
    ``zeta == 0`` the sum telescopes to the continuous cumulative hazard.
    """
    ages = np.arange(1, max_age + 1, dtype=float)
    with np.errstate(over="ignore", divide="ignore"):
        cum = -_lev_logsf(np.log(ages) / sigma0)
    if not np.all(np.isfinite(cum)):
        raise FailcastError("baseline cumulative hazard overflows on the age grid")
    return np.diff(cum, prepend=0.0)


def ph_cum_hazard(day: int, hist: CovariateHistory, params: SeasonalParams) -> float:
    """Cumulative hazard through service day ``day`` (daily covariate steps)."""
    if day < 1:
        return 0.0
    mass = _baseline_day_mass(params.sigma0, int(day))
    months = _months_of_days(hist.entry_date, 0, day)
    zeta = params.alpha * hist.canada + params.beta[months]
    return float(mass @ np.exp(zeta))


def ph_loglik(records: Sequence[LifetimeRecord], histories: Sequence[CovariateHistory],
              params: SeasonalParams) -> float:
    """Proportional-hazards log-likelihood for one cluster (reference route)."""
    _check_alignment(records, histories)
    delta = _delta_from_records(records)
    total = 0.0
    for d, hist in zip(delta, histories):
        dn = hist.days_in_service
        if d:
            total += math.log(ph_hazard(dn, hist, params))
        total -= ph_cum_hazard(dn, hist, params)
    return total if math.isfinite(total) else _NEG_INF


# ---------------------------------------------------------------------------
# per-cluster Bayesian models

def _month_segments(histories, start_days, end_days):
    """Flat (unit, month, lo_age, hi_age) runs of constant calendar month.

    Ages are service days; a segment covers days ``lo+1 .. hi``.  Used to
    turn per-day hazard sums into cumulative-grid lookups.
    """
    unit_idx, months, lo, hi = [], [], [], []
    for i, hist in enumerate(histories):
        a, b = int(start_days[i]), int(end_days[i])
        mseq = _months_of_days(hist.entry_date, a, b)
        if mseq.size == 0:
            continue
        change = np.flatnonzero(np.diff(mseq)) + 1
        starts = np.concatenate([[0], change])
        ends = np.concatenate([change, [mseq.size]])
        for s, e in zip(starts, ends):
            unit_idx.append(i)
            months.append(int(mseq[s]))
            lo.append(a + s)
            hi.append(a + e)
    return (np.asarray(unit_idx, dtype=np.intp), np.asarray(months, dtype=np.intp),
            np.asarray(lo, dtype=np.intp), np.asarray(hi, dtype=np.intp))


class _SeasonalModelBase:
    """Shared parameter layout: alpha, free month effects, sigma0."""

    PRIOR_KEYS = {"effects", "sigma0"}

    def __init__(self, records, histories, *, pin_first_month=False, priors=None):
        _check_alignment(records, histories)
        self.histories = list(histories)
        self.delta = _delta_from_records(records)
        self.n = len(self.histories)
        self.pin_first_month = bool(pin_first_month)
        self.priors = {"effects": Normal(0.0, 10.0),
                       "sigma0": LognormalInterval(0.02, 51.2)}
        if priors:
            self.priors.update(priors)
        _check_prior_keys(self.priors, self.PRIOR_KEYS, "seasonal")
        self.free_months = list(range(1, 12)) if self.pin_first_month else list(range(12))
        self.param_names = (["alpha"]
                            + [f"beta[{m + 1}]" for m in self.free_months]
                            + ["sigma0"])
        # singleton effect moves for marginal adaptation, sigma0 on its own,
        # and a full joint block whose adapted covariance carries the strong
        # level-vs-sigma0 correlation
        self.blocks = ([[j] for j in range(self.dim)]
                       + [list(range(self.dim))])
        self.canada = np.array([1.0 if h.canada else 0.0 for h in self.histories])
        self.d_n = np.array([h.days_in_service for h in self.histories], dtype=np.intp)
        self.Z = np.stack([h.month_counts() for h in self.histories])
        self.last_month = np.array([h.month_of_day(h.days_in_service)
                                    for h in self.histories], dtype=np.intp)

    @property
    def dim(self) -> int:
        return 2 + len(self.free_months)

    def constrain(self, u):
        u = np.asarray(u, dtype=float)
        theta = np.array(u, copy=True)
        with np.errstate(over="ignore"):
            theta[..., -1] = np.exp(u[..., -1])
        return theta

    def unpack(self, theta):
        """(alpha, beta-12-vector, sigma0) from a constrained row."""
        beta = np.zeros(12)
        beta[self.free_months] = theta[1:-1]
        return SeasonalParams(float(theta[0]), beta, float(theta[-1]))

    def _log_prior_and_jacobian(self, u) -> float:
        lp = 0.0
        for j in range(self.dim - 1):
            lp += self.priors["effects"].logpdf(float(u[j]))
        sigma0 = math.exp(u[-1]) if u[-1] < 700 else float("inf")
        if not math.isfinite(sigma0):
            return _NEG_INF
        lp += self.priors["sigma0"].logpdf(sigma0)
        return lp + float(u[-1])  # exp-transform Jacobian

    def init_center(self) -> np.ndarray:
        u0 = np.zeros(self.dim)
        u0[-1] = math.log(self.priors["sigma0"].median())
        return u0


class SeasonalCdModel(_SeasonalModelBase):
    """Cumulative-damage model for one cluster."""

    kind = "cd"

    def log_posterior(self, u) -> float:
        u = np.asarray(u, dtype=float)
        lp = self._log_prior_and_jacobian(u)
        if lp == _NEG_INF:
            return _NEG_INF
        params = self.unpack(self.constrain(u))
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            eb = np.exp(params.beta)
            umass = np.exp(params.alpha * self.canada) * (self.Z @ eb)
            if not np.all(umass > 0.0) or not np.all(np.isfinite(umass)):
                return _NEG_INF
            logpdf, logsf = _lev_log_terms(umass, params.sigma0)
            zeta_last = params.alpha * self.canada + params.beta[self.last_month]
            ll = float(self.delta @ (zeta_last + logpdf) + (1.0 - self.delta) @ logsf)
        return lp + ll if math.isfinite(ll) else _NEG_INF


class SeasonalPhModel(_SeasonalModelBase):
    """Proportional-hazards model for one cluster.

    Uses a cumulative baseline-hazard grid over integer ages plus
    constant-month segments, equivalent to the daily sum in `ph_loglik`.
    """

    kind = "ph"

    def __init__(self, records, histories, *, pin_first_month=False, priors=None):
        super().__init__(records, histories, pin_first_month=pin_first_month, priors=priors)
        self.max_age = int(self.d_n.max())
        self._seg = _month_segments(self.histories, np.zeros(self.n, dtype=np.intp), self.d_n)

    def log_posterior(self, u) -> float:
        u = np.asarray(u, dtype=float)
        lp = self._log_prior_and_jacobian(u)
        if lp == _NEG_INF:
            return _NEG_INF
        params = self.unpack(self.constrain(u))
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            ages = np.arange(1, self.max_age + 1, dtype=float)
            cum0 = np.concatenate([[0.0], -_lev_logsf(np.log(ages) / params.sigma0)])
            if not np.all(np.isfinite(cum0)):
                return _NEG_INF
            unit_idx, months, lo, hi = self._seg
            contrib = (cum0[hi] - cum0[lo]) * np.exp(params.beta[months])
            H = np.exp(params.alpha * self.canada) * np.bincount(
                unit_idx, weights=contrib, minlength=self.n)
            logpdf_d, logsf_d = _lev_log_terms(self.d_n.astype(float), params.sigma0)
            log_h = (logpdf_d - logsf_d
                     + params.alpha * self.canada + params.beta[self.last_month])
            ll = float(self.delta @ log_h - H.sum())
        return lp + ll if math.isfinite(ll) else _NEG_INF


def seasonal_predict(model, draws, histories: Sequence[CovariateHistory],
                     freeze_date: dt.date, window_start: dt.date, window_end: dt.date,
                     in_service=None, scope="cluster",
                     method: str = "poisson") -> PredictiveDistribution:
    """Future return-count prediction over a calendar window.

    Each in-service unit's window is ``(age at window_start, age at
    window_end]``, where ages extend the known covariate path through the
    calendar.  CD uses the conditional damage-threshold probability; PH uses
    ``1 - exp(-(H(t_w) - H(t_c)))``.
    """
    off_s = (window_start - freeze_date).days
    off_e = (window_end - freeze_date).days
    if off_s < 0 or off_e < off_s:
        raise DomainError("need freeze_date <= window_start <= window_end")
    histories = list(histories)
    if in_service is None:
        in_service = np.ones(len(histories), dtype=bool)
    in_service = np.asarray(in_service, dtype=bool)
    active = [h for h, flag in zip(histories, in_service) if flag]
    meta = dict(n_draws=len(draws), delta_t=float(off_e - off_s), scope=scope,
                method=method, n_excluded=0)
    if not active or off_e == off_s:
        return PredictiveDistribution(np.array([1.0]), n_units=len(active), **meta)
    if method != "poisson":
        raise ConfigError("seasonal predictions support method='poisson'")

    for h in active:
        if h.entry_date + dt.timedelta(days=int(h.days_in_service)) != freeze_date:
            raise DataError(
                f"unit {h.unit_id}: entry_date + days_in_service must equal the "
                "data-freeze date for in-service units"
            )
    n = len(active)
    B = len(draws)
    canada = np.array([1.0 if h.canada else 0.0 for h in active])
    d_n = np.array([h.days_in_service for h in active], dtype=np.intp)
    theta_rows = draws.draws
    lam = np.zeros(B)

    if model.kind == "cd":
        Z = np.stack([h.month_counts() for h in active])
        # future days are calendar-shared across in-service units
        cal = np.bincount(_months_of_days(freeze_date, 0, off_s), minlength=12).astype(float)
        s_c = cal if off_s else np.zeros(12)
        s_w = np.bincount(_months_of_days(freeze_date, off_s, off_e), minlength=12).astype(float)
        Zc = Z + s_c
        Zw = Zc + s_w
        for j in range(B):
            params = model.unpack(theta_rows[j])
            eb = np.exp(params.beta)
            scale = np.exp(params.alpha * canada)
            u_c = scale * (Zc @ eb)
            u_w = scale * (Zw @ eb)
            _, logsf_c = _lev_log_terms(u_c, params.sigma0)
            _, logsf_w = _lev_log_terms(u_w, params.sigma0)
            rho = -np.expm1(logsf_w - logsf_c)
            lam[j] = float(np.sum(np.clip(rho, 0.0, 1.0)))
    elif model.kind == "ph":
        seg = _month_segments(active, d_n + off_s, d_n + off_e)
        unit_idx, months, lo, hi = seg
        max_age = int(d_n.max()) + off_e
        ages = np.arange(1, max_age + 1, dtype=float)
        log_ages = np.log(ages)
        for j in range(B):
            params = model.unpack(theta_rows[j])
            with np.errstate(over="ignore", divide="ignore"):
                cum0 = np.concatenate([[0.0], -_lev_logsf(log_ages / params.sigma0)])
            contrib = (cum0[hi] - cum0[lo]) * np.exp(params.beta[months])
            dH = np.exp(params.alpha * canada) * np.bincount(
                unit_idx, weights=contrib, minlength=n)
            rho = -np.expm1(-dH)
            lam[j] = float(np.sum(np.clip(rho, 0.0, 1.0)))
    else:
        raise ConfigError(f"unknown seasonal model kind {model.kind!r}")

    cdf = _poisson_mixture_cdf(lam)
    return PredictiveDistribution(cdf, n_units=n, **meta)
