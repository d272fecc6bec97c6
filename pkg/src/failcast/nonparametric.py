"""Kaplan-Meier estimation and probability-plot coordinates.

The product-limit estimator handles exact failures and right censoring,
with optional delayed entry: a left-truncated unit joins the risk set only
after its truncation age ("adjusted" estimate, flagged in the result).
Pointwise intervals use the Greenwood variance on the log-survival scale.

Probability-plot coordinates map times to ``log t`` and estimated cdf
values through the standardized quantile function of the chosen family, so
a correctly specified model plots as a straight line with slope
``1/sigma``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import ndtri

from .distributions import Family, family_kernel
from .errors import DataError, DomainError
from .likelihood import CensorCode, LifetimeRecord

__all__ = [
    "KaplanMeierEstimate",
    "kaplan_meier",
    "ProbabilityPlotData",
    "probability_plot_data",
]


@dataclass(frozen=True)
class KaplanMeierEstimate:
    """Step-function survival estimate evaluated at the event times."""

    times: np.ndarray
    survival: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    at_risk: np.ndarray
    events: np.ndarray
    conf_level: float
    adjusted_for_delayed_entry: bool

    def cdf_points(self):
        """(time, estimated cdf) pairs at the event times."""
        return self.times, 1.0 - self.survival


def kaplan_meier(records: Sequence[LifetimeRecord], conf_level: float = 0.90) -> KaplanMeierEstimate:
    """Product-limit estimate with Greenwood log-scale pointwise intervals.

    Supports exact and right-censored records only; left/interval censoring
    needs a different (Turnbull-type) estimator and is rejected.
    """
    if not (0.0 < conf_level < 1.0):
        raise DomainError("conf_level must lie strictly in (0, 1)")
    entries, ends, is_event, weights = [], [], [], []
    adjusted = False
    for rec in records:
        if rec.censor not in (CensorCode.EXACT, CensorCode.RIGHT):
            raise DataError(
                f"unsupported censor type {rec.censor.value!r}: the product-limit "
                "estimator needs exact or right-censored records"
            )
        entry = rec.trunc_left or 0.0
        adjusted = adjusted or entry > 0.0
        entries.append(entry)
        ends.append(rec.time)
        is_event.append(rec.censor is CensorCode.EXACT)
        weights.append(rec.multiplicity)
    entries = np.asarray(entries, dtype=float)
    ends = np.asarray(ends, dtype=float)
    is_event = np.asarray(is_event, dtype=bool)
    weights = np.asarray(weights, dtype=float)

    event_times = np.unique(ends[is_event])
    surv, lower, upper, at_risk, d_events = [], [], [], [], []
    s = 1.0
    green = 0.0
    z = float(ndtri(0.5 + conf_level / 2.0))
    for t in event_times:
        n_t = float(weights[(entries < t) & (ends >= t)].sum())
        d_t = float(weights[is_event & (ends == t)].sum())
        s *= 1.0 - d_t / n_t
        with np.errstate(divide="ignore"):
            green += d_t / (n_t * (n_t - d_t)) if n_t > d_t else float("inf")
        at_risk.append(n_t)
        d_events.append(d_t)
        surv.append(s)
        if s > 0.0 and math.isfinite(green):
            half = z * math.sqrt(green)
            lower.append(s * math.exp(-half))
            upper.append(min(1.0, s * math.exp(half)))
        else:
            lower.append(0.0)
            upper.append(min(1.0, s if s > 0 else upper[-1] if upper else 1.0))
    return KaplanMeierEstimate(
        times=event_times,
        survival=np.asarray(surv),
        lower=np.asarray(lower),
        upper=np.asarray(upper),
        at_risk=np.asarray(at_risk),
        events=np.asarray(d_events),
        conf_level=conf_level,
        adjusted_for_delayed_entry=adjusted,
    )


@dataclass(frozen=True)
class ProbabilityPlotData:
    """Coordinates for a probability-scale plot (data only; no rendering).

    ``point_*`` arrays hold nonparametric estimates transformed to the
    probability scale; ``band_*`` arrays hold the posterior median curve and
    pointwise credible band over ``grid_times`` (empty when no draws were
    supplied).
    """

    family: Family
    point_log_t: np.ndarray
    point_quantile: np.ndarray
    grid_times: np.ndarray
    band_lower: np.ndarray
    band_median: np.ndarray
    band_upper: np.ndarray
    band_level: float


def probability_plot_data(family: Family, km: Optional[KaplanMeierEstimate] = None,
                          model=None, draws=None, group=None,
                          grid_times=None, band_level: float = 0.90) -> ProbabilityPlotData:
    """Probability-plot coordinates from a nonparametric estimate and/or a fit.

    Nonparametric points with estimated cdf exactly 0 or 1 are omitted (the
    transform is undefined there).  When ``model`` and ``draws`` are given,
    the posterior median curve and pointwise credible band are evaluated on
    ``grid_times`` (a geometric grid over the data range by default).
    """
    k = family_kernel(family)
    point_log_t = np.empty(0)
    point_q = np.empty(0)
    if km is not None:
        times, cdf = km.cdf_points()
        keep = (cdf > 0.0) & (cdf < 1.0)
        point_log_t = np.log(times[keep])
        point_q = k.quantile(cdf[keep])
    grid = np.empty(0)
    b_lo = b_md = b_hi = np.empty(0)
    if model is not None and draws is not None:
        if grid_times is None:
            if km is not None and km.times.size:
                lo, hi = float(km.times.min()), float(km.times.max())
            else:
                raise DataError("grid_times is required when no nonparametric estimate is given")
            grid = np.geomspace(lo, hi, 50)
        else:
            grid = np.asarray(grid_times, dtype=float)
            if np.any(grid <= 0.0):
                raise DomainError("grid times must be positive")
        curves = model.cdf_curves(draws, grid, group)
        alpha = 1.0 - band_level
        qs = np.quantile(curves, [alpha / 2.0, 0.5, 1.0 - alpha / 2.0], axis=0)
        with np.errstate(divide="ignore"):
            b_lo, b_md, b_hi = (k.quantile(np.clip(q, 1e-300, 1.0 - 1e-16)) for q in qs)
    return ProbabilityPlotData(
        family=family,
        point_log_t=point_log_t,
        point_quantile=point_q,
        grid_times=grid,
        band_lower=b_lo,
        band_median=b_md,
        band_upper=b_hi,
        band_level=band_level,
    )
