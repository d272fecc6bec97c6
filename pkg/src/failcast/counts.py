"""Discrete distributions for future failure counts.

The number of future failures across a heterogeneous risk set is a sum of
independent Bernoulli trials with unequal probabilities, i.e. Poisson-
binomial.  The exact cdf is obtained by iterative convolution (O(n^2) time,
O(n) space); a Poisson approximation with rate ``sum(rho)`` covers very
large risk sets where only a small number of events is expected.

Quantiles follow the standard discrete convention everywhere: the smallest
``y`` with ``cdf(y) >= q``, which makes bounds conservative on ties.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import DomainError

__all__ = [
    "CountDistribution",
    "count_quantile",
    "binomial_quantile",
    "poisson_binomial_cdf",
    "poisson_approx_quantiles",
]


@dataclass(frozen=True)
class CountDistribution:
    """cdf of a nonnegative count with bounded support ``0..support_max``."""

    cdf: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.cdf, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise DomainError("cdf must be a nonempty 1-d array")
        if np.any(np.diff(arr) < -1e-12) or arr[0] < -1e-12:
            raise DomainError("cdf must be nondecreasing and nonnegative")
        if abs(arr[-1] - 1.0) > 1e-9:
            raise DomainError("cdf must reach 1 at the end of its support")
        object.__setattr__(self, "cdf", arr)

    @property
    def support_max(self) -> int:
        return self.cdf.size - 1

    def quantile(self, q: float) -> int:
        return count_quantile(self, q)

    def pmf(self) -> np.ndarray:
        return np.diff(self.cdf, prepend=0.0)

    def mean(self) -> float:
        # E[Y] = sum_{k>=0} P(Y > k)
        return float(np.sum(1.0 - self.cdf[:-1]))


def count_quantile(dist: CountDistribution, q: float) -> int:
    """Smallest ``y`` with ``cdf[y] >= q``."""
    if not (0.0 < q < 1.0):
        raise DomainError("q must lie strictly in (0, 1)")
    return int(np.searchsorted(dist.cdf, q, side="left"))


def binomial_quantile(q: float, n: int, rho: float) -> int:
    """Smallest ``y`` with ``Pr(Binomial(n, rho) <= y) >= q``."""
    if not (0.0 < q < 1.0):
        raise DomainError("q must lie strictly in (0, 1)")
    if not (0.0 <= rho <= 1.0):
        raise DomainError("rho must lie in [0, 1]")
    if n < 0:
        raise DomainError("n must be nonnegative")
    if n == 0 or rho == 0.0:
        return 0
    return int(stats.binom.ppf(q, n, rho))


def poisson_binomial_cdf(rhos) -> CountDistribution:
    """Exact distribution of a sum of independent Bernoulli(rho_i) trials.

    Computed by folding one trial at a time into a probability vector,
    starting from a point mass at zero.
    """
    rhos = np.asarray(rhos, dtype=float)
    if rhos.ndim != 1:
        raise DomainError("rhos must be a 1-d vector")
    if rhos.size and (np.any(rhos < 0.0) or np.any(rhos > 1.0) or not np.all(np.isfinite(rhos))):
        raise DomainError("each rho must lie in [0, 1]")
    n = rhos.size
    rhos = np.sort(rhos)  # canonical fold order: permutation invariance is bitwise
    pmf = np.zeros(n + 1)
    pmf[0] = 1.0
    for k, rho in enumerate(rhos, start=1):
        pmf[1:k + 1] = pmf[1:k + 1] * (1.0 - rho) + pmf[:k] * rho
        pmf[0] *= 1.0 - rho
    cdf = np.cumsum(pmf)
    cdf[-1] = max(cdf[-1], 1.0)  # guard 1-ulp cumsum shortfall
    return CountDistribution(np.minimum(cdf, 1.0))


def poisson_approx_quantiles(rhos, q_lo: float, q_hi: float) -> tuple[int, int]:
    """Poisson(lambda = sum rho_i) quantiles at ``q_lo`` and ``q_hi``."""
    rhos = np.asarray(rhos, dtype=float)
    if rhos.size and (np.any(rhos < 0.0) or np.any(rhos > 1.0)):
        raise DomainError("each rho must lie in [0, 1]")
    if not (0.0 < q_lo < q_hi < 1.0):
        raise DomainError("need 0 < q_lo < q_hi < 1")
    lam = float(rhos.sum())
    if lam == 0.0:
        return 0, 0
    return int(stats.poisson.ppf(q_lo, lam)), int(stats.poisson.ppf(q_hi, lam))
