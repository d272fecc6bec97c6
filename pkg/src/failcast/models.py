"""Hierarchical lifetime models and unconstrained log-posterior assembly.

Two hyperparameter conventions coexist, following how each model's priors
are most naturally stated:

* The log-location-scale hierarchy treats its locations as *natural-scale
  medians*: ``log t_pg ~ N(log eta_tp, tau_tp^2)`` and ``log sigma_g ~
  N(log eta_sigma, tau_sigma^2)`` with positive ``eta`` carrying an
  interval-specified lognormal prior.
* The two-mode mixture hierarchy uses *log/logit-scale locations* directly:
  ``logit pi_g ~ N(eta_pi, tau_pi^2)``, ``log t_p2g ~ N(eta_tp2,
  tau_tp2^2)``, and ``log sigma_2g ~ N(eta_sigma2, tau_sigma2^2)`` truncated
  to ``sigma_2g < 1`` (increasing wearout hazard), with normal priors on the
  real-valued ``eta`` parameters.

Sampling always happens on an unconstrained vector ``u``: ``exp`` maps to
positive parameters and the logistic function to (0, 1) parameters, with
the corresponding log-Jacobian added to the posterior density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.special import expit, log_ndtr

from .distributions import (
    Family,
    Glfp,
    LogLocationScale,
    _glfp_cdf,
    _glfp_logsf,
    family_kernel,
    std_quantile,
)
from .errors import ConfigError, DomainError
from .likelihood import CompiledDataset, LifetimeRecord
from .mcmc import LinkedBlock
from .priors import (
    HalfCauchy,
    HalfT,
    LognormalInterval,
    Normal,
    PriorSpec,
    lognormal_logpdf,
    normal_logpdf,
)

__all__ = [
    "HierWeibullParams",
    "HierGlfpParams",
    "log_prior",
    "HierLifetimeModel",
    "FlatLifetimeModel",
    "HierGlfpModel",
]

_NEG_INF = float("-inf")
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _logistic_log_jacobian(u):
    # d/du expit(u) = expit(u) * (1 - expit(u))
    return -(np.logaddexp(0.0, u) + np.logaddexp(0.0, -u))


def _check_prior_keys(priors: Mapping[str, PriorSpec], required: set, what: str):
    missing = required - set(priors)
    extra = set(priors) - required
    if missing or extra:
        raise ConfigError(
            f"{what} priors must cover exactly {sorted(required)}; "
            f"missing {sorted(missing)}, unexpected {sorted(extra)}"
        )


# ---------------------------------------------------------------------------
# parameter containers and the prior density over the constrained space

@dataclass
class HierWeibullParams:
    """Per-group (t_p, sigma) plus natural-median hyperparameters."""

    t_p: np.ndarray
    sigma: np.ndarray
    eta_tp: float
    tau_tp: float
    eta_sigma: float
    tau_sigma: float

    def __post_init__(self):
        self.t_p = np.atleast_1d(np.asarray(self.t_p, dtype=float))
        self.sigma = np.atleast_1d(np.asarray(self.sigma, dtype=float))
        if self.t_p.shape != self.sigma.shape or self.t_p.size < 1:
            raise DomainError("t_p and sigma must be equal-length, nonempty vectors")


@dataclass
class HierGlfpParams:
    """Shared early mode, per-group wearout/defective-fraction parameters."""

    t_p1: float
    sigma1: float
    pi: np.ndarray
    t_p2: np.ndarray
    sigma2: np.ndarray
    eta_pi: float
    tau_pi: float
    eta_sigma2: float
    tau_sigma2: float
    eta_tp2: float
    tau_tp2: float

    def __post_init__(self):
        self.pi = np.atleast_1d(np.asarray(self.pi, dtype=float))
        self.t_p2 = np.atleast_1d(np.asarray(self.t_p2, dtype=float))
        self.sigma2 = np.atleast_1d(np.asarray(self.sigma2, dtype=float))
        if not (self.pi.shape == self.t_p2.shape == self.sigma2.shape) or self.pi.size < 1:
            raise DomainError("pi, t_p2 and sigma2 must be equal-length, nonempty vectors")


WEIBULL_PRIOR_KEYS = {"eta_tp", "tau_tp", "eta_sigma", "tau_sigma"}
GLFP_PRIOR_KEYS = {
    "t_p1", "sigma1",
    "eta_pi", "tau_pi", "eta_sigma2", "tau_sigma2", "eta_tp2", "tau_tp2",
}


def _log_prior_weibull(p: HierWeibullParams, priors) -> float:
    _check_prior_keys(priors, WEIBULL_PRIOR_KEYS, "hierarchical lifetime")
    if min(p.eta_tp, p.eta_sigma, p.tau_tp, p.tau_sigma) <= 0.0:
        return _NEG_INF
    lp = (priors["eta_tp"].logpdf(p.eta_tp)
          + priors["tau_tp"].logpdf(p.tau_tp)
          + priors["eta_sigma"].logpdf(p.eta_sigma)
          + priors["tau_sigma"].logpdf(p.tau_sigma))
    lp += float(np.sum(lognormal_logpdf(p.t_p, math.log(p.eta_tp), p.tau_tp)))
    lp += float(np.sum(lognormal_logpdf(p.sigma, math.log(p.eta_sigma), p.tau_sigma)))
    return lp if math.isfinite(lp) else _NEG_INF


def _log_prior_glfp(p: HierGlfpParams, priors) -> float:
    _check_prior_keys(priors, GLFP_PRIOR_KEYS, "hierarchical mixture")
    if min(p.tau_pi, p.tau_sigma2, p.tau_tp2) <= 0.0:
        return _NEG_INF
    if np.any((p.pi <= 0.0) | (p.pi >= 1.0)) or np.any((p.sigma2 <= 0.0) | (p.sigma2 >= 1.0)):
        return _NEG_INF
    if p.t_p1 <= 0.0 or p.sigma1 <= 0.0 or np.any(p.t_p2 <= 0.0):
        return _NEG_INF
    lp = (priors["t_p1"].logpdf(p.t_p1)
          + priors["sigma1"].logpdf(p.sigma1)
          + priors["eta_pi"].logpdf(p.eta_pi)
          + priors["tau_pi"].logpdf(p.tau_pi)
          + priors["eta_sigma2"].logpdf(p.eta_sigma2)
          + priors["tau_sigma2"].logpdf(p.tau_sigma2)
          + priors["eta_tp2"].logpdf(p.eta_tp2)
          + priors["tau_tp2"].logpdf(p.tau_tp2))
    logit_pi = np.log(p.pi) - np.log1p(-p.pi)
    lp += float(np.sum(normal_logpdf(logit_pi, p.eta_pi, p.tau_pi)
                       - np.log(p.pi) - np.log1p(-p.pi)))
    lp += float(np.sum(lognormal_logpdf(p.t_p2, p.eta_tp2, p.tau_tp2)))
    # lognormal truncated to (0, 1): renormalize by P(log sigma2 < 0)
    log_mass = float(log_ndtr(-p.eta_sigma2 / p.tau_sigma2))
    lp += float(np.sum(lognormal_logpdf(p.sigma2, p.eta_sigma2, p.tau_sigma2) - log_mass))
    return lp if math.isfinite(lp) else _NEG_INF


def log_prior(params, priors: Mapping[str, PriorSpec]) -> float:
    """Joint log-density of hyperparameters and per-group parameters."""
    if isinstance(params, HierWeibullParams):
        return _log_prior_weibull(params, priors)
    if isinstance(params, HierGlfpParams):
        return _log_prior_glfp(params, priors)
    raise TypeError(f"unsupported parameter container: {type(params)!r}")


# ---------------------------------------------------------------------------
# model classes (shared protocol: dim, param_names, constrain, log_posterior,
# init_center, conditional_probs, cdf_curves)

class HierLifetimeModel:
    """Hierarchical log-location-scale lifetime model.

    Group ``g`` has quantile parameter ``t_pg`` (at level ``p``) and scale
    ``sigma_g``, partially pooled through lognormal hyperdistributions.
    """

    def __init__(self, records: Sequence[LifetimeRecord], *, p: float = 0.05,
                 family: Family = Family.SEV,
                 priors: Optional[Mapping[str, PriorSpec]] = None,
                 groups: Optional[Sequence] = None):
        self.data = records if isinstance(records, CompiledDataset) else CompiledDataset(records, groups=groups)
        self.p = float(p)
        self.family = family
        self._zp = float(std_quantile(self.p, family))
        self.priors = dict(self.default_priors())
        if priors:
            self.priors.update(priors)
        _check_prior_keys(self.priors, WEIBULL_PRIOR_KEYS, "hierarchical lifetime")
        self.groups = self.data.groups
        G = len(self.groups)
        self.param_names = (["eta_tp", "tau_tp", "eta_sigma", "tau_sigma"]
                            + [f"tp[{g}]" for g in self.groups]
                            + [f"sigma[{g}]" for g in self.groups])
        self._g = G
        # sampler blocks: centered hyper pairs, per-group (t_p, sigma) pairs,
        # and interweaved hyper moves that carry the groups along the fiber
        tp_children = tuple(range(4, 4 + G))
        sg_children = tuple(range(4 + G, 4 + 2 * G))
        self.blocks = ([[0, 1], [2, 3]]
                       + [[4 + g, 4 + G + g] for g in range(G)]
                       + [LinkedBlock(0, 1, tp_children),
                          LinkedBlock(2, 3, sg_children)])

    @staticmethod
    def default_priors() -> dict:
        return {
            "eta_tp": LognormalInterval(2.75, 19.70),
            "tau_tp": HalfT(4.0, 1.0),
            "eta_sigma": LognormalInterval(0.08, 4.0),
            "tau_sigma": HalfT(4.0, 1.0),
        }

    @property
    def dim(self) -> int:
        return 4 + 2 * self._g

    def constrain(self, u):
        return np.exp(np.asarray(u, dtype=float))

    def hier_params(self, theta) -> HierWeibullParams:
        G = self._g
        return HierWeibullParams(
            t_p=theta[4:4 + G], sigma=theta[4 + G:4 + 2 * G],
            eta_tp=theta[0], tau_tp=theta[1], eta_sigma=theta[2], tau_sigma=theta[3],
        )

    def log_posterior(self, u) -> float:
        u = np.asarray(u, dtype=float)
        G = self._g
        with np.errstate(over="ignore"):
            theta = np.exp(u)
        if not np.all(np.isfinite(theta)):
            return _NEG_INF
        lp = log_prior(self.hier_params(theta), self.priors)
        if lp == _NEG_INF:
            return _NEG_INF
        sigma = theta[4 + G:4 + 2 * G]
        mu = u[4:4 + G] - sigma * self._zp  # u block is log t_p
        ll = self.data.loglik_lls(mu, sigma, self.family)
        if ll == _NEG_INF:
            return _NEG_INF
        return lp + ll + float(np.sum(u))

    def init_center(self) -> np.ndarray:
        med_tp = self.priors["eta_tp"].median()
        med_sig = self.priors["eta_sigma"].median()
        center = ([med_tp, self.priors["tau_tp"].median(),
                   med_sig, self.priors["tau_sigma"].median()]
                  + [med_tp] * self._g + [med_sig] * self._g)
        return np.log(np.asarray(center, dtype=float))

    def local_posterior(self) -> "_HierLlsLocal":
        """Stateful block-local evaluator matching ``self.blocks``."""
        return _HierLlsLocal(self)

    # prediction/plotting hooks -------------------------------------------
    def group_dist(self, theta, group) -> LogLocationScale:
        gi = self.groups.index(group)
        tp = float(theta[4 + gi])
        sigma = float(theta[4 + self._g + gi])
        return LogLocationScale(self.family, math.log(tp) - sigma * self._zp, sigma)

    def _group_mu_sigma(self, draws, group):
        tp = draws.column(f"tp[{group}]")
        sigma = draws.column(f"sigma[{group}]")
        return np.log(tp) - sigma * self._zp, sigma

    def conditional_probs(self, draws, group, t_c: float, delta_t: float) -> np.ndarray:
        """Per-draw probability of failing in (t_c, t_c + delta_t] given survival to t_c."""
        mu, sigma = self._group_mu_sigma(draws, group)
        return _lls_cond_prob(self.family, mu, sigma, t_c, delta_t)

    def cdf_curves(self, draws, times, group) -> np.ndarray:
        mu, sigma = self._group_mu_sigma(draws, group)
        log_t = np.log(np.asarray(times, dtype=float))
        z = (log_t[None, :] - mu[:, None]) / sigma[:, None]
        with np.errstate(over="ignore"):
            return family_kernel(self.family).cdf(z)


def _exp_guard(v: float) -> float:
    return math.exp(v) if v < 709.0 else float("inf")


class _HierLlsLocal:
    """Cached block-local evaluation of the hierarchical lifetime posterior.

    Holds the posterior's additive components (hyper priors, per-group
    hierarchy terms, per-group likelihoods, Jacobian) so a block proposal
    only recomputes the pieces its coordinates touch.  Component values are
    stored, not running totals, so there is no incremental drift.
    """

    def __init__(self, model: "HierLifetimeModel"):
        self.m = model
        self.G = model._g

    # component calculators ------------------------------------------------
    def _hp(self, u, which):
        pr = self.m.priors
        if which == "tp":
            return (pr["eta_tp"].logpdf(_exp_guard(u[0]))
                    + pr["tau_tp"].logpdf(_exp_guard(u[1])))
        return (pr["eta_sigma"].logpdf(_exp_guard(u[2]))
                + pr["tau_sigma"].logpdf(_exp_guard(u[3])))

    def _hier(self, u, which, g=None):
        # lognormal density of exp(v) at location log(eta) = u[loc]: since v
        # is already the log value, the terms reduce to a normal kernel in v
        G = self.G
        if which == "tp":
            loc, log_tau = u[0], u[1]
            vals = u[4 + g] if g is not None else u[4:4 + G]
        else:
            loc, log_tau = u[2], u[3]
            vals = u[4 + G + g] if g is not None else u[4 + G:4 + 2 * G]
        tau = _exp_guard(log_tau)
        if not math.isfinite(tau) or tau <= 0.0:
            return -np.inf if g is not None else np.full(G, -np.inf)
        z = (vals - loc) / tau
        out = -0.5 * z * z - vals - log_tau - _LOG_SQRT_2PI
        if g is not None:
            return out if math.isfinite(out) else _NEG_INF
        return np.where(np.isfinite(out), out, _NEG_INF)

    def _ll(self, u, g):
        G = self.G
        sigma = _exp_guard(u[4 + G + g])
        if not math.isfinite(sigma):
            return _NEG_INF
        mu = u[4 + g] - sigma * self.m._zp
        return self.m.data.loglik_lls_group(g, mu, sigma, self.m.family)

    def reset(self, u) -> float:
        u = np.array(u, dtype=float)
        self._u = u
        self._c_hp_tp = self._hp(u, "tp")
        self._c_hp_sg = self._hp(u, "sg")
        self._c_hier_tp = self._hier(u, "tp")
        self._c_hier_sg = self._hier(u, "sg")
        self._c_ll = np.array([self._ll(u, g) for g in range(self.G)])
        self._s_hier_tp = float(self._c_hier_tp.sum())
        self._s_hier_sg = float(self._c_hier_sg.sum())
        self._s_ll = float(self._c_ll.sum())
        self._pending = None
        total = (self._c_hp_tp + self._c_hp_sg + self._s_hier_tp
                 + self._s_hier_sg + self._s_ll + float(np.sum(u)))
        return total if math.isfinite(total) else _NEG_INF

    def propose(self, bi, y) -> float:
        G = self.G
        upd = {}
        if bi == 0:
            upd["hp_tp"] = self._hp(y, "tp")
            v = self._hier(y, "tp")
            upd["hier_tp"] = v
            upd["s_hier_tp"] = float(v.sum())
        elif bi == 1:
            upd["hp_sg"] = self._hp(y, "sg")
            v = self._hier(y, "sg")
            upd["hier_sg"] = v
            upd["s_hier_sg"] = float(v.sum())
        elif bi < 2 + G:
            g = bi - 2
            ht = self._hier(y, "tp", g=g)
            hs = self._hier(y, "sg", g=g)
            ll = self._ll(y, g)
            upd["group"] = (g, ht, hs, ll)
            upd["s_hier_tp"] = self._s_hier_tp - self._c_hier_tp[g] + ht
            upd["s_hier_sg"] = self._s_hier_sg - self._c_hier_sg[g] + hs
            upd["s_ll"] = self._s_ll - self._c_ll[g] + ll
        else:
            # linked fiber: the hyper pair and every group's child move
            which = "tp" if bi == 2 + G else "sg"
            upd[f"hp_{which}"] = self._hp(y, which)
            v = self._hier(y, which)
            upd[f"hier_{which}"] = v
            upd[f"s_hier_{which}"] = float(v.sum())
            llv = np.array([self._ll(y, g) for g in range(G)])
            upd["ll"] = llv
            upd["s_ll"] = float(llv.sum())
        total = (upd.get("hp_tp", self._c_hp_tp)
                 + upd.get("hp_sg", self._c_hp_sg)
                 + upd.get("s_hier_tp", self._s_hier_tp)
                 + upd.get("s_hier_sg", self._s_hier_sg)
                 + upd.get("s_ll", self._s_ll)
                 + float(np.sum(y)))
        self._pending = (y, upd)
        return total if math.isfinite(total) else _NEG_INF

    def accept(self) -> None:
        y, upd = self._pending
        self._u = y
        if "group" in upd:
            g, ht, hs, ll = upd["group"]
            self._c_hier_tp[g] = ht
            self._c_hier_sg[g] = hs
            self._c_ll[g] = ll
        for key in ("hp_tp", "hp_sg", "hier_tp", "hier_sg", "ll",
                    "s_hier_tp", "s_hier_sg", "s_ll"):
            if key in upd:
                setattr(self, "_c_" + key if not key.startswith("s_") else "_" + key, upd[key])
        self._pending = None


def _lls_cond_prob(family, mu, sigma, t_c, delta_t):
    k = family_kernel(family)
    t_w = t_c + delta_t
    if delta_t == 0.0:
        return np.zeros_like(mu)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        z_w = (math.log(t_w) - mu) / sigma
        if t_c == 0.0:
            return k.cdf(z_w)
        z_c = (math.log(t_c) - mu) / sigma
        ls_c = k.logsf(z_c)
        rho = -np.expm1(k.logsf(z_w) - ls_c)
        rho = np.where(ls_c == _NEG_INF, np.nan, rho)
    return np.clip(rho, 0.0, 1.0)


class FlatLifetimeModel:
    """Independent per-group (t_p, sigma) with direct priors; no pooling.

    With ``pool=True`` all records are treated as a single group "all"
    (useful for a pooled diagnostic fit).  Priors must supply exactly the
    keys ``t_p`` and ``sigma``; each applies to every group independently.
    """

    PRIOR_KEYS = {"t_p", "sigma"}

    def __init__(self, records, *, p: float = 0.05, family: Family = Family.SEV,
                 priors: Mapping[str, PriorSpec] = None,
                 groups: Optional[Sequence] = None, pool: bool = False):
        self.data = records if isinstance(records, CompiledDataset) else CompiledDataset(
            records, groups=groups, pool=pool)
        if priors is None:
            raise ConfigError("FlatLifetimeModel requires explicit t_p and sigma priors")
        _check_prior_keys(priors, self.PRIOR_KEYS, "flat lifetime")
        self.priors = dict(priors)
        self.p = float(p)
        self.family = family
        self._zp = float(std_quantile(self.p, family))
        self.groups = self.data.groups
        self._g = len(self.groups)
        self.param_names = ([f"tp[{g}]" for g in self.groups]
                            + [f"sigma[{g}]" for g in self.groups])
        self.blocks = [[g, self._g + g] for g in range(self._g)]

    @property
    def dim(self) -> int:
        return 2 * self._g

    def constrain(self, u):
        return np.exp(np.asarray(u, dtype=float))

    def log_posterior(self, u) -> float:
        u = np.asarray(u, dtype=float)
        G = self._g
        with np.errstate(over="ignore"):
            theta = np.exp(u)
        if not np.all(np.isfinite(theta)):
            return _NEG_INF
        tp = theta[:G]
        sigma = theta[G:]
        lp = 0.0
        for g in range(G):
            lp += self.priors["t_p"].logpdf(tp[g]) + self.priors["sigma"].logpdf(sigma[g])
        if not math.isfinite(lp):
            return _NEG_INF
        mu = u[:G] - sigma * self._zp
        ll = self.data.loglik_lls(mu, sigma, self.family)
        if ll == _NEG_INF:
            return _NEG_INF
        return lp + ll + float(np.sum(u))

    def init_center(self) -> np.ndarray:
        center = ([self.priors["t_p"].median()] * self._g
                  + [self.priors["sigma"].median()] * self._g)
        return np.log(np.asarray(center, dtype=float))

    def group_dist(self, theta, group) -> LogLocationScale:
        gi = self.groups.index(group)
        tp = float(theta[gi])
        sigma = float(theta[self._g + gi])
        return LogLocationScale(self.family, math.log(tp) - sigma * self._zp, sigma)

    def _group_mu_sigma(self, draws, group):
        tp = draws.column(f"tp[{group}]")
        sigma = draws.column(f"sigma[{group}]")
        return np.log(tp) - sigma * self._zp, sigma

    def conditional_probs(self, draws, group, t_c, delta_t):
        mu, sigma = self._group_mu_sigma(draws, group)
        return _lls_cond_prob(self.family, mu, sigma, t_c, delta_t)

    def cdf_curves(self, draws, times, group):
        mu, sigma = self._group_mu_sigma(draws, group)
        log_t = np.log(np.asarray(times, dtype=float))
        z = (log_t[None, :] - mu[:, None]) / sigma[:, None]
        with np.errstate(over="ignore"):
            return family_kernel(self.family).cdf(z)


class HierGlfpModel:
    """Hierarchical two-failure-mode mixture model.

    The early mode ``(t_p1, sigma1)`` (quantile level ``p1``) is shared
    across groups; each group has a defective fraction ``pi_g`` and wearout
    parameters ``(t_p2g, sigma_2g)`` (quantile level ``p2``), with
    ``sigma_2g`` restricted to (0, 1).
    """

    def __init__(self, records, *, p1: float = 0.50, p2: float = 0.20,
                 priors: Optional[Mapping[str, PriorSpec]] = None,
                 groups: Optional[Sequence] = None):
        self.data = records if isinstance(records, CompiledDataset) else CompiledDataset(records, groups=groups)
        self.p1 = float(p1)
        self.p2 = float(p2)
        self._zp1 = float(std_quantile(self.p1, Family.SEV))
        self._zp2 = float(std_quantile(self.p2, Family.SEV))
        self.priors = dict(self.default_priors())
        if priors:
            self.priors.update(priors)
        _check_prior_keys(self.priors, GLFP_PRIOR_KEYS, "hierarchical mixture")
        self.groups = self.data.groups
        G = len(self.groups)
        self._g = G
        self.param_names = (["tp1", "sigma1", "eta_pi", "tau_pi",
                             "eta_sigma2", "tau_sigma2", "eta_tp2", "tau_tp2"]
                            + [f"pi[{g}]" for g in self.groups]
                            + [f"tp2[{g}]" for g in self.groups]
                            + [f"sigma2[{g}]" for g in self.groups])
        # shared early mode, each hyper pair, per-group triplets, and fiber
        # moves for the two exact location-scale hierarchies (pi on the logit
        # scale, t_p2 on the log scale; sigma2's truncation breaks the fiber)
        self.blocks = ([[0, 1], [2, 3], [4, 5], [6, 7]]
                       + [[8 + g, 8 + G + g, 8 + 2 * G + g] for g in range(G)]
                       + [LinkedBlock(2, 3, tuple(range(8, 8 + G))),
                          LinkedBlock(6, 7, tuple(range(8 + G, 8 + 2 * G)))])

    @staticmethod
    def default_priors() -> dict:
        return {
            "t_p1": LognormalInterval(22.0, 5.5e4),
            "sigma1": LognormalInterval(0.14, 7.1),
            "eta_pi": Normal(-3.0, 1.0),
            "tau_pi": HalfCauchy(1.0),
            "eta_sigma2": Normal(0.0, 2.0),
            "tau_sigma2": HalfCauchy(1.0),
            "eta_tp2": Normal(9.0, 2.0),
            "tau_tp2": HalfCauchy(1.0),
        }

    @property
    def dim(self) -> int:
        return 8 + 3 * self._g

    def _split(self, u):
        G = self._g
        return u[:8], u[8:8 + G], u[8 + G:8 + 2 * G], u[8 + 2 * G:]

    def constrain(self, u):
        u = np.asarray(u, dtype=float)
        theta = np.array(u, dtype=float, copy=True)
        G = self._g
        pos = [0, 1, 3, 5, 7]
        with np.errstate(over="ignore"):
            theta[..., pos] = np.exp(u[..., pos])
            theta[..., 8:8 + G] = expit(u[..., 8:8 + G])
            theta[..., 8 + G:8 + 2 * G] = np.exp(u[..., 8 + G:8 + 2 * G])
            theta[..., 8 + 2 * G:] = expit(u[..., 8 + 2 * G:])
        return theta

    def hier_params(self, theta) -> HierGlfpParams:
        G = self._g
        return HierGlfpParams(
            t_p1=theta[0], sigma1=theta[1],
            pi=theta[8:8 + G], t_p2=theta[8 + G:8 + 2 * G], sigma2=theta[8 + 2 * G:],
            eta_pi=theta[2], tau_pi=theta[3],
            eta_sigma2=theta[4], tau_sigma2=theta[5],
            eta_tp2=theta[6], tau_tp2=theta[7],
        )

    def log_posterior(self, u) -> float:
        u = np.asarray(u, dtype=float)
        theta = self.constrain(u)
        if not np.all(np.isfinite(theta)):
            return _NEG_INF
        params = self.hier_params(theta)
        lp = log_prior(params, self.priors)
        if lp == _NEG_INF:
            return _NEG_INF
        head, u_pi, u_tp2, u_s2 = self._split(u)
        mu1 = math.log(params.t_p1) - params.sigma1 * self._zp1
        mu2 = u_tp2 - params.sigma2 * self._zp2
        ll = self.data.loglik_glfp(params.pi, mu1, params.sigma1, mu2, params.sigma2)
        if ll == _NEG_INF:
            return _NEG_INF
        jac = (head[0] + head[1] + head[3] + head[5] + head[7]
               + float(np.sum(u_tp2))
               + float(np.sum(_logistic_log_jacobian(u_pi)))
               + float(np.sum(_logistic_log_jacobian(u_s2))))
        return lp + ll + jac

    def init_center(self) -> np.ndarray:
        pr = self.priors
        eta_pi0 = pr["eta_pi"].median()
        eta_tp20 = pr["eta_tp2"].median()
        head = [math.log(pr["t_p1"].median()), math.log(pr["sigma1"].median()),
                eta_pi0, math.log(pr["tau_pi"].median()),
                pr["eta_sigma2"].median(), math.log(pr["tau_sigma2"].median()),
                eta_tp20, math.log(pr["tau_tp2"].median())]
        u_pi = [eta_pi0] * self._g          # logit pi centered at eta_pi
        u_tp2 = [eta_tp20] * self._g        # log t_p2 centered at eta_tp2
        u_s2 = [0.0] * self._g              # sigma2 centered at 1/2
        return np.asarray(head + u_pi + u_tp2 + u_s2, dtype=float)

    def group_dist(self, theta, group) -> Glfp:
        gi = self.groups.index(group)
        G = self._g
        tp1, s1 = float(theta[0]), float(theta[1])
        pi = float(theta[8 + gi])
        tp2 = float(theta[8 + G + gi])
        s2 = float(theta[8 + 2 * G + gi])
        return Glfp(pi,
                    LogLocationScale(Family.SEV, math.log(tp1) - s1 * self._zp1, s1),
                    LogLocationScale(Family.SEV, math.log(tp2) - s2 * self._zp2, s2))

    def _group_arrays(self, draws, group):
        pi = draws.column(f"pi[{group}]")
        tp2 = draws.column(f"tp2[{group}]")
        s2 = draws.column(f"sigma2[{group}]")
        tp1 = draws.column("tp1")
        s1 = draws.column("sigma1")
        mu1 = np.log(tp1) - s1 * self._zp1
        mu2 = np.log(tp2) - s2 * self._zp2
        return pi, mu1, s1, mu2, s2

    def conditional_probs(self, draws, group, t_c, delta_t):
        pi, mu1, s1, mu2, s2 = self._group_arrays(draws, group)
        if delta_t == 0.0:
            return np.zeros_like(mu2)
        log_tw = math.log(t_c + delta_t)
        if t_c == 0.0:
            return _glfp_cdf(log_tw, pi, mu1, s1, mu2, s2)
        ls_c = _glfp_logsf(math.log(t_c), pi, mu1, s1, mu2, s2)
        rho = -np.expm1(_glfp_logsf(log_tw, pi, mu1, s1, mu2, s2) - ls_c)
        rho = np.where(ls_c == _NEG_INF, np.nan, rho)
        return np.clip(rho, 0.0, 1.0)

    def cdf_curves(self, draws, times, group):
        pi, mu1, s1, mu2, s2 = self._group_arrays(draws, group)
        log_t = np.log(np.asarray(times, dtype=float))
        return _glfp_cdf(log_t[None, :], pi[:, None], mu1[:, None], s1[:, None],
                         mu2[:, None], s2[:, None])
