"""Coverage-probability experiment for hierarchical prediction bounds.

Each replication draws per-group Weibull parameters from interval-specified
lognormal hyperdistributions, generates type-I-censored lifetimes observed
to a calibrated age ``t_c``, fits the hierarchical model, and checks
whether one-sided 90%/95% bounds cover the realized number of failures in
``(t_c, t_w]`` — per group (averaged over groups) and for the pooled
population.  Censoring ages are calibrated so the *expected* failure
proportions hit ``p_f`` by ``t_c`` and ``p_delta`` within the window.

Every reported coverage carries a Monte Carlo standard error
``sqrt(p(1-p)/n_datasets)``; assertions about coverage should be stated in
those units.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .distributions import Family, _sev_cdf, std_quantile
from .errors import CalibrationError, ConfigError
from .likelihood import LifetimeRecord
from .mcmc import PosteriorDraws, SamplerConfig, fit, rhat
from .models import HierLifetimeModel
from .prediction import (
    PredictionWindow,
    RiskSetEntry,
    one_sided_bound,
    predictive_cdf,
)
from .priors import interval_to_lognormal

__all__ = [
    "SimConfig",
    "SimulatedDataset",
    "CoverageRow",
    "CoverageReport",
    "draw_group_params",
    "calibrate_censor_times",
    "simulate_dataset",
    "run_coverage",
    "run_unbalanced",
    "PRESETS",
    "DESK_SAMPLER",
    "PAPER_SAMPLER",
    "factor_grid",
]

# spawn keys for deterministic, independent random streams
_CAL_STREAM = 1
_DATA_STREAM = 2
_FIT_STREAM = 3


@dataclass(frozen=True)
class SimConfig:
    """One factor-level combination of the experiment."""

    G: int
    expected_r: float              # expected total failures by t_c
    p_f: float                     # expected failure fraction by t_c
    p_delta: float                 # expected failure fraction in (t_c, t_w]
    tp_interval: tuple             # 95% interval of the t_p hyperdistribution
    sigma_interval: tuple          # 95% interval of the sigma hyperdistribution
    n_datasets: int = 300
    calibration_draws: int = 50000
    seed: int = 0
    p: float = 0.05                # quantile level of the reparameterization
    per_group_r: Optional[tuple] = None  # unbalanced designs: expected failures per group

    def __post_init__(self):
        if self.G < 1:
            raise ConfigError("G must be >= 1")
        if not (0.0 < self.p_f < self.p_f + self.p_delta < 1.0):
            raise ConfigError("need 0 < p_f < p_f + p_delta < 1")
        if self.per_group_r is not None and len(self.per_group_r) != self.G:
            raise ConfigError("per_group_r must list one value per group")
        if self.n_datasets < 1 or self.calibration_draws < 1:
            raise ConfigError("n_datasets and calibration_draws must be >= 1")
        interval_to_lognormal(*self.tp_interval)
        interval_to_lognormal(*self.sigma_interval)
        if np.any(self.n_per_group < 1):
            raise ConfigError("expected_r too small: group sizes fall below 1")

    @property
    def n_per_group(self) -> np.ndarray:
        """Units per group, n_g = E(r_g) / p_f, rounded to integers >= 1."""
        if self.per_group_r is not None:
            raw = np.asarray(self.per_group_r, dtype=float) / self.p_f
        else:
            raw = np.full(self.G, self.expected_r / (self.G * self.p_f))
        return np.maximum(1, np.rint(raw)).astype(int)


@dataclass
class SimulatedDataset:
    records: list
    risk: list
    true_counts: np.ndarray     # hidden failures per group in (t_c, t_w]
    observed: np.ndarray        # failures per group by t_c
    groups: list


@dataclass(frozen=True)
class CoverageRow:
    scope: str
    side: str
    level: float
    coverage: float
    mc_se: float
    n_datasets: int
    n_excluded: int


@dataclass
class CoverageReport:
    rows: list
    t_c: float
    t_w: float
    n_excluded: int
    label: str = ""

    def get(self, scope: str, side: str, level: float) -> CoverageRow:
        for row in self.rows:
            if row.scope == scope and row.side == side and abs(row.level - level) < 1e-9:
                return row
        raise KeyError(f"no coverage row for ({scope}, {side}, {level})")

    def to_csv(self, path, scenario: str = "") -> None:
        scenario = scenario or self.label
        with open(path, "w", newline="\n") as fh:
            writer = csv.writer(fh)
            writer.writerow(["scenario", "scope", "side", "level",
                             "coverage", "mc_se", "n_datasets", "n_excluded"])
            for row in self.rows:
                writer.writerow([scenario, row.scope, row.side, repr(row.level),
                                 repr(row.coverage), repr(row.mc_se),
                                 row.n_datasets, row.n_excluded])


def _stream(seed: int, *key) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def _derived_seed(seed: int, *key) -> int:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1)[0])


def draw_group_params(cfg: SimConfig, rng: np.random.Generator):
    """Independent lognormal draws of (t_pg, sigma_g) for every group."""
    loc_tp, sc_tp = interval_to_lognormal(*cfg.tp_interval)
    loc_sg, sc_sg = interval_to_lognormal(*cfg.sigma_interval)
    t_p = rng.lognormal(mean=loc_tp, sigma=sc_tp, size=cfg.G)
    sigma = rng.lognormal(mean=loc_sg, sigma=sc_sg, size=cfg.G)
    return t_p, sigma


def _mean_cdf_solver(cfg: SimConfig):
    rng = _stream(cfg.seed, _CAL_STREAM)
    loc_tp, sc_tp = interval_to_lognormal(*cfg.tp_interval)
    loc_sg, sc_sg = interval_to_lognormal(*cfg.sigma_interval)
    n = cfg.calibration_draws
    t_p = rng.lognormal(mean=loc_tp, sigma=sc_tp, size=n)
    sigma = rng.lognormal(mean=loc_sg, sigma=sc_sg, size=n)
    zp = float(std_quantile(cfg.p, Family.SEV))
    mu = np.log(t_p) - sigma * zp

    def mean_cdf(t: float) -> float:
        with np.errstate(over="ignore"):
            z = (math.log(t) - mu) / sigma
            return float(np.mean(_sev_cdf(z)))

    return mean_cdf, float(np.median(t_p))


def _bisect_increasing(f, target: float, lo: float, hi: float) -> float:
    flo, fhi = f(lo), f(hi)
    if not (flo <= target <= fhi):
        raise CalibrationError(
            f"target {target} not bracketed in [{lo:.3e}, {hi:.3e}] "
            f"(f range [{flo:.3e}, {fhi:.3e}])"
        )
    while hi - lo > 1e-10 * hi:
        mid = 0.5 * (lo + hi)
        if f(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def calibrate_censor_times(cfg: SimConfig) -> tuple[float, float]:
    """Solve mean-cdf(t_c) = p_f and mean-cdf(t_w) = p_f + p_delta.

    The mean cdf averages Weibull cdfs over `calibration_draws` parameter
    sets from the hyperdistributions; it is strictly increasing, so
    bracketing bisection finds unique roots.
    """
    mean_cdf, med_tp = _mean_cdf_solver(cfg)
    lo, hi = 1e-12 * med_tp, 1e12 * med_tp
    t_c = _bisect_increasing(mean_cdf, cfg.p_f, lo, hi)
    t_w = _bisect_increasing(mean_cdf, cfg.p_f + cfg.p_delta, lo, hi)
    return t_c, t_w


def simulate_dataset(cfg: SimConfig, group_params, t_c: float, t_w: float,
                     rng: np.random.Generator) -> SimulatedDataset:
    """Type-I censored data at ``t_c`` plus the hidden counts in ``(t_c, t_w]``.

    Failures by ``t_c`` become exact records; survivors collapse into one
    right-censored record per group (multiplicity = count) and populate the
    risk set at common age ``t_c``.
    """
    t_p, sigma = group_params
    n_per_group = cfg.n_per_group
    groups = list(range(cfg.G))
    zp = float(std_quantile(cfg.p, Family.SEV))
    records, risk = [], []
    true_counts = np.zeros(cfg.G, dtype=int)
    observed = np.zeros(cfg.G, dtype=int)
    for g in groups:
        n_g = int(n_per_group[g])
        mu = math.log(t_p[g]) - sigma[g] * zp
        u = rng.uniform(size=n_g)
        u = np.clip(u, np.finfo(float).tiny, 1.0 - 1e-16)
        t = np.exp(mu + sigma[g] * np.log(-np.log(u)))
        failed = t <= t_c
        observed[g] = int(failed.sum())
        true_counts[g] = int(np.sum((t > t_c) & (t <= t_w)))
        for i, ti in enumerate(t[failed]):
            records.append(LifetimeRecord.exact(f"g{g}u{i}", g, float(ti)))
        n_surv = n_g - observed[g]
        if n_surv > 0:
            if t_c > 0.0:  # survival past age zero carries no information
                records.append(LifetimeRecord.right(f"g{g}cens", g, t_c, multiplicity=n_surv))
            for i in range(n_surv):
                risk.append(RiskSetEntry(f"g{g}s{i}", g, t_c))
    return SimulatedDataset(records, risk, true_counts, observed, groups)


def _oracle_draws(model: HierLifetimeModel, group_params) -> PosteriorDraws:
    """A single 'draw' holding the true parameters (known-theta mode)."""
    t_p, sigma = group_params
    row = np.concatenate([[np.median(t_p), 1.0, np.median(sigma), 1.0], t_p, sigma])
    return PosteriorDraws(row[None, :], model.param_names,
                          np.zeros(1, dtype=int), np.zeros(1, dtype=int), np.ones(1))


DESK_SAMPLER = SamplerConfig(chains=4, warmup=1000, keep=1000)
PAPER_SAMPLER = SamplerConfig(chains=4, warmup=2500, keep=2500)


def run_coverage(cfg: SimConfig, sampler_cfg: Optional[SamplerConfig] = None,
                 levels: Sequence[float] = (0.90, 0.95), rhat_limit: float = 1.1,
                 aggregate_method: str = "poisson", oracle: bool = False,
                 track_groups: bool = False, label: str = "") -> CoverageReport:
    """Full coverage experiment for one factor-level combination.

    A lower bound covers when ``bound <= true count``; an upper bound when
    ``true count <= bound``.  Single-group coverage is the per-group mean
    across datasets averaged over the G groups (pooling all (dataset, group)
    indicators first is a noted alternative).  Datasets whose fit has any
    rhat above ``rhat_limit`` are excluded and counted.
    """
    sampler_cfg = sampler_cfg or DESK_SAMPLER
    t_c, t_w = calibrate_censor_times(cfg)
    window = PredictionWindow(t_w - t_c)
    sides = ("lower", "upper")
    single = {(s, lv): [] for s in sides for lv in levels}   # (n_used, G) indicator rows
    multi = {(s, lv): [] for s in sides for lv in levels}
    excluded = 0
    for i in range(cfg.n_datasets):
        rng = _stream(cfg.seed, _DATA_STREAM, i)
        group_params = draw_group_params(cfg, rng)
        ds = simulate_dataset(cfg, group_params, t_c, t_w, rng)
        model = HierLifetimeModel(ds.records, p=cfg.p, groups=ds.groups)
        if oracle:
            draws = _oracle_draws(model, group_params)
        else:
            scfg = replace(sampler_cfg, seed=_derived_seed(cfg.seed, _FIT_STREAM, i))
            draws = fit(model, scfg)
            worst = max(rhat(draws).values())
            if worst > rhat_limit:
                excluded += 1
                continue
        total_true = int(ds.true_counts.sum())
        group_pds = [predictive_cdf(model, draws, ds.risk, window, scope=g, method="exact")
                     for g in ds.groups]
        all_pd = predictive_cdf(model, draws, ds.risk, window, scope="all",
                                method=aggregate_method)
        for side in sides:
            for lv in levels:
                hits = []
                for g, pd in zip(ds.groups, group_pds):
                    b = one_sided_bound(pd, lv, side)
                    hits.append(b <= ds.true_counts[g] if side == "lower"
                                else ds.true_counts[g] <= b)
                single[(side, lv)].append(hits)
                b = one_sided_bound(all_pd, lv, side)
                multi[(side, lv)].append(b <= total_true if side == "lower"
                                         else total_true <= b)
    n_used = cfg.n_datasets - excluded
    rows = []
    for side in sides:
        for lv in levels:
            ind = np.asarray(single[(side, lv)], dtype=float)
            cov = float(ind.mean(axis=0).mean()) if ind.size else float("nan")
            rows.append(CoverageRow("single-group", side, lv, cov,
                                    _mc_se(cov, n_used), n_used, excluded))
            indm = np.asarray(multi[(side, lv)], dtype=float)
            covm = float(indm.mean()) if indm.size else float("nan")
            rows.append(CoverageRow("multi-group", side, lv, covm,
                                    _mc_se(covm, n_used), n_used, excluded))
            if track_groups:
                for gi, g in enumerate(range(cfg.G)):
                    covg = float(ind[:, gi].mean()) if ind.size else float("nan")
                    rows.append(CoverageRow(f"group:{g}", side, lv, covg,
                                            _mc_se(covg, n_used), n_used, excluded))
    return CoverageReport(rows, t_c, t_w, excluded, label=label)


def _mc_se(p: float, n: int) -> float:
    if not (n > 0) or math.isnan(p):
        return float("nan")
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)


def run_unbalanced(levels: Sequence[float] = (4, 5, 6, 7, 8, 9, 10, 15, 20, 25,
                                              30, 35, 40, 45, 50, 55),
                   fixed_r: float = 6.0, n_datasets: int = 100,
                   sampler_cfg: Optional[SamplerConfig] = None, seed: int = 0,
                   tp_interval=(4.0, 8.0), sigma_interval=(0.50, 0.75),
                   p_f: float = 0.05, p_delta: float = 0.5,
                   levels_conf: Sequence[float] = (0.90, 0.95),
                   oracle: bool = False) -> list:
    """Unbalanced design: one group fixed at E(r)=6, the rest swept over levels.

    Returns (level, CoverageReport) pairs; the fixed group's own coverage is
    reported under scope "group:0".
    """
    out = []
    for idx, lev in enumerate(levels):
        per_group = (float(fixed_r),) + (float(lev),) * 4
        cfg = SimConfig(G=5, expected_r=float(fixed_r + 4 * lev), p_f=p_f,
                        p_delta=p_delta, tp_interval=tuple(tp_interval),
                        sigma_interval=tuple(sigma_interval),
                        n_datasets=n_datasets, seed=_derived_seed(seed, 100, idx),
                        per_group_r=per_group)
        report = run_coverage(cfg, sampler_cfg=sampler_cfg, levels=levels_conf,
                              track_groups=True, oracle=oracle,
                              label=f"unbalanced-E{lev:g}")
        out.append((float(lev), report))
    return out


PRESETS = {
    # desk-scale presets (n_datasets=100); paper-scale runs use 300
    "G5-baseline": SimConfig(G=5, expected_r=125.0, p_f=0.20, p_delta=0.20,
                             tp_interval=(4.0, 8.0), sigma_interval=(0.50, 0.75),
                             n_datasets=100, seed=20260809),
    "G5-sparse": SimConfig(G=5, expected_r=25.0, p_f=0.05, p_delta=0.20,
                           tp_interval=(4.0, 8.0), sigma_interval=(0.50, 0.75),
                           n_datasets=100, seed=20260809),
    "G10-baseline": SimConfig(G=10, expected_r=250.0, p_f=0.20, p_delta=0.20,
                              tp_interval=(10.0, 14.0), sigma_interval=(0.15, 0.40),
                              n_datasets=100, seed=20260809),
}


def factor_grid(n_datasets: int = 300, seed: int = 0):
    """The full factor grid at paper scale; yields one SimConfig per cell."""
    er_levels = {5: (25.0, 50.0, 75.0, 100.0, 125.0),
                 10: (50.0, 100.0, 150.0, 200.0, 250.0)}
    idx = 0
    for G in (5, 10):
        for er in er_levels[G]:
            for p_f in (0.01, 0.05, 0.10, 0.20):
                for p_delta in (0.10, 0.20):
                    for tp in ((4.0, 8.0), (10.0, 14.0)):
                        for sg in ((0.15, 0.40), (0.50, 0.75)):
                            yield SimConfig(G=G, expected_r=er, p_f=p_f,
                                            p_delta=p_delta, tp_interval=tp,
                                            sigma_interval=sg,
                                            n_datasets=n_datasets,
                                            seed=_derived_seed(seed, 200, idx))
                            idx += 1
