"""Bayesian within-sample failure forecasting for reliability field data.

Fits hierarchical lifetime models (Weibull/Frechet/lognormal families, plus
a two-failure-mode mixture) to censored and truncated field data, and turns
posterior draws into calibrated prediction intervals for the number of
future failures — per subpopulation or aggregated — with a simulation
harness that measures the frequentist coverage of those intervals.
"""

from .counts import (
    CountDistribution,
    binomial_quantile,
    count_quantile,
    poisson_approx_quantiles,
    poisson_binomial_cdf,
)
from .covariates import (
    CovariateHistory,
    SeasonalCdModel,
    SeasonalParams,
    SeasonalPhModel,
    cd_loglik,
    damage,
    damage_daily,
    ph_cum_hazard,
    ph_hazard,
    ph_loglik,
    seasonal_predict,
)
from .distributions import (
    Family,
    Glfp,
    GlfpParams,
    LlsParams,
    LogLocationScale,
    QuantileParam,
    glfp_cdf,
    glfp_logpdf,
    lls_cdf,
    lls_logpdf,
    lls_quantile,
    mu_from_quantile,
    std_cdf,
    std_quantile,
)
from .likelihood import (
    CensorCode,
    CompiledDataset,
    LifetimeRecord,
    dataset_loglik,
    record_loglik,
)
from .mcmc import (
    PosteriorDraws,
    SamplerConfig,
    ess,
    fit,
    initialize_chains,
    rhat,
    sample,
)
from .models import (
    FlatLifetimeModel,
    HierGlfpModel,
    HierGlfpParams,
    HierLifetimeModel,
    HierWeibullParams,
    log_prior,
)
from .nonparametric import (
    KaplanMeierEstimate,
    ProbabilityPlotData,
    kaplan_meier,
    probability_plot_data,
)
from .prediction import (
    PointPrediction,
    PredictionWindow,
    PredictiveDistribution,
    RiskSetEntry,
    cond_fail_prob,
    one_sided_bound,
    point_prediction,
    prediction_interval,
    predictive_cdf,
    roll_risk_set,
    simulate_predictand,
)
from .priors import (
    HalfCauchy,
    HalfT,
    LogitNormal,
    LognormalInterval,
    LognormalTrunc01,
    Normal,
    interval_to_lognormal,
)
from .simulation import (
    DESK_SAMPLER,
    PAPER_SAMPLER,
    PRESETS,
    CoverageReport,
    CoverageRow,
    SimConfig,
    calibrate_censor_times,
    draw_group_params,
    factor_grid,
    run_coverage,
    run_unbalanced,
    simulate_dataset,
)

__version__ = "0.1.0"
