"""Command-line workflows: fit, predict, roll, simulate, diagnose.

All workflows are pure functions of (input files, config, seed): identical
inputs produce byte-identical outputs.  Errors exit nonzero with a
machine-readable category on stderr (``error:<category>: message``).
"""

from __future__ import annotations

import argparse
import datetime as dt
import sys
from pathlib import Path

import numpy as np

from . import dataio
from .covariates import SeasonalCdModel, SeasonalPhModel, seasonal_predict
from .distributions import Family
from .errors import (
    CalibrationError,
    ConfigError,
    ConvergenceError,
    DataError,
    DomainError,
    FailcastError,
    InitializationError,
)
from .mcmc import PosteriorDraws, ess, fit, rhat
from .models import FlatLifetimeModel, HierGlfpModel, HierLifetimeModel
from .nonparametric import kaplan_meier, probability_plot_data
from .prediction import (
    PredictionWindow,
    point_prediction,
    prediction_interval,
    predictive_cdf,
    roll_risk_set,
)
from .simulation import DESK_SAMPLER, PRESETS, run_coverage, run_unbalanced

_PREDICTION_HEADER = ["scope", "window_start", "window_end", "lower", "median",
                      "mean", "upper", "alpha", "method", "B"]

_FAMILY_BY_KIND = {
    "weibull": Family.SEV,
    "frechet": Family.LEV,
    "lognormal": Family.NORMAL,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="failcast",
        description="Bayesian within-sample failure forecasting for field data",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("fit", "fit a lifetime model and persist posterior draws"),
        ("predict", "predictive intervals for future failure counts"),
        ("roll", "rolling-window predictions with risk-set updates"),
        ("simulate", "coverage-probability experiment"),
        ("diagnose", "Kaplan-Meier and probability-plot data files"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--data", help="input CSV (lifetime or warranty schema)")
        p.add_argument("--freeze-date", help="ISO data-freeze date")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, help="override the configured seed")
        p.add_argument("--preset", help="simulation preset name")
        p.add_argument("--method", choices=["exact", "poisson"],
                       help="override the prediction method")
        p.add_argument("--alpha", type=float, help="override the interval alpha")
    return parser


def _load_config(args) -> dataio.RunConfig:
    cfg = dataio.load_config(args.config) if args.config else dataio.RunConfig()
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.sampler = dataio.SamplerConfig(
            chains=cfg.sampler.chains, warmup=cfg.sampler.warmup,
            keep=cfg.sampler.keep, seed=args.seed,
            algorithm=cfg.sampler.algorithm, thin=cfg.sampler.thin)
    if args.method:
        cfg.prediction.method = args.method
    if args.alpha is not None:
        if not (0.0 < args.alpha < 1.0):
            raise ConfigError("--alpha must lie in (0, 1)")
        cfg.prediction.alpha = args.alpha
    if args.freeze_date:
        cfg.freeze_date = args.freeze_date
    return cfg


def _require_data(args) -> str:
    if not args.data:
        raise ConfigError("--data is required for this command")
    return args.data


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _is_seasonal(cfg) -> bool:
    return cfg.model.kind in ("cd", "ph")


def _build_lifetime_model(cfg: dataio.RunConfig, records):
    m = cfg.model
    if m.kind == "glfp":
        return HierGlfpModel(records, p1=m.p1, p2=m.p2, priors=cfg.priors or None)
    family = _FAMILY_BY_KIND[m.kind]
    if m.hierarchy:
        return HierLifetimeModel(records, p=m.p, family=family, priors=cfg.priors or None)
    return FlatLifetimeModel(records, p=m.p, family=family,
                             priors=cfg.priors or None, pool=m.pool)


def _build_seasonal_models(cfg: dataio.RunConfig, clusters):
    cls = SeasonalCdModel if cfg.model.kind == "cd" else SeasonalPhModel
    return {cluster: cls(recs, hists, pin_first_month=cfg.model.pin_first_month,
                         priors=cfg.priors or None)
            for cluster, (recs, hists) in sorted(clusters.items())}


def _freeze(cfg) -> dt.date:
    if not cfg.freeze_date:
        raise ConfigError("a freeze date is required (config freeze_date or --freeze-date)")
    return dt.date.fromisoformat(cfg.freeze_date)


def cmd_fit(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    data_path = _require_data(args)
    if _is_seasonal(cfg):
        clusters = dataio.load_warranty(data_path, _freeze(cfg))
        models = _build_seasonal_models(cfg, clusters)
        rhat_rows = []
        for cluster, model in models.items():
            draws = fit(model, cfg.sampler)
            draws.to_csv(out / f"draws_{cluster}.csv")
            r, e = rhat(draws), ess(draws)
            rhat_rows += [(cluster, n, r[n], e[n]) for n in draws.names]
        dataio.write_csv(out / "rhat.csv", ["cluster", "param", "rhat", "ess"], rhat_rows)
        _report_convergence(rhat_rows, col=2)
        return 0
    loaded = dataio.load_records(data_path, cfg.freeze_date)
    _print_load_summary(loaded.summary)
    model = _build_lifetime_model(cfg, loaded.records)
    draws = fit(model, cfg.sampler)
    draws.to_csv(out / "draws.csv")
    r, e = rhat(draws), ess(draws)
    rows = [(n, r[n], e[n]) for n in draws.names]
    dataio.write_csv(out / "rhat.csv", ["param", "rhat", "ess"], rows)
    _report_convergence([(None, *row) for row in rows], col=2)
    return 0


def _print_load_summary(summary: dict) -> None:
    by_censor = " ".join(f"{k}={v}" for k, v in summary["by_censor"].items())
    by_group = " ".join(f"{k}={v}" for k, v in summary["by_group"].items())
    print(f"loaded {summary['n_rows']} rows / {summary['n_units']} units "
          f"({by_censor}); groups: {by_group}; at risk: {summary['n_at_risk']}")


def _report_convergence(rows, col: int) -> None:
    worst = max((row[col] for row in rows), default=float("nan"))
    print(f"max rhat: {worst:.4f}")
    if worst > 1.05:
        print("warning: rhat above 1.05; treat the fit as unconverged", file=sys.stderr)


def _load_draws(path_text, what: str) -> PosteriorDraws:
    if not path_text:
        raise ConfigError(f"{what} requires a persisted draws file "
                          f"(config prediction.draws / roll.draws)")
    try:
        return PosteriorDraws.from_csv(path_text)
    except FileNotFoundError:
        raise DataError(f"draws file not found: {path_text}") from None


def _check_draws_match(draws: PosteriorDraws, model) -> None:
    if list(draws.names) != list(model.param_names):
        raise ConfigError(
            "draws file does not match the configured model "
            f"(file params {draws.names[:4]}..., model {model.param_names[:4]}...)"
        )


def _prediction_row(scope, start, end, pd_dist, alpha):
    lo, hi = prediction_interval(pd_dist, alpha)
    point = point_prediction(pd_dist)
    return [scope, float(start), float(end), lo, point.median, point.mean, hi,
            float(alpha), pd_dist.method, pd_dist.n_draws]


def cmd_predict(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    data_path = _require_data(args)
    alpha = cfg.prediction.alpha
    rows = []
    if _is_seasonal(cfg):
        clusters = dataio.load_warranty(data_path, _freeze(cfg))
        models = _build_seasonal_models(cfg, clusters)
        months = cfg.prediction.months or 12
        freeze = _freeze(cfg)
        for cluster, model in models.items():
            draws = _load_draws(_cluster_draws_path(cfg.prediction.draws, cluster),
                                "predict")
            _check_draws_match(draws, model)
            hists = clusters[cluster][1]
            in_service = [rec.censor.value == "right" for rec in clusters[cluster][0]]
            for k in range(months):
                w_start = _add_months(freeze, k)
                w_end = _add_months(freeze, k + 1)
                pd_dist = seasonal_predict(model, draws, hists, freeze, w_start, w_end,
                                           in_service=in_service, scope=cluster)
                rows.append(_prediction_row(cluster, (w_start - freeze).days,
                                            (w_end - freeze).days, pd_dist, alpha))
        dataio.write_csv(out / "predictions.csv", _PREDICTION_HEADER, rows)
        return 0
    loaded = dataio.load_records(data_path, cfg.freeze_date)
    model = _build_lifetime_model(cfg, loaded.records)
    draws = _load_draws(cfg.prediction.draws, "predict")
    _check_draws_match(draws, model)
    windows = cfg.prediction.windows or [{"delta_t": 1.0, "steps": 1}]
    scopes = ["all", *model.groups] if len(model.groups) > 1 else list(model.groups)
    for w in windows:
        for k in range(1, w["steps"] + 1):
            delta = w["delta_t"] * k
            window = PredictionWindow(delta)
            for scope in scopes:
                pd_dist = predictive_cdf(model, draws, loaded.risk, window,
                                         scope=scope, method=cfg.prediction.method)
                rows.append(_prediction_row(scope, 0.0, delta, pd_dist, alpha))
    dataio.write_csv(out / "predictions.csv", _PREDICTION_HEADER, rows)
    return 0


def _cluster_draws_path(template, cluster):
    if template and "{cluster}" in template:
        return template.replace("{cluster}", str(cluster))
    if template:
        p = Path(template)
        return str(p.parent / f"draws_{cluster}.csv")
    return None


def _add_months(day: dt.date, months: int) -> dt.date:
    month_index = day.month - 1 + months
    year = day.year + month_index // 12
    month = month_index % 12 + 1
    # clamp to the last valid day of the target month
    for dom in range(min(day.day, 31), 27, -1):
        try:
            return dt.date(year, month, dom)
        except ValueError:
            continue
    return dt.date(year, month, 28)


def cmd_roll(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    data_path = _require_data(args)
    alpha = cfg.prediction.alpha
    events = dataio.load_events(cfg.roll.events) if cfg.roll.events else {}
    rows = []
    if _is_seasonal(cfg):
        clusters = dataio.load_warranty(data_path, _freeze(cfg))
        models = _build_seasonal_models(cfg, clusters)
        freeze = _freeze(cfg)
        for cluster, model in models.items():
            draws = _load_draws(_cluster_draws_path(cfg.roll.draws, cluster), "roll")
            _check_draws_match(draws, model)
            recs, hists = clusters[cluster]
            in_service = np.array([rec.censor.value == "right" for rec in recs])
            ids = [h.unit_id for h in hists]
            for k in range(cfg.roll.steps):
                w_start = _add_months(freeze, k)
                w_end = _add_months(freeze, k + 1)
                pd_dist = seasonal_predict(model, draws, hists, freeze, w_start, w_end,
                                           in_service=in_service, scope=cluster)
                rows.append(_prediction_row(cluster, (w_start - freeze).days,
                                            (w_end - freeze).days, pd_dist, alpha))
                for unit_id, _kind in events.get(k + 1, []):
                    if unit_id in ids:
                        in_service = in_service.copy()
                        in_service[ids.index(unit_id)] = False
        dataio.write_csv(out / "predictions.csv", _PREDICTION_HEADER, rows)
        return 0
    loaded = dataio.load_records(data_path, cfg.freeze_date)
    model = _build_lifetime_model(cfg, loaded.records)
    draws = _load_draws(cfg.roll.draws, "roll")
    _check_draws_match(draws, model)
    risk = loaded.risk
    step = cfg.roll.step_length
    scopes = ["all", *model.groups] if len(model.groups) > 1 else list(model.groups)
    window = PredictionWindow(step)
    for k in range(cfg.roll.steps):
        for scope in scopes:
            pd_dist = predictive_cdf(model, draws, risk, window,
                                     scope=scope, method=cfg.prediction.method)
            rows.append(_prediction_row(scope, k * step, (k + 1) * step, pd_dist, alpha))
        risk = roll_risk_set(risk, events.get(k + 1, []), step)
    dataio.write_csv(out / "predictions.csv", _PREDICTION_HEADER, rows)
    n_active = sum(e.in_service for e in risk)
    print(f"rolled {cfg.roll.steps} windows of {step}; {n_active} units still in service")
    return 0


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    preset_name = args.preset or cfg.simulate.preset
    sampler = cfg.simulate.sampler or DESK_SAMPLER
    rows = []
    header = ["scenario", "scope", "side", "level", "coverage", "mc_se",
              "n_datasets", "n_excluded"]
    if cfg.simulate.unbalanced:
        results = run_unbalanced(levels=cfg.simulate.levels,
                                 n_datasets=cfg.simulate.n_datasets or 100,
                                 sampler_cfg=sampler,
                                 seed=cfg.simulate.seed if cfg.simulate.seed is not None else cfg.seed)
        for level, report in results:
            for row in report.rows:
                rows.append([report.label, row.scope, row.side, row.level,
                             row.coverage, row.mc_se, row.n_datasets, row.n_excluded])
    else:
        if not preset_name:
            raise ConfigError("simulate needs --preset or config simulate.preset")
        if preset_name not in PRESETS:
            raise ConfigError(f"unknown preset {preset_name!r}; "
                              f"available: {sorted(PRESETS)}")
        sim_cfg = PRESETS[preset_name]
        overrides = {}
        if cfg.simulate.n_datasets is not None:
            overrides["n_datasets"] = cfg.simulate.n_datasets
        if cfg.simulate.seed is not None:
            overrides["seed"] = cfg.simulate.seed
        if overrides:
            from dataclasses import replace
            sim_cfg = replace(sim_cfg, **overrides)
        report = run_coverage(sim_cfg, sampler_cfg=sampler, label=preset_name)
        for row in report.rows:
            rows.append([preset_name, row.scope, row.side, row.level,
                         row.coverage, row.mc_se, row.n_datasets, row.n_excluded])
        print(f"calibrated t_c={report.t_c!r} t_w={report.t_w!r}; "
              f"excluded {report.n_excluded} dataset(s)")
    dataio.write_csv(out / "coverage.csv", header, rows)
    return 0


def cmd_diagnose(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    data_path = _require_data(args)
    loaded = dataio.load_records(data_path, cfg.freeze_date)
    _print_load_summary(loaded.summary)
    records = loaded.records
    if cfg.diagnose.group is not None:
        records = [r for r in records if str(r.group_id) == cfg.diagnose.group]
        if not records:
            raise DataError(f"no records in group {cfg.diagnose.group!r}")
    km = kaplan_meier(records, conf_level=cfg.diagnose.band_level)
    dataio.write_csv(
        out / "km.csv",
        ["time", "survival", "lower", "upper", "at_risk", "events", "adjusted"],
        [[km.times[i], km.survival[i], km.lower[i], km.upper[i],
          km.at_risk[i], km.events[i], km.adjusted_for_delayed_entry]
         for i in range(km.times.size)],
    )
    family = _FAMILY_BY_KIND.get(cfg.model.kind, Family.SEV)
    model = None
    draws = None
    group = None
    if cfg.diagnose.draws:
        model = _build_lifetime_model(cfg, loaded.records)
        draws = _load_draws(cfg.diagnose.draws, "diagnose")
        _check_draws_match(draws, model)
        group = cfg.diagnose.group if cfg.diagnose.group is not None else model.groups[0]
    plot = probability_plot_data(family, km=km, model=model, draws=draws, group=group,
                                 band_level=cfg.diagnose.band_level)
    dataio.write_csv(out / "probplot_points.csv", ["log_time", "quantile_scale"],
                     list(zip(plot.point_log_t, plot.point_quantile)))
    if plot.grid_times.size:
        dataio.write_csv(out / "probplot_band.csv",
                         ["time", "lower", "median", "upper"],
                         list(zip(plot.grid_times, plot.band_lower,
                                  plot.band_median, plot.band_upper)))
    return 0


_ERROR_CATEGORIES = [
    (ConfigError, "config", 2),
    (DataError, "data", 3),
    ((ConvergenceError, InitializationError, CalibrationError), "convergence", 4),
    (DomainError, "domain", 2),
    (FileNotFoundError, "io", 3),
    (FailcastError, "internal", 1),
]


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "fit": cmd_fit,
        "predict": cmd_predict,
        "roll": cmd_roll,
        "simulate": cmd_simulate,
        "diagnose": cmd_diagnose,
    }
    try:
        return handlers[args.command](args)
    except Exception as exc:  # map to machine-readable categories
        for types, category, code in _ERROR_CATEGORIES:
            if isinstance(exc, types):
                print(f"error:{category}: {exc}", file=sys.stderr)
                return code
        raise


if __name__ == "__main__":
    sys.exit(main())
