"""CSV ingestion, run configuration, and result serialization.

The lifetime CSV schema has one row per unit (or per collapsed multiple):

    unit_id, group_id, censor, event_time | (t0, t1), entry_date | entry_time,
    trunc_left?, multiplicity?, cluster?, country?

Times are operating ages.  When only ``entry_date`` is given for a
right-censored unit, its age is derived against the declared data-freeze
date.  Validation is strict and reports the offending line number.

Run configurations are JSON with a fixed vocabulary; unknown keys are
rejected so typos cannot silently fall back to defaults.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .covariates import CovariateHistory
from .errors import ConfigError, DataError
from .likelihood import CensorCode, LifetimeRecord
from .mcmc import SamplerConfig
from .prediction import RiskSetEntry
from .priors import (
    HalfCauchy,
    HalfT,
    LogitNormal,
    LognormalInterval,
    LognormalTrunc01,
    Normal,
)

__all__ = [
    "LoadResult",
    "load_records",
    "load_events",
    "load_warranty",
    "RunConfig",
    "load_config",
    "parse_prior",
    "write_csv",
]

_LIFETIME_COLUMNS = {
    "unit_id", "group_id", "censor", "event_time", "t0", "t1",
    "entry_date", "entry_time", "trunc_left", "multiplicity",
    "cluster", "country",
}
_CENSOR_MAP = {c.value: c for c in CensorCode}


def _parse_date(text: str, where: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError:
        raise DataError(f"{where}: invalid ISO date {text!r}") from None


def _parse_float(text: str, where: str, name: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise DataError(f"{where}: column {name} is not a number: {text!r}") from None


@dataclass
class LoadResult:
    records: list
    risk: list
    summary: dict


def load_records(path, freeze_date=None) -> LoadResult:
    """Read a lifetime CSV into records plus the surviving-unit risk set."""
    if isinstance(freeze_date, str):
        freeze_date = _parse_date(freeze_date, "freeze date")
    records, risk = [], []
    by_censor, by_group = {}, {}
    total_units = 0
    with open(path, "r", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"{path}: empty file (a header row is required)")
        cols = [c.strip() for c in reader.fieldnames]
        unknown = set(cols) - _LIFETIME_COLUMNS
        if unknown:
            raise DataError(f"{path}: unknown columns {sorted(unknown)}")
        if "unit_id" not in cols or "censor" not in cols:
            raise DataError(f"{path}: unit_id and censor columns are required")
        for line, row in enumerate(reader, start=2):
            where = f"{path}:{line}"
            get = lambda c: (row.get(c) or "").strip()
            unit = get("unit_id")
            if not unit:
                raise DataError(f"{where}: empty unit_id")
            group = get("group_id") or "all"
            censor_text = get("censor").lower()
            if censor_text not in _CENSOR_MAP:
                raise DataError(f"{where}: unknown censor code {censor_text!r}")
            censor = _CENSOR_MAP[censor_text]
            mult = 1
            if get("multiplicity"):
                mult_f = _parse_float(get("multiplicity"), where, "multiplicity")
                if mult_f < 1 or mult_f != int(mult_f):
                    raise DataError(f"{where}: multiplicity must be a positive integer")
                mult = int(mult_f)
            trunc = None
            if get("trunc_left"):
                trunc = _parse_float(get("trunc_left"), where, "trunc_left")
                if trunc < 0:
                    raise DataError(f"{where}: negative trunc_left")
                if trunc == 0.0:
                    trunc = None

            entry_age = None
            if get("entry_date"):
                if freeze_date is None:
                    raise DataError(f"{where}: entry_date given but no freeze date declared")
                entry = _parse_date(get("entry_date"), where)
                if entry > freeze_date:
                    raise DataError(f"{where}: entry_date {entry} is after the freeze date")
                entry_age = float((freeze_date - entry).days)
            elif get("entry_time"):
                entry_age = _parse_float(get("entry_time"), where, "entry_time")

            time = None
            interval = None
            if censor in (CensorCode.EXACT, CensorCode.RIGHT):
                if get("event_time"):
                    time = _parse_float(get("event_time"), where, "event_time")
                elif censor is CensorCode.RIGHT and entry_age is not None:
                    time = entry_age
                else:
                    raise DataError(f"{where}: event_time required for {censor_text} records")
                if time <= 0:
                    raise DataError(f"{where}: nonpositive time {time}")
            elif censor is CensorCode.LEFT:
                t1 = get("t1") or get("event_time")
                if not t1:
                    raise DataError(f"{where}: t1 required for left-censored records")
                interval = (0.0, _parse_float(t1, where, "t1"))
            else:
                if not (get("t0") and get("t1")):
                    raise DataError(f"{where}: t0 and t1 required for interval records")
                interval = (_parse_float(get("t0"), where, "t0"),
                            _parse_float(get("t1"), where, "t1"))
            if interval is not None:
                if interval[0] < 0 or interval[1] <= 0:
                    raise DataError(f"{where}: negative interval endpoint")
                if censor is CensorCode.INTERVAL and not interval[0] < interval[1]:
                    raise DataError(f"{where}: reversed interval {interval}")
            try:
                rec = LifetimeRecord(unit, group, censor, time=time,
                                     interval=interval, trunc_left=trunc,
                                     multiplicity=mult)
            except DataError as exc:
                raise DataError(f"{where}: {exc}") from None
            records.append(rec)
            by_censor[censor.value] = by_censor.get(censor.value, 0) + mult
            by_group[group] = by_group.get(group, 0) + mult
            total_units += mult
            if censor is CensorCode.RIGHT:
                if mult == 1:
                    risk.append(RiskSetEntry(unit, group, time))
                else:
                    risk.extend(RiskSetEntry(f"{unit}#{i}", group, time)
                                for i in range(mult))
    summary = {
        "n_rows": len(records),
        "n_units": total_units,
        "by_censor": dict(sorted(by_censor.items())),
        "by_group": dict(sorted(by_group.items(), key=lambda kv: str(kv[0]))),
        "n_at_risk": len(risk),
    }
    return LoadResult(records, risk, summary)


def load_events(path) -> dict:
    """Event schedule CSV (step, unit_id, kind) -> {step: [(unit, kind), ...]}."""
    out: dict = {}
    with open(path, "r", newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"step", "unit_id", "kind"}
        if reader.fieldnames is None or set(reader.fieldnames) != required:
            raise DataError(f"{path}: event schedule needs exactly columns {sorted(required)}")
        for line, row in enumerate(reader, start=2):
            try:
                step = int(row["step"])
            except ValueError:
                raise DataError(f"{path}:{line}: step must be an integer") from None
            kind = row["kind"].strip().lower()
            if kind not in ("failure", "retirement"):
                raise DataError(f"{path}:{line}: unknown event kind {kind!r}")
            out.setdefault(step, []).append((row["unit_id"].strip(), kind))
    return out


_COUNTRY_CANADA = {"ca", "can", "canada"}
_COUNTRY_US = {"us", "usa", "united states"}


def load_warranty(path, freeze_date) -> dict:
    """Warranty CSV (unit_id, cluster, country, entry_date, end_date, delta).

    Returns {cluster: (records, histories)}; delta=1 marks a return on
    end_date, delta=0 a right-censored unit (still under observation).
    """
    if isinstance(freeze_date, str):
        freeze_date = _parse_date(freeze_date, "freeze date")
    required = {"unit_id", "cluster", "country", "entry_date", "end_date", "delta"}
    out: dict = {}
    with open(path, "r", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or set(reader.fieldnames) != required:
            raise DataError(f"{path}: warranty schema needs exactly columns {sorted(required)}")
        for line, row in enumerate(reader, start=2):
            where = f"{path}:{line}"
            entry = _parse_date(row["entry_date"], where)
            end = _parse_date(row["end_date"], where)
            if end > freeze_date:
                raise DataError(f"{where}: end_date after the freeze date")
            d_n = (end - entry).days
            if d_n < 1:
                raise DataError(f"{where}: end_date must be at least one day after entry_date")
            country = row["country"].strip().lower()
            if country in _COUNTRY_CANADA:
                canada = True
            elif country in _COUNTRY_US:
                canada = False
            else:
                raise DataError(f"{where}: unknown country {row['country']!r}")
            delta = row["delta"].strip()
            if delta not in ("0", "1"):
                raise DataError(f"{where}: delta must be 0 or 1")
            cluster = row["cluster"].strip()
            hist = CovariateHistory(row["unit_id"].strip(), entry, d_n, canada)
            rec = (LifetimeRecord.exact(hist.unit_id, cluster, float(d_n))
                   if delta == "1"
                   else LifetimeRecord.right(hist.unit_id, cluster, float(d_n)))
            recs, hists = out.setdefault(cluster, ([], []))
            recs.append(rec)
            hists.append(hist)
    return out


# ---------------------------------------------------------------------------
# run configuration

_PRIOR_TYPES = {
    "lognormal_interval": (LognormalInterval, ("lower", "upper")),
    "normal": (Normal, ("mean", "sd")),
    "half_t": (HalfT, ("df", "scale")),
    "half_cauchy": (HalfCauchy, ("scale",)),
    "lognormal_trunc01": (LognormalTrunc01, ("lower", "upper")),
    "logit_normal": (LogitNormal, ("mean", "sd")),
}


def parse_prior(spec: dict, where: str = "prior"):
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError(f"{where}: prior must be an object with a 'type' key")
    kind = spec["type"]
    if kind not in _PRIOR_TYPES:
        raise ConfigError(f"{where}: unknown prior type {kind!r}")
    cls, fields = _PRIOR_TYPES[kind]
    extra = set(spec) - {"type", *fields}
    missing = set(fields) - set(spec)
    if extra or missing:
        raise ConfigError(f"{where}: prior {kind} needs keys {sorted(fields)}; "
                          f"missing {sorted(missing)}, unexpected {sorted(extra)}")
    return cls(**{f: float(spec[f]) for f in fields})


def _expect_keys(d: dict, allowed: set, where: str):
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)} (allowed: {sorted(allowed)})")


@dataclass
class ModelConfig:
    kind: str = "weibull"
    hierarchy: bool = True
    pool: bool = False
    p: float = 0.05
    p1: float = 0.50
    p2: float = 0.20
    pin_first_month: bool = False


@dataclass
class PredictionConfig:
    alpha: float = 0.05
    method: str = "poisson"
    windows: list = field(default_factory=list)   # [{"delta_t": d, "steps": k}]
    months: int = 0                               # seasonal models: months ahead
    draws: Optional[str] = None                   # path to a persisted draws file


@dataclass
class RollConfig:
    steps: int = 26
    step_length: float = 7.0
    events: Optional[str] = None
    draws: Optional[str] = None


@dataclass
class SimulateConfig:
    preset: Optional[str] = None
    n_datasets: Optional[int] = None
    seed: Optional[int] = None
    unbalanced: bool = False
    levels: list = field(default_factory=lambda: [4, 10, 25, 55])
    sampler: Optional[SamplerConfig] = None


@dataclass
class DiagnoseConfig:
    group: Optional[str] = None
    grid_points: int = 50
    band_level: float = 0.90
    draws: Optional[str] = None


@dataclass
class RunConfig:
    seed: int = 0
    time_unit: str = "days"
    freeze_date: Optional[str] = None
    model: ModelConfig = field(default_factory=ModelConfig)
    priors: dict = field(default_factory=dict)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    prediction: PredictionConfig = field(default_factory=PredictionConfig)
    roll: RollConfig = field(default_factory=RollConfig)
    simulate: SimulateConfig = field(default_factory=SimulateConfig)
    diagnose: DiagnoseConfig = field(default_factory=DiagnoseConfig)


_MODEL_KINDS = {"weibull", "frechet", "lognormal", "glfp", "cd", "ph"}


def _build_sampler(d: dict, where: str, default_seed: int) -> SamplerConfig:
    _expect_keys(d, {"chains", "warmup", "keep", "seed", "thin", "algorithm"}, where)
    try:
        return SamplerConfig(
            chains=int(d.get("chains", 4)),
            warmup=int(d.get("warmup", 2500)),
            keep=int(d.get("keep", 2500)),
            seed=int(d.get("seed", default_seed)),
            algorithm=d.get("algorithm", "adaptive_rwm"),
            thin=int(d.get("thin", 1)),
        )
    except ConfigError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def load_config(path) -> RunConfig:
    """Parse and validate a JSON run configuration."""
    try:
        with open(path, "r") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")
    _expect_keys(raw, {"seed", "time_unit", "freeze_date", "model", "priors",
                       "sampler", "prediction", "roll", "simulate", "diagnose"}, path)
    cfg = RunConfig()
    cfg.seed = int(raw.get("seed", 0))
    cfg.time_unit = str(raw.get("time_unit", "days"))
    cfg.freeze_date = raw.get("freeze_date")

    m = raw.get("model", {})
    _expect_keys(m, {"kind", "hierarchy", "pool", "p", "p1", "p2", "pin_first_month"},
                 f"{path}: model")
    kind = m.get("kind", "weibull")
    if kind not in _MODEL_KINDS:
        raise ConfigError(f"{path}: model.kind must be one of {sorted(_MODEL_KINDS)}")
    cfg.model = ModelConfig(
        kind=kind,
        hierarchy=bool(m.get("hierarchy", True)),
        pool=bool(m.get("pool", False)),
        p=float(m.get("p", 0.05)),
        p1=float(m.get("p1", 0.50)),
        p2=float(m.get("p2", 0.20)),
        pin_first_month=bool(m.get("pin_first_month", False)),
    )

    priors_raw = raw.get("priors", {})
    if not isinstance(priors_raw, dict):
        raise ConfigError(f"{path}: priors must be an object")
    cfg.priors = {name: parse_prior(spec, f"{path}: priors.{name}")
                  for name, spec in priors_raw.items()}

    cfg.sampler = _build_sampler(raw.get("sampler", {}), f"{path}: sampler", cfg.seed)

    pr = raw.get("prediction", {})
    _expect_keys(pr, {"alpha", "method", "windows", "months", "draws"}, f"{path}: prediction")
    windows = pr.get("windows", [])
    for i, w in enumerate(windows):
        _expect_keys(w, {"delta_t", "steps"}, f"{path}: prediction.windows[{i}]")
        if float(w.get("delta_t", 0)) <= 0:
            raise ConfigError(f"{path}: prediction.windows[{i}].delta_t must be positive")
    cfg.prediction = PredictionConfig(
        alpha=float(pr.get("alpha", 0.05)),
        method=str(pr.get("method", "poisson")),
        windows=[{"delta_t": float(w["delta_t"]), "steps": int(w.get("steps", 1))}
                 for w in windows],
        months=int(pr.get("months", 0)),
        draws=pr.get("draws"),
    )
    if not (0.0 < cfg.prediction.alpha < 1.0):
        raise ConfigError(f"{path}: prediction.alpha must lie in (0, 1)")
    if cfg.prediction.method not in ("exact", "poisson"):
        raise ConfigError(f"{path}: prediction.method must be 'exact' or 'poisson'")

    ro = raw.get("roll", {})
    _expect_keys(ro, {"steps", "step_length", "events", "draws"}, f"{path}: roll")
    cfg.roll = RollConfig(
        steps=int(ro.get("steps", 26)),
        step_length=float(ro.get("step_length", 7.0)),
        events=ro.get("events"),
        draws=ro.get("draws"),
    )
    if cfg.roll.steps < 1 or cfg.roll.step_length <= 0:
        raise ConfigError(f"{path}: roll needs steps >= 1 and step_length > 0")

    si = raw.get("simulate", {})
    _expect_keys(si, {"preset", "n_datasets", "seed", "unbalanced", "levels", "sampler"},
                 f"{path}: simulate")
    cfg.simulate = SimulateConfig(
        preset=si.get("preset"),
        n_datasets=None if si.get("n_datasets") is None else int(si["n_datasets"]),
        seed=None if si.get("seed") is None else int(si["seed"]),
        unbalanced=bool(si.get("unbalanced", False)),
        levels=[float(x) for x in si.get("levels", [4, 10, 25, 55])],
        sampler=(None if "sampler" not in si
                 else _build_sampler(si["sampler"], f"{path}: simulate.sampler", cfg.seed)),
    )

    di = raw.get("diagnose", {})
    _expect_keys(di, {"group", "grid_points", "band_level", "draws"}, f"{path}: diagnose")
    cfg.diagnose = DiagnoseConfig(
        group=di.get("group"),
        grid_points=int(di.get("grid_points", 50)),
        band_level=float(di.get("band_level", 0.90)),
        draws=di.get("draws"),
    )
    return cfg


def write_csv(path, header, rows) -> None:
    """Deterministic CSV writer: floats via repr, fixed newline."""
    def fmt(v):
        if isinstance(v, bool):
            return str(v).lower()
        if isinstance(v, (float, np.floating)):
            return repr(float(v))
        if isinstance(v, (int, np.integer)):
            return str(int(v))
        return str(v)

    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
