"""Two-failure-mode fleet model with weekly rolling predictions.

A storage fleet mixes early failures of a small defective fraction with
eventual wearout.  We fit the hierarchical mixture across three drive
models, then roll one-week prediction windows forward, removing failed and
retired drives from the risk set each week — the batch retirements visibly
pull the predicted counts down.

Run:  python3 demos/03_drive_fleet_weekly.py   (~2 minutes)
"""

import numpy as np

from failcast import (
    Glfp,
    GlfpParams,
    HierGlfpModel,
    LifetimeRecord,
    PredictionWindow,
    QuantileParam,
    RiskSetEntry,
    SamplerConfig,
    fit,
    point_prediction,
    prediction_interval,
    predictive_cdf,
    rhat,
    roll_risk_set,
)

rng = np.random.default_rng(14)
HOURS_PER_WEEK = 168.0

# --- simulate three drive models with distinct defective fractions ---------
truth = {
    "m06": GlfpParams(0.08, QuantileParam(0.5, 900.0, 1.0), QuantileParam(0.2, 32000.0, 0.45)),
    "m14": GlfpParams(0.03, QuantileParam(0.5, 900.0, 1.0), QuantileParam(0.2, 24000.0, 0.55)),
    "m23": GlfpParams(0.15, QuantileParam(0.5, 900.0, 1.0), QuantileParam(0.2, 40000.0, 0.40)),
}
records, risk = [], []
for model_id, params in truth.items():
    dist = Glfp.from_params(params)
    ages = rng.uniform(4000.0, 20000.0, size=400)  # staggered entry
    lifetimes = dist.rvs(rng, size=400)
    for i, (age, t) in enumerate(zip(ages, lifetimes)):
        uid = f"{model_id}-d{i}"
        if t <= age:
            records.append(LifetimeRecord.exact(uid, model_id, float(t)))
        else:
            records.append(LifetimeRecord.right(uid, model_id, float(age)))
            risk.append(RiskSetEntry(uid, model_id, float(age)))

print(f"fleet snapshot: {len(records)} drives, {len(risk)} still in service")

model = HierGlfpModel(records, p1=0.50, p2=0.20)
draws = fit(model, SamplerConfig(chains=4, warmup=2000, keep=1500, seed=5))
print(f"max rhat across {model.dim} parameters: {max(rhat(draws).values()):.3f}")
for g in model.groups:
    pi_med = np.median(draws.column(f"pi[{g}]"))
    print(f"  {g}: posterior median defective fraction {pi_med:.3f} "
          f"(truth {truth[g].pi:.2f})")

# --- weekly rolling forecast with mid-horizon batch retirements -------------
week = PredictionWindow(HOURS_PER_WEEK)
current = risk
print("\nweek  in-service  lower  median  upper   (model m06)")
for k in range(1, 13):
    pd_m06 = predictive_cdf(model, draws, current, week, scope="m06", method="poisson")
    lo, hi = prediction_interval(pd_m06, 0.05)
    pt = point_prediction(pd_m06)
    n_active = sum(e.in_service and e.group_id == "m06" for e in current)
    print(f"{k:4d}  {n_active:10d}  {lo:5d}  {pt.median:6d}  {hi:5d}")
    events = []
    if k in (6, 7, 8):  # batch retirement wave, as fleets do
        ids = [e.unit_id for e in current if e.in_service and e.group_id == "m06"]
        events = [(uid, "retirement") for uid in ids[: len(ids) // 3]]
    current = roll_risk_set(current, events, HOURS_PER_WEEK)
