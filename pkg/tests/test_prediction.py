import math

import numpy as np
import pytest
from scipy import stats

from failcast import (
    Family,
    LogLocationScale,
    PosteriorDraws,
    PredictionWindow,
    RiskSetEntry,
    cond_fail_prob,
    count_quantile,
    one_sided_bound,
    point_prediction,
    poisson_binomial_cdf,
    prediction_interval,
    predictive_cdf,
    roll_risk_set,
    simulate_predictand,
)
from failcast.errors import (
    DataError,
    DomainError,
    ExhaustedRiskError,
    PredictionWarning,
    RiskSetError,
    RiskSetWarning,
)


class FixedRhoModel:
    """Prediction-layer stub: conditional probabilities given per (group, t_c)."""

    def __init__(self, table):
        self.table = {k: np.asarray(v, dtype=float) for k, v in table.items()}

    def conditional_probs(self, draws, group, t_c, delta_t):
        return self.table[(group, t_c)]


def fake_draws(n):
    return PosteriorDraws(np.zeros((n, 1)), ["x"], np.zeros(n, dtype=int),
                          np.arange(n), np.ones(1))


class TestCondFailProb:
    def test_zero_window(self):
        d = LogLocationScale(Family.SEV, 0.0, 1.0)
        assert cond_fail_prob(d, 1.0, 1.0) == 0.0

    def test_from_time_origin(self):
        d = LogLocationScale(Family.SEV, 0.5, 0.8)
        assert cond_fail_prob(d, 0.0, 2.0) == pytest.approx(d.cdf(2.0), rel=1e-14)

    def test_exponential_memorylessness(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            eta = float(rng.uniform(0.2, 5.0))
            t_c = float(rng.uniform(0.0, 3.0 * eta))
            dt = float(rng.uniform(0.01, 3.0 * eta))
            d = LogLocationScale(Family.SEV, math.log(eta), 1.0)
            oracle = -math.expm1(-dt / eta)
            assert abs(cond_fail_prob(d, t_c, t_c + dt) - oracle) < 1e-12

    def test_exhausted_risk_raises(self):
        d = LogLocationScale(Family.SEV, 0.0, 0.01)
        with pytest.raises(ExhaustedRiskError):
            cond_fail_prob(d, 2000.0, 2001.0)

    def test_validates_ordering(self):
        d = LogLocationScale(Family.SEV, 0.0, 1.0)
        with pytest.raises(DomainError):
            cond_fail_prob(d, 2.0, 1.0)


class TestPredictiveCdf:
    def test_single_draw_reduces_to_binomial(self):
        model = FixedRhoModel({("g", 1.0): [0.3]})
        risk = [RiskSetEntry(f"u{i}", "g", 1.0) for i in range(10)]
        pd_dist = predictive_cdf(model, fake_draws(1), risk, PredictionWindow(1.0))
        oracle = stats.binom.cdf(np.arange(11), 10, 0.3)
        np.testing.assert_allclose(pd_dist.cdf, oracle, atol=1e-12)

    def test_two_draw_mixture_arithmetic(self):
        model = FixedRhoModel({("g", 1.0): [0.2, 0.4]})
        risk = [RiskSetEntry("u", "g", 1.0)]
        pd_dist = predictive_cdf(model, fake_draws(2), risk, PredictionWindow(1.0))
        assert pd_dist.cdf[0] == pytest.approx(0.7, abs=1e-15)

    def test_heterogeneous_ages_use_poisson_binomial(self):
        rhos = {("g", 1.0): [0.1], ("g", 2.0): [0.25], ("g", 5.0): [0.6]}
        model = FixedRhoModel(rhos)
        risk = [RiskSetEntry("a", "g", 1.0), RiskSetEntry("b", "g", 2.0),
                RiskSetEntry("c", "g", 5.0)]
        pd_dist = predictive_cdf(model, fake_draws(1), risk, PredictionWindow(1.0))
        oracle = poisson_binomial_cdf([0.1, 0.25, 0.6]).cdf
        np.testing.assert_allclose(pd_dist.cdf, oracle, atol=1e-12)

    def test_scope_filtering_and_unknown_scope(self):
        model = FixedRhoModel({("g1", 1.0): [0.2], ("g2", 1.0): [0.9]})
        risk = [RiskSetEntry("a", "g1", 1.0), RiskSetEntry("b", "g2", 1.0)]
        only = predictive_cdf(model, fake_draws(1), risk, PredictionWindow(1.0), scope="g1")
        assert only.cdf[0] == pytest.approx(0.8, abs=1e-15)
        with pytest.raises(DataError):
            predictive_cdf(model, fake_draws(1), risk, PredictionWindow(1.0), scope="g3")

    def test_all_retired_is_point_mass_at_zero(self):
        model = FixedRhoModel({("g", 1.0): [0.2]})
        risk = [RiskSetEntry("a", "g", 1.0, in_service=False)]
        pd_dist = predictive_cdf(model, fake_draws(1), risk, PredictionWindow(1.0))
        assert pd_dist.support_max == 0
        assert point_prediction(pd_dist) == (0, 0.0)

    def test_poisson_method_matches_oracle(self):
        model = FixedRhoModel({("g", 1.0): [0.01, 0.02]})
        risk = [RiskSetEntry(f"u{i}", "g", 1.0) for i in range(100)]
        pd_dist = predictive_cdf(model, fake_draws(2), risk, PredictionWindow(1.0),
                                 method="poisson")
        grid = np.arange(pd_dist.support_max + 1)
        oracle = 0.5 * (stats.poisson.cdf(grid, 1.0) + stats.poisson.cdf(grid, 2.0))
        np.testing.assert_allclose(pd_dist.cdf, oracle, atol=1e-12)

    def test_exact_vs_poisson_interval_coherence(self):
        # small expected counts: endpoints differ by at most one
        rng = np.random.default_rng(23)
        model = FixedRhoModel({("g", float(t)): rng.uniform(0.001, 0.05, size=8)
                               for t in range(1, 6)})
        risk = [RiskSetEntry(f"u{t}{i}", "g", float(t))
                for t in range(1, 6) for i in range(20)]
        exact = predictive_cdf(model, fake_draws(8), risk, PredictionWindow(1.0), method="exact")
        approx = predictive_cdf(model, fake_draws(8), risk, PredictionWindow(1.0), method="poisson")
        for side in ("lower", "upper"):
            a = one_sided_bound(exact, 0.95, side)
            b = one_sided_bound(approx, 0.95, side)
            assert abs(a - b) <= 1

    def test_mixture_linearity_in_draw_sets(self):
        model_a = FixedRhoModel({("g", 1.0): [0.2, 0.3]})
        model_b = FixedRhoModel({("g", 1.0): [0.2, 0.3, 0.5, 0.7]})
        risk = [RiskSetEntry(f"u{i}", "g", 1.0) for i in range(5)]
        pd_a = predictive_cdf(model_a, fake_draws(2), risk, PredictionWindow(1.0))
        pd_b = predictive_cdf(model_b, fake_draws(4), risk, PredictionWindow(1.0))
        model_tail = FixedRhoModel({("g", 1.0): [0.5, 0.7]})
        pd_tail = predictive_cdf(model_tail, fake_draws(2), risk, PredictionWindow(1.0))
        np.testing.assert_allclose(pd_b.cdf, 0.5 * pd_a.cdf + 0.5 * pd_tail.cdf, atol=1e-15)

    def test_exhausted_units_dropped_with_warning(self):
        model = FixedRhoModel({("g", 1.0): [0.2], ("g", 9.0): [np.nan]})
        risk = [RiskSetEntry("a", "g", 1.0), RiskSetEntry("b", "g", 9.0)]
        with pytest.warns(PredictionWarning):
            pd_dist = predictive_cdf(model, fake_draws(1), risk, PredictionWindow(1.0))
        assert pd_dist.n_excluded == 1
        assert pd_dist.n_units == 1

    def test_scope_mean_additivity(self):
        rng = np.random.default_rng(29)
        model = FixedRhoModel({("g1", 1.0): rng.uniform(0, 0.5, 6),
                               ("g2", 3.0): rng.uniform(0, 0.5, 6)})
        risk = ([RiskSetEntry(f"a{i}", "g1", 1.0) for i in range(7)]
                + [RiskSetEntry(f"b{i}", "g2", 3.0) for i in range(4)])
        w = PredictionWindow(2.0)
        total = predictive_cdf(model, fake_draws(6), risk, w).mean()
        parts = (predictive_cdf(model, fake_draws(6), risk, w, scope="g1").mean()
                 + predictive_cdf(model, fake_draws(6), risk, w, scope="g2").mean())
        assert total == pytest.approx(parts, abs=1e-10)


class TestIntervalAndPoint:
    def test_point_mass(self):
        model = FixedRhoModel({("g", 1.0): [1.0]})
        risk = [RiskSetEntry(f"u{i}", "g", 1.0) for i in range(3)]
        pd_dist = predictive_cdf(model, fake_draws(1), risk, PredictionWindow(1.0))
        assert prediction_interval(pd_dist, 0.05) == (3, 3)
        assert point_prediction(pd_dist).median == 3

    def test_binomial_table_interval(self):
        model = FixedRhoModel({("g", 1.0): [0.5]})
        risk = [RiskSetEntry(f"u{i}", "g", 1.0) for i in range(10)]
        pd_dist = predictive_cdf(model, fake_draws(1), risk, PredictionWindow(1.0))
        assert prediction_interval(pd_dist, 0.05) == (2, 8)
        assert point_prediction(pd_dist).median == 5
        assert point_prediction(pd_dist).mean == pytest.approx(5.0, abs=1e-12)

    def test_interval_ordering(self):
        rng = np.random.default_rng(31)
        model = FixedRhoModel({("g", 1.0): rng.uniform(0, 1, 50)})
        risk = [RiskSetEntry(f"u{i}", "g", 1.0) for i in range(12)]
        pd_dist = predictive_cdf(model, fake_draws(50), risk, PredictionWindow(1.0))
        lo, hi = prediction_interval(pd_dist, 0.1)
        med = point_prediction(pd_dist).median
        assert lo <= med <= hi

    def test_one_sided_bounds_match_quantiles(self):
        model = FixedRhoModel({("g", 1.0): [0.3]})
        risk = [RiskSetEntry(f"u{i}", "g", 1.0) for i in range(20)]
        pd_dist = predictive_cdf(model, fake_draws(1), risk, PredictionWindow(1.0))
        assert one_sided_bound(pd_dist, 0.95, "lower") == count_quantile(pd_dist, 0.05)
        assert one_sided_bound(pd_dist, 0.95, "upper") == count_quantile(pd_dist, 0.95)

    def test_single_draw_matches_enumerated_example(self):
        model = FixedRhoModel({("g", 1.0): [0.1], ("g", 2.0): [0.2], ("g", 3.0): [0.3]})
        risk = [RiskSetEntry("a", "g", 1.0), RiskSetEntry("b", "g", 2.0),
                RiskSetEntry("c", "g", 3.0)]
        pd_dist = predictive_cdf(model, fake_draws(1), risk, PredictionWindow(1.0))
        assert point_prediction(pd_dist).median == 0  # P(Y=0) = 0.504
        assert point_prediction(pd_dist).mean == pytest.approx(0.6, abs=1e-12)


class TestSimulatePredictand:
    def test_degenerate_rho_zero(self):
        model = FixedRhoModel({("g", 1.0): np.zeros(100)})
        risk = [RiskSetEntry(f"u{i}", "g", 1.0) for i in range(5)]
        pd_dist = simulate_predictand(model, fake_draws(100), risk, PredictionWindow(1.0), seed=0)
        assert pd_dist.cdf[0] == 1.0

    def test_degenerate_rho_one(self):
        model = FixedRhoModel({("g", 1.0): np.ones(100)})
        risk = [RiskSetEntry(f"u{i}", "g", 1.0) for i in range(4)]
        pd_dist = simulate_predictand(model, fake_draws(100), risk, PredictionWindow(1.0), seed=0)
        assert pd_dist.pmf()[4] == 1.0

    def test_endpoints_near_direct_mixture(self):
        rng = np.random.default_rng(3)
        agreement = 0
        for rep in range(100):
            rho = np.clip(rng.normal(0.1, 0.02, size=1500), 0.001, 0.5)
            model = FixedRhoModel({("g", 1.0): rho})
            risk = [RiskSetEntry(f"u{i}", "g", 1.0) for i in range(20)]
            direct = predictive_cdf(model, fake_draws(1500), risk, PredictionWindow(1.0))
            sim = simulate_predictand(model, fake_draws(1500), risk, PredictionWindow(1.0),
                                      seed=1000 + rep)
            d_int = prediction_interval(direct, 0.05)
            s_int = prediction_interval(sim, 0.05)
            assert abs(d_int[0] - s_int[0]) <= 1
            assert abs(d_int[1] - s_int[1]) <= 1
            agreement += d_int == s_int
        assert agreement >= 95


class TestRollRiskSet:
    def entries(self):
        return [RiskSetEntry(f"u{i}", "g", float(10 + i)) for i in range(4)]

    def test_pure_aging(self):
        rolled = roll_risk_set(self.entries(), [], 7.0)
        assert [e.t_c for e in rolled] == [17.0, 18.0, 19.0, 20.0]
        assert all(e.in_service for e in rolled)

    def test_events_remove_units(self):
        rolled = roll_risk_set(self.entries(), [("u1", "failure"), ("u3", "retirement")], 7.0)
        assert [e.in_service for e in rolled] == [True, False, True, False]
        assert rolled[1].t_c == 11.0  # removed units do not age

    def test_unknown_unit_raises(self):
        with pytest.raises(RiskSetError):
            roll_risk_set(self.entries(), [("nope", "failure")], 1.0)

    def test_double_removal_warns_idempotent(self):
        first = roll_risk_set(self.entries(), [("u0", "failure")], 1.0)
        with pytest.warns(RiskSetWarning):
            second = roll_risk_set(first, [("u0", "failure")], 1.0)
        assert sum(e.in_service for e in second) == 3

    def test_aging_composes(self):
        a_then_b = roll_risk_set(roll_risk_set(self.entries(), [], 2.0), [], 3.0)
        ab = roll_risk_set(self.entries(), [], 5.0)
        assert [e.t_c for e in a_then_b] == [e.t_c for e in ab]

    def test_staged_retirement_bookkeeping(self):
        rng = np.random.default_rng(5)
        risk = [RiskSetEntry(f"d{i}", "m6", float(rng.integers(100, 400))) for i in range(4000)]
        schedule = {}
        remaining = [e.unit_id for e in risk]
        rng.shuffle(remaining)
        cursor = 0
        for week in range(26):
            k = int(rng.integers(110, 170))
            schedule[week] = [(uid, "retirement") for uid in remaining[cursor:cursor + k]]
            cursor += k
        expected = 4000
        for week in range(26):
            risk = roll_risk_set(risk, schedule[week], 7.0)
            expected -= len(schedule[week])
            assert sum(e.in_service for e in risk) == expected
        assert expected < 500


def test_window_validation():
    with pytest.raises(DomainError):
        PredictionWindow(0.0)
    with pytest.raises(DomainError):
        PredictionWindow(-1.0)
