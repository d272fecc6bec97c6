import math

import numpy as np
import pytest
from scipy import stats

from failcast import (
    Family,
    FlatLifetimeModel,
    LifetimeRecord,
    LognormalInterval,
    PosteriorDraws,
    kaplan_meier,
    probability_plot_data,
)
from failcast.errors import DataError


class TestKaplanMeier:
    def test_no_censoring_steps(self):
        recs = [LifetimeRecord.exact(f"u{i}", "g", float(t))
                for i, t in enumerate((1.0, 2.0, 3.0, 4.0))]
        km = kaplan_meier(recs)
        np.testing.assert_allclose(km.survival, [0.75, 0.5, 0.25, 0.0], atol=1e-14)

    def test_all_censored_flat(self):
        recs = [LifetimeRecord.right(f"u{i}", "g", float(i + 1)) for i in range(5)]
        km = kaplan_meier(recs)
        assert km.times.size == 0

    def test_hand_product_limit(self):
        # events at 1, 3; censored at 2, 4: S(3) = (3/4)(1/2) = 0.375
        recs = [LifetimeRecord.exact("a", "g", 1.0),
                LifetimeRecord.right("b", "g", 2.0),
                LifetimeRecord.exact("c", "g", 3.0),
                LifetimeRecord.right("d", "g", 4.0)]
        km = kaplan_meier(recs)
        np.testing.assert_allclose(km.times, [1.0, 3.0])
        assert km.survival[-1] == pytest.approx(0.375, abs=1e-14)
        np.testing.assert_allclose(km.at_risk, [4.0, 2.0])

    def test_greenwood_log_interval(self):
        recs = [LifetimeRecord.exact("a", "g", 1.0),
                LifetimeRecord.right("b", "g", 2.0),
                LifetimeRecord.exact("c", "g", 3.0),
                LifetimeRecord.right("d", "g", 4.0)]
        km = kaplan_meier(recs, conf_level=0.90)
        z = stats.norm.ppf(0.95)
        green = 1.0 / (4 * 3) + 1.0 / (2 * 1)
        s = 0.375
        assert km.lower[-1] == pytest.approx(s * math.exp(-z * math.sqrt(green)), rel=1e-10)
        assert km.upper[-1] == pytest.approx(min(1.0, s * math.exp(z * math.sqrt(green))), rel=1e-10)

    def test_multiplicity_equals_expansion(self):
        collapsed = [LifetimeRecord.exact("a", "g", 1.0, multiplicity=3),
                     LifetimeRecord.right("c", "g", 2.0, multiplicity=7)]
        expanded = ([LifetimeRecord.exact(f"a{i}", "g", 1.0) for i in range(3)]
                    + [LifetimeRecord.right(f"c{i}", "g", 2.0) for i in range(7)])
        a, b = kaplan_meier(collapsed), kaplan_meier(expanded)
        np.testing.assert_allclose(a.survival, b.survival, atol=1e-15)
        np.testing.assert_allclose(a.lower, b.lower, atol=1e-15)

    def test_delayed_entry_adjustment(self):
        # the truncated unit is not at risk before its entry age
        recs = [LifetimeRecord.exact("a", "g", 1.0),
                LifetimeRecord.exact("b", "g", 3.0, trunc_left=2.0),
                LifetimeRecord.right("c", "g", 4.0)]
        km = kaplan_meier(recs)
        assert km.adjusted_for_delayed_entry
        np.testing.assert_allclose(km.at_risk, [2.0, 2.0])  # b enters after t=1
        assert km.survival[0] == pytest.approx(0.5)

    def test_rejects_interval_censoring(self):
        recs = [LifetimeRecord.intervald("a", "g", 1.0, 2.0)]
        with pytest.raises(DataError):
            kaplan_meier(recs)

    def test_consistency_against_known_distribution(self):
        rng = np.random.default_rng(6)
        from failcast import LogLocationScale
        d = LogLocationScale(Family.SEV, 1.0, 0.5)
        t = d.rvs(rng, size=3000)
        cens = np.minimum(t, 5.0)
        recs = [LifetimeRecord.exact(f"u{i}", "g", float(ti)) if ti < 5.0
                else LifetimeRecord.right(f"u{i}", "g", 5.0)
                for i, ti in enumerate(cens)]
        km = kaplan_meier(recs)
        mid = np.searchsorted(km.times, d.quantile(0.5))
        assert km.survival[mid - 1] == pytest.approx(0.5, abs=0.03)


class TestProbabilityPlot:
    def fitted_pieces(self):
        rng = np.random.default_rng(9)
        from failcast import LogLocationScale
        d = LogLocationScale.from_quantile(Family.SEV, 0.05, 2.0, 0.7)
        t = d.rvs(rng, size=400)
        recs = [LifetimeRecord.exact(f"u{i}", "all", float(ti)) if ti < 6.0
                else LifetimeRecord.right(f"u{i}", "all", 6.0)
                for i, ti in enumerate(t)]
        model = FlatLifetimeModel(recs, priors={"t_p": LognormalInterval(0.2, 20),
                                                "sigma": LognormalInterval(0.08, 4.0)},
                                  pool=True)
        return recs, model

    def test_exact_cdf_input_is_linear(self):
        # transform of the true cdf of a Weibull is a line with slope 1/sigma
        from failcast import LogLocationScale
        d = LogLocationScale(Family.SEV, 0.8, 0.5)
        times = np.geomspace(d.quantile(0.01), d.quantile(0.99), 30)
        from failcast.distributions import family_kernel
        y = family_kernel(Family.SEV).quantile(d.cdf(times))
        slope = np.diff(y) / np.diff(np.log(times))
        np.testing.assert_allclose(slope, 2.0, rtol=1e-7)

    def test_points_omit_degenerate_cdf(self):
        recs = [LifetimeRecord.exact(f"u{i}", "g", float(i + 1)) for i in range(4)]
        km = kaplan_meier(recs)
        plot = probability_plot_data(Family.SEV, km=km)
        # the last point has F=1 and must be dropped
        assert plot.point_log_t.size == 3

    def test_band_ordering_and_collapse(self):
        recs, model = self.fitted_pieces()
        theta = np.exp(model.init_center() + 0.1)
        draws = PosteriorDraws(np.vstack([theta, theta]), model.param_names,
                               np.array([0, 1]), np.array([0, 0]), np.ones(2))
        km = kaplan_meier(recs)
        plot = probability_plot_data(Family.SEV, km=km, model=model, draws=draws,
                                     group="all")
        assert np.all(plot.band_lower <= plot.band_median + 1e-12)
        assert np.all(plot.band_median <= plot.band_upper + 1e-12)
        # two identical draws collapse the band onto the median curve
        np.testing.assert_allclose(plot.band_lower, plot.band_upper, atol=1e-12)

    def test_band_requires_grid_or_km(self):
        recs, model = self.fitted_pieces()
        theta = np.exp(model.init_center())
        draws = PosteriorDraws(theta[None, :], model.param_names,
                               np.array([0]), np.array([0]), np.ones(1))
        with pytest.raises(DataError):
            probability_plot_data(Family.SEV, model=model, draws=draws, group="all")
        plot = probability_plot_data(Family.SEV, model=model, draws=draws,
                                     group="all", grid_times=np.geomspace(0.5, 8, 20))
        assert plot.grid_times.size == 20
