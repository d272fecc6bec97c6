import math

import numpy as np
import pytest
from scipy import stats

from failcast import (
    HalfCauchy,
    HalfT,
    LogitNormal,
    LognormalInterval,
    LognormalTrunc01,
    Normal,
    interval_to_lognormal,
)
from failcast.errors import DomainError


class TestIntervalToLognormal:
    def test_weak_shape_prior_interval(self):
        loc, scale = interval_to_lognormal(0.08, 4.0)
        assert loc == pytest.approx(0.5 * (math.log(0.08) + math.log(4.0)), abs=1e-12)
        assert scale == pytest.approx(0.998, abs=1e-3)

    def test_informative_shape_prior_interval(self):
        loc, scale = interval_to_lognormal(0.37, 1.0)
        assert loc == pytest.approx(-0.4972, abs=2e-4)
        assert scale == pytest.approx(0.2536, abs=2e-4)

    def test_symmetric_construction_gives_unit_scale(self):
        z975 = stats.norm.ppf(0.975)
        for c in (0.1, 1.0, 17.0):
            _, scale = interval_to_lognormal(c, c * math.exp(2 * z975))
            assert scale == pytest.approx(1.0, rel=1e-12)

    def test_round_trip_quantiles(self):
        for lower, upper in ((0.08, 4.0), (2.75, 19.70), (22, 5.5e4), (4, 8)):
            loc, scale = interval_to_lognormal(lower, upper)
            q = stats.lognorm.ppf([0.025, 0.975], s=scale, scale=math.exp(loc))
            assert q[0] == pytest.approx(lower, rel=1e-6)
            assert q[1] == pytest.approx(upper, rel=1e-6)

    def test_rejects_bad_ordering(self):
        with pytest.raises(DomainError):
            interval_to_lognormal(4.0, 0.08)
        with pytest.raises(DomainError):
            interval_to_lognormal(0.0, 1.0)


class TestPriorLogpdfs:
    def test_lognormal_interval_matches_scipy(self):
        prior = LognormalInterval(0.08, 4.0)
        loc, scale = prior.log_params()
        xs = np.array([0.05, 0.3, 1.0, 5.0])
        oracle = stats.lognorm.logpdf(xs, s=scale, scale=math.exp(loc))
        got = np.array([prior.logpdf(x) for x in xs])
        np.testing.assert_allclose(got, oracle, rtol=1e-12)

    def test_lognormal_at_median_reduces_to_constant(self):
        # z = 0: logpdf = -log(scale) - log(x) - log sqrt(2 pi)
        prior = LognormalInterval(0.5, 8.0)
        loc, scale = prior.log_params()
        med = prior.median()
        assert med == pytest.approx(math.exp(loc), rel=1e-12)
        expected = -math.log(scale) - math.log(med) - 0.5 * math.log(2 * math.pi)
        assert prior.logpdf(med) == pytest.approx(expected, rel=1e-12)

    def test_half_t_boundary_and_unit_point(self):
        prior = HalfT(4.0, 1.0)
        assert prior.logpdf(0.0) == -math.inf
        assert prior.logpdf(-1.0) == -math.inf
        oracle = math.log(2.0) + stats.t.logpdf(1.0, 4.0)
        assert prior.logpdf(1.0) == pytest.approx(oracle, rel=1e-12)

    def test_half_t_integrates_to_one(self):
        from scipy.integrate import quad
        prior = HalfT(4.0, 1.5)
        total, _ = quad(lambda x: math.exp(prior.logpdf(x)), 0, np.inf)
        assert total == pytest.approx(1.0, rel=1e-8)

    def test_half_cauchy_matches_scipy(self):
        prior = HalfCauchy(2.0)
        xs = [0.1, 1.0, 5.0]
        oracle = stats.halfcauchy.logpdf(xs, scale=2.0)
        got = [prior.logpdf(x) for x in xs]
        np.testing.assert_allclose(got, oracle, rtol=1e-12)

    def test_truncated_lognormal_renormalization(self):
        prior = LognormalTrunc01(0.1, 2.0)
        loc, scale = interval_to_lognormal(0.1, 2.0)
        base = stats.lognorm.logpdf(0.5, s=scale, scale=math.exp(loc))
        mass = stats.lognorm.cdf(1.0, s=scale, scale=math.exp(loc))
        assert prior.logpdf(0.5) == pytest.approx(base - math.log(mass), rel=1e-10)
        assert prior.logpdf(1.0) == -math.inf
        assert prior.logpdf(1.5) == -math.inf

    def test_logit_normal_matches_change_of_variables(self):
        prior = LogitNormal(-3.0, 1.0)
        x = 0.07
        lo = math.log(x / (1 - x))
        oracle = stats.norm.logpdf(lo, -3.0, 1.0) - math.log(x) - math.log(1 - x)
        assert prior.logpdf(x) == pytest.approx(oracle, rel=1e-12)
        assert prior.logpdf(0.0) == -math.inf
        assert prior.logpdf(1.0) == -math.inf

    def test_medians(self):
        assert LognormalInterval(4.0, 8.0).median() == pytest.approx(math.sqrt(32.0), rel=1e-12)
        assert Normal(2.0, 1.0).median() == 2.0
        assert HalfCauchy(1.3).median() == pytest.approx(1.3)
        assert HalfT(4.0, 1.0).median() == pytest.approx(stats.t.ppf(0.75, 4), rel=1e-9)
        assert LogitNormal(0.0, 1.0).median() == pytest.approx(0.5)
