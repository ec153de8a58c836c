import math

import numpy as np
import pytest

from tca.errors import InsufficientData, InsufficientOverlap
from tca.stats import (
    adf_test,
    convergence_battery,
    convergence_counts,
    indicates_stationary,
    kpss_test,
    mackinnon_p,
    pp_test,
    stationarity_counts,
)
from tca.stats.unitroot import newey_west_variance, schwert_maxlag


def random_walk(seed, n=500):
    return np.cumsum(np.random.default_rng(seed).normal(size=n))


def ar1(seed, rho, n=500):
    e = np.random.default_rng(seed).normal(size=n)
    x = np.zeros(n)
    for t in range(1, n):
        x[t] = rho * x[t - 1] + e[t]
    return x


class TestAgainstStatsmodels:
    sm = pytest.importorskip("statsmodels.tsa.stattools")

    @pytest.mark.parametrize("seed", range(5))
    @pytest.mark.parametrize("trend", ["c", "ct"])
    def test_adf(self, seed, trend):
        x = ar1(seed, 0.9, 300)
        ours = adf_test(x, max_lag=8, trend=trend)
        ref = self.sm.adfuller(x, maxlag=8, regression=trend, autolag="AIC")
        assert ours.extra["lags"] == ref[2]
        assert ours.statistic == pytest.approx(ref[0], rel=1e-8)
        assert ours.p_value == pytest.approx(ref[1], rel=1e-6, abs=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_adf_fixed_lag(self, seed):
        x = random_walk(seed, 200)
        ours = adf_test(x, max_lag=3, autolag=None)
        ref = self.sm.adfuller(x, maxlag=3, autolag=None)
        assert ours.statistic == pytest.approx(ref[0], rel=1e-10)

    @pytest.mark.parametrize("seed", range(5))
    @pytest.mark.parametrize("null", ["level", "trend"])
    def test_kpss(self, seed, null):
        import warnings

        x = ar1(seed, 0.5, 250)
        ours = kpss_test(x, null=null)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            ref = self.sm.kpss(x, regression="c" if null == "level" else "ct", nlags="auto")
        assert ours.extra["lags"] == ref[2]
        assert ours.statistic == pytest.approx(ref[0], rel=1e-10)
        assert ours.p_value == pytest.approx(ref[1], rel=1e-8)

    @pytest.mark.parametrize("stat", [-6.0, -3.5, -2.86, -1.0, 0.5, 2.0])
    def test_mackinnon(self, stat):
        from statsmodels.tsa.adfvalues import mackinnonp

        for trend in ("n", "c", "ct"):
            assert mackinnon_p(stat, trend) == pytest.approx(mackinnonp(stat, trend, 1), rel=1e-7, abs=1e-12)


class TestHandCases:
    def test_schwert(self):
        assert schwert_maxlag(100) == 12
        assert schwert_maxlag(500) == 17

    def test_newey_west_white(self):
        u = np.array([1.0, -1.0, 1.0, -1.0])
        # gamma0 = 1, gamma1 = -3/4, Bartlett weight 1/2 at lag 1
        assert newey_west_variance(u, 1) == pytest.approx(1.0 + 2 * 0.5 * (-0.75))

    def test_short_series(self):
        for fn in (adf_test, pp_test, kpss_test):
            with pytest.raises(InsufficientData):
                fn(np.arange(10.0))

    def test_constant_series_is_stationary(self):
        x = np.full(50, 3.0)
        for fn in (adf_test, pp_test, kpss_test):
            r = fn(x)
            assert r.degenerate
            assert indicates_stationary(r)

    def test_kpss_p_bounded(self):
        r = kpss_test(random_walk(0, 500))
        assert r.p_value == 0.01 and r.extra["p_bounded"]
        assert r.decision_at[0.05]


class TestMonteCarloQuick:
    """Small-sample sanity runs; the full calibration lives in the acceptance suite."""

    def test_adf_size_and_power(self):
        rw = np.mean([adf_test(random_walk(s)).reject(0.05) for s in range(100)])
        ar = np.mean([adf_test(ar1(s, 0.5)).reject(0.05) for s in range(100)])
        assert rw < 0.15 and ar > 0.95

    def test_kpss_size_and_power(self):
        wn = np.mean([kpss_test(np.random.default_rng(s).normal(size=500)).reject(0.05) for s in range(100)])
        rw = np.mean([kpss_test(random_walk(s)).reject(0.05) for s in range(100)])
        assert wn < 0.15 and rw > 0.9

    def test_pp_power(self):
        assert np.mean([pp_test(ar1(s, 0.5)).reject(0.05) for s in range(100)]) > 0.95

    def test_kpss_trend_null(self):
        t = np.arange(500.0)
        kept = [not kpss_test(0.05 * t + np.random.default_rng(s).normal(size=500), null="trend").reject(0.05)
                for s in range(50)]
        assert np.mean(kept) > 0.5


class TestConvergence:
    def test_identical_series(self):
        sh = 10 + np.cumsum(np.random.default_rng(1).normal(0, 0.1, 60))
        rep = convergence_battery(sh * 1.25, sh, np.full(60, 1.25), "P")
        assert rep.converges is True
        assert rep.combinations["cny_diff_pos"].nobs == 0
        assert rep.combinations["cny_diff_pos"].converges is None
        assert rep.spread_beta == pytest.approx(1.0)

    def test_ar_gap_converges_rw_gap_does_not(self):
        conv, div = 0, 0
        for s in range(30):
            rng = np.random.default_rng(s)
            sh = 20 + np.cumsum(rng.normal(0, 0.2, 250))
            conv += convergence_battery(sh + ar1(1000 + s, 0.3, 250) * 0.1, sh, np.ones(250)).converges
            div += convergence_battery(sh + random_walk(2000 + s, 250) * 0.1, sh, np.ones(250)).converges
        assert conv >= 27 and div <= 6

    def test_sign_subsets(self):
        rng = np.random.default_rng(5)
        sh = np.full(100, 10.0)
        gap = rng.normal(0, 1, 100)
        rep = convergence_battery(sh + gap, sh, np.ones(100))
        pos, neg = rep.combinations["cny_diff_pos"].nobs, rep.combinations["cny_diff_neg"].nobs
        assert pos + neg == 100
        assert pos == int((gap > 0).sum())

    def test_fx_divides(self):
        sh = 10 + np.cumsum(np.random.default_rng(2).normal(0, 0.1, 40))
        hk_hkd = (sh + 1.0) * 1.3
        rep = convergence_battery(hk_hkd, sh, np.full(40, 1.3))
        assert rep.combinations["cny_diff_all"].tests["ADF"].degenerate

    def test_overlap(self):
        with pytest.raises(InsufficientOverlap):
            convergence_battery(np.ones(10), np.ones(10), np.ones(10))

    def test_counts(self):
        sh = 20 + np.cumsum(np.random.default_rng(3).normal(0, 0.2, 200))
        reps = [convergence_battery(sh + ar1(9, 0.3, 200) * 0.1, sh, np.ones(200), "A"),
                convergence_battery(sh + random_walk(9, 200), sh, np.ones(200), "B")]
        rows = {r["combination"]: r for r in convergence_counts(reps)}
        assert len(rows) == 7
        assert rows["cny_diff_all"]["pairs"] == 2 and rows["cny_diff_all"]["tested"] == 2
        assert rows["cny_diff_all"]["converging"] == sum(bool(r.converges) for r in reps)

    def test_stationarity_counts(self):
        series = {"a": np.random.default_rng(0).normal(size=200), "b": random_walk(1, 200), "c": np.ones(5)}
        c = stationarity_counts(series)
        assert c["series"] == 3 and c["tested"] == 2
        assert c["adf_stationary"] >= 1 and c["kpss_stationary"] >= 1
