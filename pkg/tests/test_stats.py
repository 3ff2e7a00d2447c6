import math

import numpy as np
import pytest
import scipy.special
import scipy.stats
from hypothesis import given, settings, strategies as st

from hiertab import stats


finite_floats = st.floats(-1e3, 1e3, allow_nan=False)


class TestSpecialFunctions:
    @given(a=st.floats(0.1, 50), x=st.floats(0.0, 100))
    @settings(max_examples=300, deadline=None)
    def test_gammainc_matches_scipy(self, a, x):
        assert stats.gammainc_lower(a, x) == pytest.approx(
            scipy.special.gammainc(a, x), abs=1e-10
        )
        assert stats.gammainc_upper(a, x) == pytest.approx(
            scipy.special.gammaincc(a, x), abs=1e-10
        )

    @given(a=st.floats(0.1, 30), b=st.floats(0.1, 30), x=st.floats(0.0, 1.0))
    @settings(max_examples=300, deadline=None)
    def test_betainc_matches_scipy(self, a, b, x):
        assert stats.betainc(a, b, x) == pytest.approx(
            scipy.special.betainc(a, b, x), abs=1e-10
        )

    @given(stat=st.floats(0.0, 200), df=st.integers(1, 60))
    @settings(max_examples=200, deadline=None)
    def test_chi2_sf_matches_scipy(self, stat, df):
        assert stats.chi2_sf(stat, df) == pytest.approx(
            scipy.stats.chi2.sf(stat, df), abs=1e-10
        )

    @given(t=st.floats(-30, 30), df=st.integers(1, 60))
    @settings(max_examples=200, deadline=None)
    def test_t_two_sided_matches_scipy(self, t, df):
        expected = 2 * scipy.stats.t.sf(abs(t), df)
        assert stats.t_two_sided(t, df) == pytest.approx(expected, abs=1e-8)

    @given(z=st.floats(-8, 8))
    @settings(max_examples=200, deadline=None)
    def test_normal_sf_matches_scipy(self, z):
        assert stats.normal_sf(z) == pytest.approx(
            scipy.stats.norm.sf(z), abs=1e-12
        )


def random_sample(rng, n, spread=10.0):
    return rng.normal(0.0, spread, size=n)


class TestMoments:
    def test_kurtosis_closed_form(self):
        assert stats.kurtosis(np.array([1.0, 2.0, 3.0])) == 1.5

    def test_skewness_symmetric_is_zero(self):
        assert stats.skewness(np.array([1.0, 2.0, 3.0, 4.0, 5.0])) == pytest.approx(
            0.0, abs=1e-12
        )

    def test_skewness_known_value(self):
        # one far point among equals: κ₁ = 1.5 exactly for [1,1,1,1,50]
        assert stats.skewness(np.array([1.0, 1.0, 1.0, 1.0, 50.0])) == pytest.approx(
            1.5, abs=1e-12
        )

    def test_zero_variance_raises(self):
        with pytest.raises(ValueError):
            stats.skewness(np.array([3.0, 3.0, 3.0]))
        with pytest.raises(ValueError):
            stats.kurtosis(np.array([3.0, 3.0, 3.0]))

    @given(seed=st.integers(0, 5000), n=st.integers(3, 40))
    @settings(max_examples=200, deadline=None)
    def test_moments_match_scipy(self, seed, n):
        rng = np.random.default_rng(seed)
        x = random_sample(rng, n)
        assert stats.skewness(x) == pytest.approx(
            scipy.stats.skew(x, bias=True), abs=1e-9
        )
        assert stats.kurtosis(x) == pytest.approx(
            scipy.stats.kurtosis(x, fisher=False, bias=True), abs=1e-9
        )
        assert stats.pop_std(x) == pytest.approx(np.std(x), abs=1e-9)


class TestQuantiles:
    @given(seed=st.integers(0, 5000), n=st.integers(1, 50),
           q=st.floats(0.0, 1.0))
    @settings(max_examples=200, deadline=None)
    def test_r7_matches_numpy_linear(self, seed, n, q):
        rng = np.random.default_rng(seed)
        x = random_sample(rng, n)
        assert stats.quantile_r7(x, q) == pytest.approx(
            np.quantile(x, q, method="linear"), abs=1e-9
        )


class TestCorrelation:
    @given(seed=st.integers(0, 5000), n=st.integers(3, 40))
    @settings(max_examples=200, deadline=None)
    def test_pearson_matches_scipy(self, seed, n):
        rng = np.random.default_rng(seed)
        x, y = random_sample(rng, n), random_sample(rng, n)
        r = stats.pearson_r(x, y)
        result = scipy.stats.pearsonr(x, y)
        assert r == pytest.approx(result.statistic, abs=1e-9)
        assert stats.pearson_p(r, n) == pytest.approx(result.pvalue, abs=1e-6)

    def test_constant_input_raises(self):
        with pytest.raises(ValueError):
            stats.pearson_r(np.array([1.0, 1.0, 1.0]), np.array([1.0, 2.0, 3.0]))


class TestTrend:
    @given(seed=st.integers(0, 5000), n=st.integers(4, 40))
    @settings(max_examples=200, deadline=None)
    def test_trend_matches_scipy_linregress(self, seed, n):
        rng = np.random.default_rng(seed)
        y = random_sample(rng, n)
        slope, r2, p = stats.ols_trend(y)
        expected = scipy.stats.linregress(np.arange(n), y)
        assert slope == pytest.approx(expected.slope, abs=1e-9)
        assert r2 == pytest.approx(expected.rvalue ** 2, abs=1e-9)
        assert p == pytest.approx(expected.pvalue, abs=1e-6)

    def test_constant_series(self):
        slope, r2, p = stats.ols_trend(np.array([5.0, 5.0, 5.0, 5.0]))
        assert (slope, r2, p) == (0.0, 0.0, 1.0)

    def test_perfect_fit(self):
        slope, r2, p = stats.ols_trend(np.array([1.0, 2.0, 3.0, 4.0]))
        assert slope == pytest.approx(1.0)
        assert r2 == pytest.approx(1.0)
        assert p == 0.0


class TestWelch:
    @given(seed=st.integers(0, 5000), n1=st.integers(2, 25),
           n2=st.integers(2, 25))
    @settings(max_examples=200, deadline=None)
    def test_matches_scipy(self, seed, n1, n2):
        rng = np.random.default_rng(seed)
        a, b = random_sample(rng, n1), random_sample(rng, n2)
        t, p = stats.welch_t(a, b)
        expected = scipy.stats.ttest_ind(a, b, equal_var=False)
        assert t == pytest.approx(expected.statistic, abs=1e-9)
        assert p == pytest.approx(expected.pvalue, abs=1e-6)

    def test_both_constant_equal_means(self):
        t, p = stats.welch_t(np.array([2.0, 2.0]), np.array([2.0, 2.0, 2.0]))
        assert (t, p) == (0.0, 1.0)

    def test_both_constant_distinct_means(self):
        t, p = stats.welch_t(np.array([1.0, 1.0]), np.array([2.0, 2.0]))
        assert math.isinf(t) and p == 0.0


class TestChiSquare:
    @given(seed=st.integers(0, 5000), r=st.integers(2, 5), c=st.integers(2, 5))
    @settings(max_examples=200, deadline=None)
    def test_matches_scipy(self, seed, r, c):
        rng = np.random.default_rng(seed)
        table = rng.integers(5, 80, size=(r, c)).astype(np.float64)
        stat, p, expected = stats.chi2_independence(table)
        ref = scipy.stats.chi2_contingency(table, correction=False)
        assert stat == pytest.approx(ref.statistic, abs=1e-9)
        assert p == pytest.approx(ref.pvalue, abs=1e-6)
        np.testing.assert_allclose(expected, ref.expected_freq, atol=1e-9)


class TestDiscountedReturn:
    def test_matches_direct_sum(self):
        rewards = [1.0, 2.0, 3.0]
        gamma = 0.9
        direct = sum(g * r for g, r in zip((1, gamma, gamma ** 2), rewards))
        assert stats.discounted_return(rewards, gamma) == pytest.approx(direct)

    def test_gamma_zero_keeps_first(self):
        assert stats.discounted_return([4.0, 100.0], 0.0) == 4.0
