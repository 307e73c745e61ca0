import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from nh3trend.errors import DegenerateInput, DomainError
from nh3trend.stats import (
    Interval,
    ols_fit,
    prediction_interval,
    regularized_beta,
    slope_t_test,
    t_density,
    t_quantile,
    two_sided_p,
)

# Normal-equations oracle in exact rational arithmetic for the seeded line below.
SEEDED_LINE_INTERCEPT = 2.856212886454989
SEEDED_LINE_SLOPE = 0.11433960920820214
# 2 * integral_2^inf of the t(10) density, scipy quad at 1e-13.
P_T2_DF10 = 0.07338803477074042


def _seeded_line():
    noise = np.random.default_rng(20240101).normal(0, 0.5, 24)
    xs = list(range(1, 25))
    return xs, [3 + 0.1 * x + e for x, e in zip(xs, noise)]


def _normal_equations(xs, ys):
    n = len(xs)
    sx = sum(Fraction(x) for x in xs)
    sy = sum(Fraction(y) for y in ys)
    sxx = sum(Fraction(x) ** 2 for x in xs)
    sxy = sum(Fraction(x) * Fraction(y) for x, y in zip(xs, ys))
    det = n * sxx - sx * sx
    return float((sy * sxx - sx * sxy) / det), float((n * sxy - sx * sy) / det)


def _quad_p(t, df):
    tail, _ = integrate.quad(t_density, abs(t), np.inf, args=(df,), epsabs=1e-13, epsrel=1e-13)
    return 2 * tail


class TestOls:
    def test_exact_line(self):
        fit = ols_fit([1, 2, 3], [2, 4, 6])
        assert fit.intercept == pytest.approx(0, abs=1e-14)
        assert fit.slope == pytest.approx(2)
        assert fit.residual_variance == 0
        assert fit.se_slope == 0

    def test_two_points_interpolate(self):
        fit = ols_fit([10, 20], [1.2, 0.9])
        assert fit.intercept == pytest.approx(1.5)
        assert fit.slope == pytest.approx(-0.03)
        assert fit.residual_variance == 0
        assert fit.n == 2

    def test_seeded_line_matches_normal_equations(self):
        xs, ys = _seeded_line()
        a, b = _normal_equations(xs, ys)
        assert (a, b) == pytest.approx((SEEDED_LINE_INTERCEPT, SEEDED_LINE_SLOPE), abs=1e-15)
        fit = ols_fit(xs, ys)
        assert fit.intercept == pytest.approx(SEEDED_LINE_INTERCEPT, abs=1e-10)
        assert fit.slope == pytest.approx(SEEDED_LINE_SLOPE, abs=1e-10)

    def test_se_slope_identity(self):
        xs, ys = _seeded_line()
        fit = ols_fit(xs, ys)
        assert fit.se_slope == pytest.approx(math.sqrt(fit.residual_variance / fit.sxx), rel=1e-14)
        assert fit.sxx == pytest.approx(sum((x - 12.5) ** 2 for x in xs))

    @pytest.mark.parametrize("xs, ys", [([1], [2]), ([], []), ([3, 3, 3], [1, 2, 3]), ([1, 2], [1, 2, 3])])
    def test_degenerate(self, xs, ys):
        with pytest.raises(DegenerateInput):
            ols_fit(xs, ys)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.tuples(st.floats(-100, 100), st.floats(-100, 100)), min_size=3, max_size=40))
    def test_residuals_sum_zero_and_orthogonal(self, pts):
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        if max(xs) - min(xs) < 1e-3:
            return
        fit = ols_fit(xs, ys)
        r = np.array(ys) - (fit.intercept + fit.slope * np.array(xs))
        scale = max(1.0, float(np.abs(ys).max())) * len(xs)
        assert abs(r.sum()) <= 1e-10 * scale
        assert abs(r @ (np.array(xs) - fit.predictor_mean)) <= 1e-10 * scale * max(1.0, float(np.abs(xs).max()))

    @pytest.mark.parametrize("k", [0.5, 2.0, 10.0, 3.7])
    def test_response_scaling(self, k):
        xs, ys = _seeded_line()
        base = ols_fit(xs, ys)
        scaled = ols_fit(xs, [k * y for y in ys])
        assert scaled.slope == pytest.approx(k * base.slope, rel=1e-12)
        assert scaled.se_slope == pytest.approx(k * base.se_slope, rel=1e-12)
        t0, p0, _ = slope_t_test(base.slope, base.se_slope, base.df)
        t1, p1, _ = slope_t_test(scaled.slope, scaled.se_slope, scaled.df)
        assert t1 == pytest.approx(t0, rel=1e-12)
        assert p1 == pytest.approx(p0, abs=1e-12)


class TestTwoSidedP:
    def test_zero(self):
        assert two_sided_p(0.0, 10) == 1.0

    def test_quadrature_constant(self):
        assert _quad_p(2.0, 10) == pytest.approx(P_T2_DF10, abs=1e-12)
        assert two_sided_p(2.0, 10) == pytest.approx(P_T2_DF10, abs=1e-12)

    def test_deep_tail(self):
        assert two_sided_p(50.0, 5) < 1e-6

    def test_cauchy_closed_form(self):
        for t in (0.3, 1.0, 4.0, 100.0):
            assert two_sided_p(t, 1) == pytest.approx(1 - 2 * math.atan(t) / math.pi, abs=1e-15)

    @pytest.mark.parametrize("t, df", [(1.0, 0), (1.0, 0.5), (math.inf, 3), (math.nan, 3), (1.0, -2)])
    def test_domain(self, t, df):
        with pytest.raises(DomainError):
            two_sided_p(t, df)

    @given(st.floats(-1e6, 1e6), st.integers(1, 500))
    def test_symmetry(self, t, df):
        assert two_sided_p(t, df) == two_sided_p(-t, df)

    @pytest.mark.parametrize("df", [1, 2, 5, 30, 298])
    def test_strictly_decreasing_on_grid(self, df):
        grid = np.linspace(0, 8, 161)
        ps = [two_sided_p(float(t), df) for t in grid]
        assert all(a > b for a, b in zip(ps, ps[1:]))

    def test_regularized_beta_endpoints(self):
        assert regularized_beta(2.0, 3.0, 0.0) == 0.0
        assert regularized_beta(2.0, 3.0, 1.0) == 1.0
        # I_x(1, 1) = x
        assert regularized_beta(1.0, 1.0, 0.37) == pytest.approx(0.37, abs=1e-15)


class TestQuantile:
    @pytest.mark.parametrize("df", [1, 3, 4, 10, 154])
    @pytest.mark.parametrize("prob", [0.6, 0.9, 0.95, 0.999])
    def test_inverts_tail(self, df, prob):
        q = t_quantile(prob, df)
        assert two_sided_p(q, df) == pytest.approx(2 * (1 - prob), abs=1e-13)
        assert t_quantile(1 - prob, df) == -q

    def test_known_values(self):
        assert t_quantile(0.95, 1) == pytest.approx(math.tan(0.45 * math.pi), rel=1e-13)
        assert t_quantile(0.5, 7) == 0.0


class TestPredictionInterval:
    def test_zero_residual_variance(self):
        fit = ols_fit([1, 2, 3, 4], [3, 5, 7, 9])
        pi = prediction_interval(fit, 10.0, 0.9)
        assert pi.zero_width
        assert pi.lower == pytest.approx(21.0)

    def test_minimum_width_at_mean(self):
        xs = [1, 2, 3, 4, 5, 6]
        ys = [1.1, 1.9, 3.2, 3.8, 5.1, 6.0]
        fit = ols_fit(xs, ys)
        at_mean = prediction_interval(fit, 3.5, 0.9)
        assert (at_mean.lower + at_mean.upper) / 2 == pytest.approx(np.mean(ys), abs=1e-12)
        widths = [prediction_interval(fit, x0, 0.9).width for x0 in np.linspace(-5, 12, 35)]
        assert min(widths) >= at_mean.width
        right = [prediction_interval(fit, 3.5 + d, 0.9).width for d in np.linspace(0, 10, 21)]
        assert all(a < b for a, b in zip(right, right[1:]))

    def test_needs_three_points(self):
        with pytest.raises(DegenerateInput):
            prediction_interval(ols_fit([1, 2], [1, 3]), 1.5, 0.9)

    @pytest.mark.parametrize("level", [0.0, 1.0, 1.5])
    def test_level_domain(self, level):
        with pytest.raises(DomainError):
            prediction_interval(ols_fit([1, 2, 3], [1, 3, 2]), 1.5, level)

    def test_coverage_monte_carlo(self):
        rng = np.random.default_rng(8080)
        xs = np.array([2.0, 4.0, 5.0, 7.0, 9.0, 12.0])
        hits = 0
        reps = 10_000
        for _ in range(reps):
            ys = 1.0 + 0.5 * xs + rng.normal(0, 1, xs.size)
            fit = ols_fit(xs, ys)
            x0 = rng.uniform(0, 14)
            y0 = 1.0 + 0.5 * x0 + rng.normal()
            hits += prediction_interval(fit, x0, 0.90).contains(y0)
        assert abs(hits / reps - 0.90) <= 0.03

    def test_width_nonincreasing_in_n(self):
        # s^2 fluctuates per sample, so compare mean widths over nested samples.
        rng = np.random.default_rng(4)
        sizes = (4, 8, 16, 64, 256)
        totals = np.zeros(len(sizes))
        for _ in range(300):
            xs = rng.uniform(0, 10, sizes[-1])
            ys = 2 + 0.3 * xs + rng.normal(0, 1, sizes[-1])
            for k, n in enumerate(sizes):
                totals[k] += prediction_interval(ols_fit(xs[:n], ys[:n]), 5.0, 0.9).width
        assert all(a >= b for a, b in zip(totals, totals[1:]))

    def test_interval_rejects_inverted(self):
        with pytest.raises(ValueError):
            Interval(2.0, 1.0, 0.9)
