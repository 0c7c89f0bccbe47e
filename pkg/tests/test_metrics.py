"""Tests for error metrics, identities, and window scoring."""

from __future__ import annotations

import numpy as np
import pytest

from loadbench.errors import (
    EmptyList,
    EmptyVector,
    GammaOutOfRange,
    HorizonMismatch,
    InconsistentFields,
    LengthMismatch,
    TooFewSamples,
)
from loadbench.forecasters import ProbabilisticForecast
from loadbench.metrics import (
    WindowScore,
    aggregate_scores,
    mae,
    quantile_loss,
    rmse,
    score_window,
)

A = np.array([1.0, 2.0, 3.0])
P = np.array([2.0, 2.0, 2.0])


class TestMae:
    def test_known_value(self):
        assert mae(A, P) == pytest.approx(2.0 / 3.0, abs=1e-15)

    def test_perfect(self):
        assert mae(A, A) == 0.0

    def test_symmetric(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            a, b = rng.normal(size=(2, 17))
            assert mae(a, b) == mae(b, a)

    def test_errors(self):
        with pytest.raises(LengthMismatch):
            mae(A, A[:2])
        with pytest.raises(EmptyVector):
            mae(np.array([]), np.array([]))


class TestRmse:
    def test_known_value(self):
        assert rmse(A, P) == pytest.approx(np.sqrt(2.0 / 3.0), abs=1e-15)

    def test_perfect(self):
        assert rmse(A, A) == 0.0

    def test_dominates_mae(self):
        rng = np.random.default_rng(42)
        for _ in range(1000):
            a, b = rng.normal(size=(2, int(rng.integers(1, 30))))
            assert rmse(a, b) >= mae(a, b) - 1e-14

    def test_errors(self):
        with pytest.raises(LengthMismatch):
            rmse(A, A[:1])
        with pytest.raises(EmptyVector):
            rmse(np.array([]), np.array([]))


class TestQuantileLoss:
    def test_median_level_known_value(self):
        assert quantile_loss(A, P, 0.5) == pytest.approx(1.0 / 3.0, abs=1e-15)

    def test_level_09_known_value(self):
        # over by 1 at t=0 (0.1 weight), exact at t=1, under by 1 at t=2 (0.9)
        assert quantile_loss(A, P, 0.9) == pytest.approx(1.0 / 3.0, abs=1e-15)

    def test_perfect_prediction(self):
        for gamma in (0.1, 0.5, 0.9):
            assert quantile_loss(A, A, gamma) == 0.0

    def test_half_mae_identity(self):
        rng = np.random.default_rng(42)
        for _ in range(1000):
            a, p = rng.normal(scale=5.0, size=(2, int(rng.integers(1, 40))))
            assert abs(quantile_loss(a, p, 0.5) - mae(a, p) / 2.0) <= 1e-12

    def test_pinball_symmetry_identity(self):
        rng = np.random.default_rng(42)
        for _ in range(1000):
            a, p = rng.normal(scale=3.0, size=(2, int(rng.integers(1, 40))))
            gamma = float(rng.uniform(0.01, 0.99))
            total = quantile_loss(a, p, gamma) + quantile_loss(a, p, 1.0 - gamma)
            assert abs(total - mae(a, p)) <= 1e-12

    def test_asymmetry_direction(self):
        # under-prediction at high gamma costs more than over-prediction
        actual = np.array([10.0])
        assert quantile_loss(actual, np.array([9.0]), 0.9) > quantile_loss(
            actual, np.array([11.0]), 0.9
        )

    def test_gamma_out_of_range(self):
        for gamma in (0.0, 1.0, -0.1, 1.7):
            with pytest.raises(GammaOutOfRange):
                quantile_loss(A, P, gamma)


class TestMetricInvariances:
    def test_translation_invariance(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            a, p = rng.normal(size=(2, 12))
            c = float(rng.normal(scale=10))
            assert mae(a + c, p + c) == pytest.approx(mae(a, p), abs=1e-12)
            assert rmse(a + c, p + c) == pytest.approx(rmse(a, p), abs=1e-12)
            assert quantile_loss(a + c, p + c, 0.3) == pytest.approx(
                quantile_loss(a, p, 0.3), abs=1e-12
            )

    def test_linear_scaling(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            a, p = rng.normal(size=(2, 12))
            lam = float(rng.uniform(0.1, 10))
            assert mae(lam * a, lam * p) == pytest.approx(lam * mae(a, p), rel=1e-12)
            assert rmse(lam * a, lam * p) == pytest.approx(lam * rmse(a, p), rel=1e-12)
            assert quantile_loss(lam * a, lam * p, 0.7) == pytest.approx(
                lam * quantile_loss(a, p, 0.7), rel=1e-12
            )


class TestWindowScore:
    def test_quantiles_all_or_none(self):
        with pytest.raises(InconsistentFields):
            WindowScore(window_id="w", mae=1.0, rmse=1.0, q10=0.1)

    def test_rejects_impossible_rmse(self):
        with pytest.raises(ValueError):
            WindowScore(window_id="w", mae=2.0, rmse=1.0)

    def test_is_probabilistic(self):
        point = WindowScore(window_id="w", mae=1.0, rmse=1.0)
        prob = WindowScore(window_id="w", mae=1.0, rmse=1.0, q10=0.1, q50=0.5, q90=0.1)
        assert not point.is_probabilistic
        assert prob.is_probabilistic


class TestScoreWindow:
    def test_degenerate_forecast_q50_is_half_mae(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            target = rng.uniform(0, 5, size=24)
            path = rng.uniform(0, 5, size=24)
            f = ProbabilisticForecast(np.tile(path, (10, 1)))
            score = score_window(target, f, window_id="w0")
            assert score.q50 == pytest.approx(score.mae / 2.0, abs=1e-12)
            assert score.is_probabilistic

    def test_point_forecast_has_no_quantiles(self):
        score = score_window(A, P, window_id="w1")
        assert score.q10 is None and score.q50 is None and score.q90 is None
        assert score.mae == pytest.approx(2.0 / 3.0)

    def test_single_sample_forecast_rejected(self):
        f = ProbabilisticForecast(np.ones((1, 3)))
        with pytest.raises(TooFewSamples):
            score_window(A, f)

    def test_horizon_mismatch(self):
        f = ProbabilisticForecast(np.ones((4, 5)))
        with pytest.raises(HorizonMismatch):
            score_window(A, f)
        with pytest.raises(HorizonMismatch):
            score_window(A, np.ones(5))


class TestAggregateScores:
    def make(self, value, probabilistic=True):
        q = {"q10": value, "q50": value, "q90": value} if probabilistic else {}
        return WindowScore(window_id="w", mae=value, rmse=value, **q)

    def test_single_score_identity(self):
        s = self.make(0.7)
        assert aggregate_scores([s]) is s

    def test_mean_of_two(self):
        agg = aggregate_scores([self.make(0.2), self.make(0.4)])
        assert agg.mae == pytest.approx(0.3)
        assert agg.rmse == pytest.approx(0.3)
        assert agg.q50 == pytest.approx(0.3)

    def test_point_scores_stay_point(self):
        agg = aggregate_scores([self.make(0.2, False), self.make(0.4, False)])
        assert agg.q10 is None
        assert agg.mae == pytest.approx(0.3)

    def test_empty(self):
        with pytest.raises(EmptyList):
            aggregate_scores([])

    def test_mixed_presence(self):
        with pytest.raises(InconsistentFields):
            aggregate_scores([self.make(0.2, True), self.make(0.4, False)])
