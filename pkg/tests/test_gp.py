"""Tests for the GP baseline: kernels, likelihood, posterior, sampling."""

from __future__ import annotations

import dataclasses
import math
from datetime import datetime, timezone

import numpy as np
import pytest

from loadbench.errors import FactorizationFailure
from loadbench.gp import (
    GPForecaster,
    GPModel,
    KernelSpec,
    default_kernel_grid,
    gp_fit,
    gp_posterior,
    gp_predict,
    gram_matrix,
    kernel_matrix,
    log_marginal_likelihood,
    log_marginal_likelihood_grad,
    subsample_indices,
    time_features,
)
from loadbench.series import LoadSeries, generate_synthetic

T0 = datetime(2013, 1, 1, tzinfo=timezone.utc)


def make_series(values):
    return LoadSeries(start_time=T0, resolution_minutes=60,
                      values=np.asarray(values, dtype=float))


class TestKernelSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            KernelSpec("matern")
        with pytest.raises(ValueError):
            KernelSpec("rbf", lengthscale=0.0)
        with pytest.raises(ValueError):
            KernelSpec("rbf", noise_variance=-0.1)

    def test_defaults(self):
        spec = KernelSpec("rbf")
        assert spec.signal_variance == 1.0
        assert spec.noise_variance == 0.0


class TestTimeFeatures:
    def test_within_day_and_weekly_wrap(self):
        X = time_features(np.arange(24 * 8), 24)
        assert X.shape == (24 * 8, 2)
        np.testing.assert_array_equal(X[:24, 0], np.arange(24.0))
        np.testing.assert_array_equal(X[24:48, 0], np.arange(24.0))
        # day-of-week phase wraps after 7 days
        np.testing.assert_array_equal(X[24 * 7], X[0])
        assert X[24, 1] == pytest.approx(24 / 7)


class TestKernelMatrix:
    KINDS = ("rbf", "periodic", "sum_rbf_periodic")

    def test_prior_variance_on_diagonal(self):
        rng = np.random.default_rng(42)
        X = rng.uniform(0, 24, size=(10, 2))
        for kind in self.KINDS:
            spec = KernelSpec(kind, lengthscale=3.0, signal_variance=2.5)
            K = kernel_matrix(spec, X, X)
            np.testing.assert_allclose(np.diag(K), 2.5, rtol=1e-12)

    def test_symmetric_and_near_psd(self):
        rng = np.random.default_rng(42)
        for kind in self.KINDS:
            spec = KernelSpec(kind, lengthscale=2.0)
            X = rng.uniform(0, 24, size=(15, 2))
            K = kernel_matrix(spec, X, X)
            np.testing.assert_allclose(K, K.T, atol=1e-12)
            assert np.linalg.eigvalsh(K).min() > -1e-10

    def test_rbf_decays_with_distance(self):
        spec = KernelSpec("rbf", lengthscale=1.0)
        x0 = np.zeros((1, 2))
        near = kernel_matrix(spec, x0, np.array([[0.5, 0.0]]))[0, 0]
        far = kernel_matrix(spec, x0, np.array([[5.0, 0.0]]))[0, 0]
        assert near > far

    def test_periodic_repeats_at_period(self):
        spec = KernelSpec("periodic", lengthscale=1.0, period_steps=24.0)
        x0 = np.zeros((1, 2))
        shifted = np.array([[24.0, 0.0]])
        assert kernel_matrix(spec, x0, shifted)[0, 0] == pytest.approx(
            spec.signal_variance, abs=1e-12
        )

    def test_linear_kernel(self):
        spec = KernelSpec("linear", signal_variance=2.0)
        X1 = np.array([[1.0, 2.0]])
        X2 = np.array([[3.0, 4.0]])
        assert kernel_matrix(spec, X1, X2)[0, 0] == pytest.approx(2.0 * 11.0)

    def test_gram_adds_noise(self):
        spec = KernelSpec("rbf", noise_variance=0.3)
        X = np.zeros((3, 2))
        K = gram_matrix(spec, X)
        np.testing.assert_allclose(np.diag(K), 1.3)


class TestLogMarginalLikelihood:
    def test_closed_form_single_point(self):
        spec = KernelSpec("rbf", lengthscale=1.0, signal_variance=1.0,
                          noise_variance=0.0)
        lml = log_marginal_likelihood(spec, np.zeros((1, 2)), np.zeros(1))
        assert lml == pytest.approx(-0.5 * math.log(2 * math.pi), abs=1e-12)

    def test_zero_targets_maximize_data_fit(self):
        rng = np.random.default_rng(42)
        spec = KernelSpec("rbf", lengthscale=2.0, noise_variance=0.1)
        X = rng.uniform(0, 10, size=(8, 2))
        lml_zero = log_marginal_likelihood(spec, X, np.zeros(8))
        for _ in range(10):
            assert lml_zero >= log_marginal_likelihood(spec, X, rng.normal(size=8))

    @staticmethod
    def central_difference(spec, X, y, param, h):
        value = getattr(spec, param)
        up = dataclasses.replace(spec, **{param: value * math.exp(h)})
        dn = dataclasses.replace(spec, **{param: value * math.exp(-h)})
        return (log_marginal_likelihood(up, X, y)
                - log_marginal_likelihood(dn, X, y)) / (2 * h)

    PARAM_PAIRS = [("lengthscale", "log_lengthscale"),
                   ("signal_variance", "log_signal_variance"),
                   ("noise_variance", "log_noise_variance")]

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(42)
        kinds = ("rbf", "periodic", "sum_rbf_periodic")
        for trial in range(15):
            n = int(rng.integers(3, 21))
            spec = KernelSpec(
                kinds[trial % 3],
                lengthscale=float(rng.uniform(0.5, 5)),
                period_steps=float(rng.uniform(3, 30)),
                signal_variance=float(rng.uniform(0.3, 3)),
                noise_variance=float(rng.uniform(1e-3, 1e-1)),
            )
            X = rng.uniform(0, 24, size=(n, 2))
            y = rng.normal(size=n)
            _, grads = log_marginal_likelihood_grad(spec, X, y)
            for param, key in self.PARAM_PAIRS:
                fd = self.central_difference(spec, X, y, param, 1e-6)
                denom = max(abs(fd), abs(grads[key]), 1e-8)
                assert abs(fd - grads[key]) / denom < 1e-5

    def test_linear_kernel_gradients(self):
        # the linear gram is rank-2 plus noise, so its likelihood evaluations
        # carry more roundoff; a larger step keeps the check roundoff-free
        rng = np.random.default_rng(42)
        for _ in range(5):
            spec = KernelSpec("linear",
                              signal_variance=float(rng.uniform(0.3, 3)),
                              noise_variance=float(rng.uniform(1e-2, 1e-1)))
            X = rng.uniform(0, 24, size=(10, 2))
            y = rng.normal(size=10)
            _, grads = log_marginal_likelihood_grad(spec, X, y)
            assert grads["log_lengthscale"] == 0.0
            for param, key in self.PARAM_PAIRS[1:]:
                fd = self.central_difference(spec, X, y, param, 1e-4)
                denom = max(abs(fd), abs(grads[key]), 1e-8)
                assert abs(fd - grads[key]) / denom < 1e-4


class TestGpFit:
    def test_single_entry_grid_selected(self):
        spec = KernelSpec("rbf", lengthscale=2.0, noise_variance=0.1)
        model = gp_fit(make_series(np.arange(1.0, 25.0)), kernel_grid=[spec])
        assert model.kernel == spec

    def test_selection_is_argmax_over_grid(self):
        train = generate_synthetic(7, 60, "feeder", seed=2)
        grid = default_kernel_grid(24, float(train.values.var())) + [
            KernelSpec("rbf", lengthscale=1.0, signal_variance=0.01,
                       noise_variance=0.5),
        ]
        model = gp_fit(train, kernel_grid=grid)
        lmls = [
            log_marginal_likelihood(k, model.train_inputs, model.train_targets)
            for k in grid
        ]
        assert model.kernel == grid[int(np.argmax(lmls))]

    def test_subsample_cap(self):
        assert len(subsample_indices(1500)) == 1500
        assert len(subsample_indices(5000)) <= 2000
        long_series = generate_synthetic(150, 60, "feeder", seed=0)  # 3600 steps
        model = gp_fit(long_series)
        assert model.train_inputs.shape[0] <= 2000

    def test_empty_grid(self):
        with pytest.raises(ValueError):
            gp_fit(make_series(np.ones(24)), kernel_grid=[])

    def test_factor_reproduces_gram(self):
        train = generate_synthetic(5, 60, "household", seed=1)
        model = gp_fit(train)
        reconstructed = model.chol_factor @ model.chol_factor.T
        expected = gram_matrix(model.kernel, model.train_inputs)
        expected += model.jitter * np.eye(expected.shape[0])
        rel = np.linalg.norm(reconstructed - expected) / np.linalg.norm(expected)
        assert rel < 1e-8

    def test_model_rejects_wrong_factor(self):
        train = make_series(np.arange(1.0, 25.0))
        model = gp_fit(train, kernel_grid=[KernelSpec("rbf", noise_variance=0.1)])
        with pytest.raises(FactorizationFailure):
            GPModel(
                kernel=model.kernel,
                train_inputs=model.train_inputs,
                train_targets=model.train_targets,
                chol_factor=np.eye(model.chol_factor.shape[0]),
                alpha=model.alpha,
                y_offset=model.y_offset,
                jitter=model.jitter,
                steps_per_day=24,
            )


class TestGpPosterior:
    def test_dense_solve_oracle(self):
        rng = np.random.default_rng(1)
        spec = KernelSpec("rbf", lengthscale=2.0, signal_variance=1.5,
                          noise_variance=0.1)
        values = rng.uniform(0.5, 3.0, size=5)
        model = gp_fit(make_series(values), kernel_grid=[spec])
        Xq = time_features(np.arange(5, 9), 24)
        mean, _ = gp_posterior(model, Xq)

        X = time_features(np.arange(5), 24)
        K = kernel_matrix(spec, X, X)
        K += (spec.noise_variance + model.jitter) * np.eye(5)
        Ks = kernel_matrix(spec, X, Xq)
        centered = values - values.mean()
        oracle = values.mean() + Ks.T @ np.linalg.solve(K, centered)
        np.testing.assert_allclose(mean, oracle, atol=1e-8)

    def test_noiseless_posterior_interpolates(self):
        t = np.arange(5 * 24)
        targets = np.sin(2 * np.pi * t / 24) + 2.0
        grid = [
            KernelSpec("periodic", lengthscale=1.0, period_steps=24.0,
                       noise_variance=0.0),
            KernelSpec("rbf", lengthscale=6.0, noise_variance=0.1),
        ]
        model = gp_fit(make_series(targets), kernel_grid=grid)
        assert model.kernel.noise_variance == 0.0
        mean, cov = gp_posterior(model, model.train_inputs)
        assert np.abs(mean - targets).max() < 1e-6
        assert np.diag(cov).max() < 1e-8

    def test_far_query_reverts_to_prior(self):
        rng = np.random.default_rng(3)
        spec = KernelSpec("rbf", lengthscale=1.0, signal_variance=2.5,
                          noise_variance=0.01)
        model = gp_fit(make_series(rng.uniform(1, 2, size=24)), kernel_grid=[spec])
        mean, cov = gp_posterior(model, np.array([[1000.0, 500.0]]))
        assert cov[0, 0] == pytest.approx(2.5, abs=1e-6)
        assert mean[0] == pytest.approx(model.y_offset, abs=1e-6)

    def test_variance_never_meaningfully_negative(self):
        rng = np.random.default_rng(4)
        train = generate_synthetic(7, 60, "feeder", seed=4)
        model = gp_fit(train)
        Xq = time_features(rng.integers(0, 24 * 60, size=200), 24)
        _, cov = gp_posterior(model, Xq)
        assert np.diag(cov).min() >= 0.0


class TestGpPredict:
    def sin_model(self):
        t = np.arange(5 * 24)
        targets = np.sin(2 * np.pi * t / 24) + 2.0
        grid = [KernelSpec("periodic", lengthscale=1.0, period_steps=24.0,
                           noise_variance=0.0)]
        return gp_fit(make_series(targets), kernel_grid=grid), targets

    def test_interpolating_model_samples_collapse(self):
        # posterior variance at training features is <= 1e-8 (jitter-level),
        # so every sample path tracks the target within sampling precision
        model, targets = self.sin_model()
        f = gp_predict(model, np.zeros(72), 24, 50, seed=3, start_step=0)
        expected = targets[72:96]
        assert np.abs(f.sample_paths - expected[None, :]).max() < 1e-3

    def test_deterministic_given_seed(self):
        model, _ = self.sin_model()
        a = gp_predict(model, np.zeros(72), 24, 10, seed=9)
        b = gp_predict(model, np.zeros(72), 24, 10, seed=9)
        np.testing.assert_array_equal(a.sample_paths, b.sample_paths)
        c = gp_predict(model, np.zeros(72), 24, 10, seed=10)
        assert not np.array_equal(a.sample_paths, c.sample_paths)

    def test_negative_samples_not_clipped(self):
        # strictly positive spiky series: posterior uncertainty reaches below 0
        series = generate_synthetic(28, 60, "household", seed=0)
        train = make_series(series.values[: 16 * 24])
        model = gp_fit(train)
        f = gp_predict(model, series.values[16 * 24 : 16 * 24 + 72],
                       24, 10_000, seed=5, start_step=16 * 24)
        assert (series.values > 0).all()
        assert (f.sample_paths < 0).any()

    def test_start_step_moves_calendar_position(self):
        model, _ = self.sin_model()
        a = gp_predict(model, np.zeros(72), 24, 5, seed=1, start_step=0)
        b = gp_predict(model, np.zeros(72), 24, 5, seed=1, start_step=12)
        assert not np.allclose(a.sample_paths, b.sample_paths)

    def test_validation(self):
        model, _ = self.sin_model()
        with pytest.raises(ValueError):
            gp_predict(model, np.zeros(72), 0, 5, seed=1)
        with pytest.raises(ValueError):
            gp_predict(model, np.zeros(72), 24, 0, seed=1)


class TestGPForecaster:
    def test_requires_fit(self):
        with pytest.raises(ValueError):
            GPForecaster().predict(np.zeros(72), 24, 5, seed=0)

    def test_fit_then_predict(self):
        train = generate_synthetic(7, 60, "feeder", seed=6)
        model = GPForecaster()
        assert model.fit(train) is model
        f = model.predict(train.values[:72], 24, 8, seed=2, start_step=0)
        assert f.sample_paths.shape == (8, 24)

    def test_contract_flags(self):
        model = GPForecaster()
        assert model.probabilistic
        assert model.requires_training
        assert model.name == "gp"
