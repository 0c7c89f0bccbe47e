"""Acceptance gate: nine checks covering the library's load-bearing claims.

Each test prints one ``criterion N PASS`` line (visible under ``pytest -s``)
after its assertions hold, including any runtime budget. Run this file alone
for a quick go/no-go:

    python3 -m pytest tests/test_acceptance.py -v -s
"""

from __future__ import annotations

import dataclasses
import math
import time
from datetime import datetime, timezone

import numpy as np

from loadbench.cli import main as cli_main
from loadbench.forecasters import (
    fit_segment_heads,
    fit_token_sampler,
    sample_segment_paths,
    sample_token_paths,
)
from loadbench.gp import (
    KernelSpec,
    gp_fit,
    gp_posterior,
    gp_predict,
    kernel_matrix,
    log_marginal_likelihood,
    log_marginal_likelihood_grad,
    time_features,
)
from loadbench.metrics import mae, quantile_loss
from loadbench.series import (
    LoadSeries,
    WindowSpec,
    generate_synthetic,
    make_windows,
)
from loadbench.svr import (
    dual_objective,
    kkt_violation,
    lag_feature_matrix,
    solve_svr_dual,
    svr_fit,
    svr_predict,
)
from loadbench.tokenization import (
    SegmentCodec,
    detokenize,
    fit_quantization_codec,
    segment,
    tokenize,
)

START = datetime(2013, 1, 1, tzinfo=timezone.utc)


def make_series(values):
    return LoadSeries(START, 60, np.asarray(values, dtype=np.float64))


def report(number: int, summary: str, elapsed: float | None = None) -> None:
    suffix = f" [{elapsed:.2f}s]" if elapsed is not None else ""
    print(f"criterion {number} PASS: {summary}{suffix}")


class TestAcceptance:
    def test_criterion_1_quantile_loss_is_half_mae(self):
        started = time.perf_counter()
        rng = np.random.default_rng(42)
        for _ in range(1000):
            n = int(rng.integers(1, 50))
            scale = float(rng.uniform(0.5, 3.0))
            actual = rng.normal(0.0, scale, n)
            predicted = rng.normal(0.0, scale, n)
            gap = abs(quantile_loss(actual, predicted, 0.5)
                      - mae(actual, predicted) / 2.0)
            assert gap <= 1e-12
        elapsed = time.perf_counter() - started
        assert elapsed < 1.0
        report(1, "QL_0.5 = MAE/2 within 1e-12 on 1000 random pairs", elapsed)

    def test_criterion_2_protocol_shape(self):
        spec = WindowSpec()
        expected = {60: (72, 24), 30: (144, 48), 15: (288, 96)}
        for resolution, (context, horizon) in expected.items():
            assert spec.context_steps(resolution) == context
            assert spec.horizon_steps(resolution) == horizon
        report(2, "default window is 72/24, 144/48, 288/96 steps "
                  "at 60/30/15 minutes")

    def test_criterion_3_token_sampler_non_negative_support(self):
        started = time.perf_counter()
        rng = np.random.default_rng(42)
        for i in range(1000):
            length = int(rng.integers(24, 289))
            style = i % 4
            if style == 0:
                ctx = rng.uniform(0.0, float(rng.uniform(0.5, 100.0)), length)
            elif style == 1:
                ctx = rng.lognormal(0.0, 1.0, length)
            elif style == 2:
                ctx = np.full(length, float(rng.uniform(0.1, 10.0)))
            else:
                ctx = rng.uniform(0.0, 5.0, length)
                ctx[int(rng.integers(0, length))] = 0.0
            model = fit_token_sampler(ctx)
            forecast = sample_token_paths(model, 24, 20, seed=i)
            assert (forecast.sample_paths >= 0.0).all()
            assert np.isin(forecast.sample_paths,
                           model.codec.bin_centers).all()
        elapsed = time.perf_counter() - started
        assert elapsed < 10.0
        report(3, "1000 random contexts: every sample >= 0 and drawn from "
                  "context bin centers", elapsed)

    def test_criterion_4_negative_tail_pathology(self):
        started = time.perf_counter()
        series = generate_synthetic(104, 60, profile="household", seed=0)
        assert series.values.min() > 0.0  # the input is strictly positive
        windows = make_windows(series, WindowSpec())[:100]
        assert len(windows) == 100

        t_negative_windows = 0
        for i, window in enumerate(windows):
            heads = fit_segment_heads(window.context, 24)
            forecast = sample_segment_paths(heads, 24, 10_000, seed=i)
            if (forecast.sample_paths < 0.0).any():
                t_negative_windows += 1
        assert t_negative_windows >= 1

        # A 16-day training prefix of the same series leaves honest
        # posterior uncertainty; samples are never clipped.
        train = make_series(series.values[:16 * 24])
        model = gp_fit(train)
        gp_negative_windows = 0
        for i, window in enumerate(windows):
            forecast = gp_predict(model, window.context, 24, 10_000,
                                  seed=i, start_step=i * 24)
            if (forecast.sample_paths < 0.0).any():
                gp_negative_windows += 1
        assert gp_negative_windows >= 1
        elapsed = time.perf_counter() - started
        report(4, f"strictly positive input, S=10000: student-t heads gave "
                  f"negatives in {t_negative_windows}/100 windows, GP in "
                  f"{gp_negative_windows}/100", elapsed)

    @staticmethod
    def central_difference(spec, X, y, param, h):
        value = getattr(spec, param)
        up = dataclasses.replace(spec, **{param: value * math.exp(h)})
        dn = dataclasses.replace(spec, **{param: value * math.exp(-h)})
        return (log_marginal_likelihood(up, X, y)
                - log_marginal_likelihood(dn, X, y)) / (2 * h)

    def test_criterion_5_gp_numerical_correctness(self):
        started = time.perf_counter()

        # gradients vs central differences, 50 random small instances
        rng = np.random.default_rng(42)
        kinds = ("rbf", "periodic", "sum_rbf_periodic")
        pairs = [("lengthscale", "log_lengthscale"),
                 ("signal_variance", "log_signal_variance"),
                 ("noise_variance", "log_noise_variance")]
        worst_rel = 0.0
        for trial in range(50):
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
            for param, key in pairs:
                fd = self.central_difference(spec, X, y, param, 1e-6)
                rel = abs(fd - grads[key]) / max(abs(fd), abs(grads[key]), 1e-8)
                worst_rel = max(worst_rel, rel)
                assert rel < 1e-5

        # posterior mean vs an independent dense solve, n=5
        for seed in range(5):
            rng = np.random.default_rng(seed)
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
            oracle = values.mean() + Ks.T @ np.linalg.solve(
                K, values - values.mean())
            np.testing.assert_allclose(mean, oracle, atol=1e-8)

        # noiseless fit interpolates its training targets
        t = np.arange(5 * 24)
        targets = np.sin(2 * np.pi * t / 24) + 2.0
        grid = [KernelSpec("periodic", lengthscale=1.0, period_steps=24.0,
                           noise_variance=0.0)]
        model = gp_fit(make_series(targets), kernel_grid=grid)
        fitted_mean, _ = gp_posterior(model, model.train_inputs)
        assert np.abs(fitted_mean - targets).max() < 1e-6

        elapsed = time.perf_counter() - started
        assert elapsed < 30.0
        report(5, f"gradient check worst rel err {worst_rel:.2e} over 50 "
                  f"instances; dense-solve and interpolation oracles hold",
               elapsed)

    def test_criterion_6_svr_optimizer_correctness(self):
        started = time.perf_counter()

        # converged dual vs brute-force pair search, 12-point instances
        rng = np.random.default_rng(42)
        deltas = np.concatenate([np.linspace(-10.0, 10.0, 81),
                                 [-1e-3, 1e-3]])
        for _ in range(3):
            X = rng.uniform(-2.0, 2.0, size=(12, 2))
            K = kernel_matrix(
                KernelSpec("rbf", lengthscale=1.5, signal_variance=2.0), X, X)
            y = rng.normal(0.0, 1.0, 12)
            C, eps = 5.0, 0.15
            beta, _, _ = solve_svr_dual(K, y, C, eps, tol=1e-9)
            base = dual_objective(K, y, beta, eps)
            for i in range(12):
                for j in range(12):
                    if i == j:
                        continue
                    for delta in deltas:
                        trial = beta.copy()
                        trial[i] += delta
                        trial[j] -= delta
                        if np.abs(trial).max() > C:
                            continue
                        assert dual_objective(K, y, trial, eps) - base <= 1e-6

        # noiseless linear data: held-out predictions inside the tube
        steps = np.arange(12 * 24, dtype=np.float64)
        line = make_series(2.0 * steps)
        eps = 0.01
        linear_model = svr_fit(line, epsilon=eps, C=1e4,
                               kernel=KernelSpec("linear",
                                                 signal_variance=1.0),
                               tol=1e-8)
        context = line.values[-3 * 24:]
        prediction = svr_predict(linear_model, context, 24,
                                 start_step=len(line) - 3 * 24)
        truth = 2.0 * np.arange(len(line), len(line) + 24)
        line_err = np.abs(prediction - truth).max()
        assert line_err <= eps + 0.01

        # KKT conditions hold at tolerance after every fit
        tol = 1e-3
        worst_kkt = 0.0
        fits = [(svr_fit(generate_synthetic(8, 60, profile="feeder",
                                            seed=seed), C=C, tol=tol),
                 generate_synthetic(8, 60, profile="feeder", seed=seed))
                for seed, C in ((0, 10.0), (1, 2.0), (2, 50.0))]
        fits.append((linear_model, line))
        for model, train in fits:
            X_raw, y_raw = lag_feature_matrix(train, WindowSpec())
            X = (X_raw - model.feature_mean) / model.feature_std
            y_std = (y_raw - model.y_mean) / model.y_std
            K = kernel_matrix(model.kernel, X, X)
            fit_tol = tol if model is not linear_model else 1e-8
            violation = kkt_violation(K, y_std, model.dual_coefs, model.bias,
                                      model.C, model.epsilon / model.y_std)
            worst_kkt = max(worst_kkt, violation / fit_tol)
            assert violation <= fit_tol

        elapsed = time.perf_counter() - started
        assert elapsed < 30.0
        report(6, f"dual matches brute force; line held-out err "
                  f"{line_err:.4f} <= {eps + 0.01}; worst KKT violation at "
                  f"{worst_kkt:.1%} of fit tolerance", elapsed)

    def test_criterion_7_tokenization_round_trip(self):
        started = time.perf_counter()
        rng = np.random.default_rng(42)
        for _ in range(10):
            ctx = rng.uniform(0.0, float(rng.uniform(1.0, 50.0)), 200)
            codec = fit_quantization_codec(ctx)
            lo, hi = codec.bin_edges[0], codec.bin_edges[-1]
            values = rng.uniform(lo, hi, 1000)
            recon = detokenize(codec, tokenize(codec, values))
            assert (np.abs(recon - values) <= codec.bin_width / 2.0).all()

        values = rng.uniform(0.0, 10.0, 4 * 36)
        parts = segment(SegmentCodec(4), values)
        assert np.array_equal(np.concatenate(parts), values)
        elapsed = time.perf_counter() - started
        assert elapsed < 1.0
        report(7, "10000 values reconstruct within half a bin width; "
                  "segmentation is bit-exact", elapsed)

    def test_criterion_8_end_to_end_determinism(self, tmp_path, capsys):
        started = time.perf_counter()
        data_csv = tmp_path / "series.csv"
        assert cli_main(["synth", "--days", "28", "--resolution", "60",
                         "--profile", "feeder", "--seed", "7",
                         "--out", str(data_csv)]) == 0
        config = tmp_path / "exp.ini"
        config.write_text(f"""\
[experiment]
experiment_id = SY-A-60
resolution_minutes = 60
master_seed = 42

[data]
csv = {data_csv}

[models]
names = token-sampler, segment-dist-t, gp, svr

[output]
csv = results.csv
markdown = results.md
""")
        outputs = {}
        for tag, workers in (("first", 1), ("again", 1), ("wide", 8)):
            out_dir = tmp_path / tag
            assert cli_main(["run", "--config", str(config),
                             "--out", str(out_dir),
                             "--workers", str(workers)]) == 0
            outputs[tag] = ((out_dir / "results.csv").read_bytes(),
                            (out_dir / "results.md").read_bytes())
        capsys.readouterr()
        assert outputs["first"] == outputs["again"]
        assert outputs["first"] == outputs["wide"]
        elapsed = time.perf_counter() - started
        assert elapsed < 300.0
        report(8, "synth -> run (4 models, 28 days): byte-identical tables "
                  "across reruns and worker counts 1/8", elapsed)

    def test_criterion_9_pinball_symmetry(self):
        rng = np.random.default_rng(42)
        for _ in range(1000):
            n = int(rng.integers(1, 50))
            actual = rng.normal(0.0, 1.0, n)
            predicted = rng.normal(0.0, 1.0, n)
            gamma = float(rng.uniform(0.01, 0.99))
            total = (quantile_loss(actual, predicted, gamma)
                     + quantile_loss(actual, predicted, 1.0 - gamma))
            assert abs(total - mae(actual, predicted)) <= 1e-12
        report(9, "QL_gamma + QL_(1-gamma) = MAE within 1e-12 on 1000 "
                  "random triples")
