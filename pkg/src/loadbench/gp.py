"""Gaussian-process regression baseline over calendar features.

A GP is trained on the training split with inputs built from each step's
within-day position and day-of-week phase, so the posterior captures the
daily/weekly load shape. Kernel hyperparameters are chosen by exhaustive log
marginal likelihood comparison over a small grid (no gradient optimizer), and
the factorization is a Cholesky with an escalating-jitter fallback.

Posterior sampling is exact and unclipped: the Gaussian posterior has mass
below zero wherever the variance is large relative to the mean, and those
negative sample paths are part of what this baseline is for.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular

from .errors import FactorizationFailure
from .forecasters import Forecaster, ProbabilisticForecast
from .series import LoadSeries, WindowSpec

JITTER_LADDER = (0.0, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4)
MAX_TRAIN_POINTS = 2000
KERNEL_KINDS = ("rbf", "periodic", "sum_rbf_periodic", "linear")


def _freeze(values: np.ndarray) -> np.ndarray:
    out = np.array(values, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class KernelSpec:
    """Covariance function family plus hyperparameters.

    ``signal_variance`` is the prior variance k(x, x) for every kind (the sum
    kernel splits it evenly between its two terms). ``period_steps`` is the
    period of the periodic term in steps and only that term reads it; it is a
    structural constant (one day), not a tuned hyperparameter.
    """

    kind: str
    lengthscale: float = 1.0
    period_steps: float = 24.0
    signal_variance: float = 1.0
    noise_variance: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"kind must be one of {KERNEL_KINDS}, got {self.kind!r}")
        if self.lengthscale <= 0 or self.period_steps <= 0 or self.signal_variance <= 0:
            raise ValueError("lengthscale, period_steps, signal_variance must be > 0")
        if self.noise_variance < 0:
            raise ValueError("noise_variance must be >= 0")


def time_features(step_indices: np.ndarray, steps_per_day: int) -> np.ndarray:
    """Map absolute step indices to (within-day step, scaled day-of-week).

    The day-of-week coordinate is scaled by steps_per_day/7 so one week spans
    the same feature distance as one day does in the first coordinate.
    """
    steps = np.asarray(step_indices, dtype=np.int64)
    u = (steps % steps_per_day).astype(np.float64)
    w = ((steps // steps_per_day) % 7).astype(np.float64) * (steps_per_day / 7.0)
    return np.column_stack([u, w])


def _sqdist(X1: np.ndarray, X2: np.ndarray) -> np.ndarray:
    diff = X1[:, None, :] - X2[None, :, :]
    return np.sum(diff * diff, axis=-1)


def _rbf_unit(X1, X2, lengthscale):
    return np.exp(-0.5 * _sqdist(X1, X2) / lengthscale**2)


def _periodic_unit(X1, X2, lengthscale, period):
    delta = X1[:, 0][:, None] - X2[:, 0][None, :]
    s = np.sin(np.pi * delta / period)
    return np.exp(-2.0 * s * s / lengthscale**2)


def kernel_matrix(spec: KernelSpec, X1: np.ndarray, X2: np.ndarray) -> np.ndarray:
    """Noise-free covariance between two feature sets."""
    sv = spec.signal_variance
    if spec.kind == "rbf":
        return sv * _rbf_unit(X1, X2, spec.lengthscale)
    if spec.kind == "periodic":
        return sv * _periodic_unit(X1, X2, spec.lengthscale, spec.period_steps)
    if spec.kind == "sum_rbf_periodic":
        return 0.5 * sv * _rbf_unit(X1, X2, spec.lengthscale) + \
            0.5 * sv * _periodic_unit(X1, X2, spec.lengthscale, spec.period_steps)
    return sv * (X1 @ X2.T)  # linear


def gram_matrix(spec: KernelSpec, X: np.ndarray) -> np.ndarray:
    """Training covariance including the noise term."""
    return kernel_matrix(spec, X, X) + spec.noise_variance * np.eye(X.shape[0])


def _chol_with_jitter(A: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor, escalating diagonal jitter until it succeeds."""
    n = A.shape[0]
    for jitter in JITTER_LADDER:
        try:
            return cholesky(A + jitter * np.eye(n), lower=True), jitter
        except LinAlgError:
            continue
    raise FactorizationFailure(
        f"matrix of size {n} not positive definite even with jitter "
        f"{JITTER_LADDER[-1]}"
    )


def log_marginal_likelihood(spec: KernelSpec, X: np.ndarray, y: np.ndarray) -> float:
    """Gaussian log evidence of targets y under the kernel's prior."""
    y = np.asarray(y, dtype=np.float64).ravel()
    L, _ = _chol_with_jitter(gram_matrix(spec, X))
    alpha = cho_solve((L, True), y)
    return float(
        -0.5 * y @ alpha
        - np.sum(np.log(np.diag(L)))
        - 0.5 * y.size * math.log(2.0 * math.pi)
    )


def log_marginal_likelihood_grad(
    spec: KernelSpec, X: np.ndarray, y: np.ndarray
) -> tuple[float, dict[str, float]]:
    """Log marginal likelihood and its gradient w.r.t. log-hyperparameters.

    Covers log(lengthscale), log(signal_variance), log(noise_variance); the
    period is a structural constant. Uses the trace identity
    ``d LML = 1/2 tr((alpha alpha' - K^-1) dK)``.
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    n = y.size
    K_sig = kernel_matrix(spec, X, X)
    K = K_sig + spec.noise_variance * np.eye(n)
    L, _ = _chol_with_jitter(K)
    alpha = cho_solve((L, True), y)
    lml = float(
        -0.5 * y @ alpha
        - np.sum(np.log(np.diag(L)))
        - 0.5 * n * math.log(2.0 * math.pi)
    )
    K_inv = cho_solve((L, True), np.eye(n))
    M = np.outer(alpha, alpha) - K_inv

    def half_trace(dK: np.ndarray) -> float:
        return float(0.5 * np.sum(M * dK))

    ls, p, sv = spec.lengthscale, spec.period_steps, spec.signal_variance
    if spec.kind == "rbf":
        d_ls = K_sig * (_sqdist(X, X) / ls**2)
    elif spec.kind == "periodic":
        s2 = np.sin(np.pi * (X[:, 0][:, None] - X[:, 0][None, :]) / p) ** 2
        d_ls = K_sig * (4.0 * s2 / ls**2)
    elif spec.kind == "sum_rbf_periodic":
        rbf_part = 0.5 * sv * _rbf_unit(X, X, ls)
        per_part = 0.5 * sv * _periodic_unit(X, X, ls, p)
        s2 = np.sin(np.pi * (X[:, 0][:, None] - X[:, 0][None, :]) / p) ** 2
        d_ls = rbf_part * (_sqdist(X, X) / ls**2) + per_part * (4.0 * s2 / ls**2)
    else:  # linear: no lengthscale dependence
        d_ls = np.zeros_like(K_sig)

    grads = {
        "log_lengthscale": half_trace(d_ls),
        "log_signal_variance": half_trace(K_sig),
        "log_noise_variance": half_trace(spec.noise_variance * np.eye(n)),
    }
    return lml, grads


@dataclass(frozen=True)
class GPModel:
    """Fitted GP: kernel, (subsampled) training set, and solved factors.

    ``train_targets`` are stored centered; ``y_offset`` restores the level.
    ``jitter`` is the diagonal amount the factorization actually needed; the
    factor reproduces ``K + (noise_variance + jitter) I``.
    """

    kernel: KernelSpec
    train_inputs: np.ndarray
    train_targets: np.ndarray
    chol_factor: np.ndarray
    alpha: np.ndarray
    y_offset: float
    jitter: float
    steps_per_day: int
    window: WindowSpec = field(default_factory=WindowSpec)

    def __post_init__(self) -> None:
        object.__setattr__(self, "train_inputs", _freeze(self.train_inputs))
        object.__setattr__(self, "train_targets", _freeze(self.train_targets))
        object.__setattr__(self, "chol_factor", _freeze(self.chol_factor))
        object.__setattr__(self, "alpha", _freeze(self.alpha))
        reconstructed = self.chol_factor @ self.chol_factor.T
        expected = gram_matrix(self.kernel, self.train_inputs)
        expected += self.jitter * np.eye(expected.shape[0])
        rel = np.linalg.norm(reconstructed - expected) / max(
            np.linalg.norm(expected), 1e-300
        )
        if rel > 1e-8:
            raise FactorizationFailure(
                f"Cholesky factor does not reproduce the gram matrix "
                f"(relative error {rel:.2e})"
            )


def subsample_indices(n: int, cap: int = MAX_TRAIN_POINTS) -> np.ndarray:
    """Uniform-stride indices keeping at most ``cap`` of ``n`` points."""
    if n <= cap:
        return np.arange(n)
    stride = math.ceil(n / cap)
    return np.arange(0, n, stride)


def default_kernel_grid(steps_per_day: int, target_variance: float) -> list[KernelSpec]:
    """Small day-structure grid: two lengthscales crossed with two noise levels."""
    sv = max(float(target_variance), 1e-6)
    grid = []
    for lengthscale in (steps_per_day / 4.0, float(steps_per_day)):
        for noise_frac in (0.05, 0.2):
            grid.append(
                KernelSpec(
                    kind="sum_rbf_periodic",
                    lengthscale=lengthscale,
                    period_steps=float(steps_per_day),
                    signal_variance=sv,
                    noise_variance=noise_frac * sv,
                )
            )
    return grid


def gp_fit(train: LoadSeries, spec: WindowSpec = WindowSpec(),
           kernel_grid: list[KernelSpec] | None = None) -> GPModel:
    """Select the grid kernel with the highest log marginal likelihood and fit.

    Training points beyond the cap are thinned by uniform stride before any
    factorization so the O(n^3) solve stays tractable. Targets are centered;
    the offset is restored at prediction time.
    """
    idx = subsample_indices(len(train))
    X = time_features(idx, train.steps_per_day)
    y_raw = train.values[idx]
    y_offset = float(y_raw.mean())
    y = y_raw - y_offset
    if kernel_grid is None:
        kernel_grid = default_kernel_grid(train.steps_per_day, float(y.var()))
    if not kernel_grid:
        raise ValueError("kernel_grid must be non-empty")

    best_kernel, best_lml = None, -np.inf
    for candidate in kernel_grid:
        lml = log_marginal_likelihood(candidate, X, y)
        if lml > best_lml:
            best_kernel, best_lml = candidate, lml

    L, jitter = _chol_with_jitter(gram_matrix(best_kernel, X))
    alpha = cho_solve((L, True), y)
    return GPModel(
        kernel=best_kernel,
        train_inputs=X,
        train_targets=y,
        chol_factor=L,
        alpha=alpha,
        y_offset=y_offset,
        jitter=jitter,
        steps_per_day=train.steps_per_day,
        window=spec,
    )


def gp_posterior(model: GPModel, query_features: np.ndarray
                 ) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and covariance at arbitrary feature rows.

    The covariance diagonal is clamped at a -1e-10 numerical floor; anything
    below that signals a broken factorization and raises.
    """
    Xq = np.asarray(query_features, dtype=np.float64)
    Ks = kernel_matrix(model.kernel, model.train_inputs, Xq)
    mean = model.y_offset + Ks.T @ model.alpha
    v = solve_triangular(model.chol_factor, Ks, lower=True)
    cov = kernel_matrix(model.kernel, Xq, Xq) - v.T @ v
    cov = 0.5 * (cov + cov.T)
    diag = np.diag(cov).copy()
    if diag.min() < -1e-10:
        raise FactorizationFailure(
            f"posterior variance {diag.min():.2e} below the numerical floor"
        )
    np.fill_diagonal(cov, np.maximum(diag, 0.0))
    return mean, cov


def gp_predict(model: GPModel, context: np.ndarray, horizon_H: int,
               num_samples_S: int, seed: int,
               start_step: int = 0) -> ProbabilisticForecast:
    """Joint posterior samples over the horizon following the context.

    The context fixes *where* the horizon sits in calendar time
    (``start_step`` is the absolute index of its first value); the GP
    conditions on its training split, not on the context values. Samples are
    drawn through the covariance's eigenfactor with negative eigenvalues
    clipped at zero, so zero-variance directions produce exactly constant
    samples. No clipping of negative values.
    """
    if horizon_H < 1 or num_samples_S < 1:
        raise ValueError("horizon_H and num_samples_S must be >= 1")
    context = np.asarray(context, dtype=np.float64).ravel()
    query_steps = start_step + context.size + np.arange(horizon_H)
    Xq = time_features(query_steps, model.steps_per_day)
    mean, cov = gp_posterior(model, Xq)
    try:
        eigvals, eigvecs = np.linalg.eigh(cov)
    except LinAlgError as exc:
        raise FactorizationFailure("posterior covariance eigensolve failed") from exc
    floor = -1e-8 * max(float(eigvals.max()), 1.0)
    if eigvals.min() < floor:
        raise FactorizationFailure(
            f"posterior covariance has eigenvalue {eigvals.min():.2e}"
        )
    factor = eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((horizon_H, num_samples_S))
    paths = (mean[:, None] + factor @ noise).T
    return ProbabilisticForecast(paths)


class GPForecaster(Forecaster):
    """Trained, probabilistic: GP regression on calendar features."""

    name = "gp"
    probabilistic = True
    requires_training = True

    def __init__(self, kernel_grid: list[KernelSpec] | None = None,
                 window: WindowSpec = WindowSpec()):
        self.kernel_grid = kernel_grid
        self.window = window
        self._model: GPModel | None = None

    @property
    def model(self) -> GPModel:
        if self._model is None:
            raise ValueError("GPForecaster.predict requires a fit() call first")
        return self._model

    def fit(self, train: LoadSeries) -> "GPForecaster":
        self._model = gp_fit(train, self.window, self.kernel_grid)
        return self

    def predict(self, context: np.ndarray, horizon_H: int, num_samples_S: int,
                seed: int, start_step: int = 0) -> ProbabilisticForecast:
        return gp_predict(self.model, context, horizon_H, num_samples_S,
                          seed, start_step)
