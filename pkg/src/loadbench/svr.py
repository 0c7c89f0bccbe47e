"""Epsilon-insensitive support-vector regression baseline.

The dual problem is solved by a from-scratch SMO loop over the doubled
variable vector (alpha, alpha*): each iteration picks the maximal-violating
pair under the equality constraint, takes the exact two-variable Newton step
clipped to the box, and updates a cached kernel-times-coefficients vector.
Convergence is declared when the duality gap proxy m - M drops below the
tolerance, which bounds every KKT violation by tol/2.

Features give the model the same information budget as the zero-shot
forecasters: loads lagged by one, two, and three whole days plus a sin/cos
encoding of time-of-day, all z-scored (targets standardized too). Multi-step
prediction is recursive — once the horizon outruns the shortest lag, earlier
predictions feed later feature rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientContext, NonConvergence, SeriesTooShort
from .forecasters import Forecaster
from .gp import KernelSpec, kernel_matrix, subsample_indices
from .series import LoadSeries, WindowSpec

DEFAULT_C = 10.0
DEFAULT_TOL = 1e-3
DEFAULT_MAX_ITER = 100_000


def _freeze(values: np.ndarray) -> np.ndarray:
    out = np.array(values, dtype=np.float64)
    out.setflags(write=False)
    return out


def solve_svr_dual(K: np.ndarray, y: np.ndarray, C: float, epsilon: float,
                   tol: float = DEFAULT_TOL,
                   max_iter: int = DEFAULT_MAX_ITER) -> tuple[np.ndarray, float, int]:
    """SMO on the epsilon-insensitive dual; returns (beta, bias, iterations).

    ``beta = alpha - alpha*`` with both halves boxed to [0, C]. Pair selection
    is maximal violation: the largest and smallest feasible values of the
    (sign-adjusted) gradient. The two-variable subproblem has curvature
    ``K_ii + K_jj - 2 K_ij``; a zero-curvature pair (duplicate rows, or an
    alpha/alpha* overlap on one point) still makes progress by moving to the
    nearest box wall.

    Raises
    ------
    NonConvergence
        If the violation gap is still >= tol after max_iter iterations.
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    n = y.size
    if K.shape != (n, n):
        raise ValueError(f"kernel matrix {K.shape} does not match {n} targets")
    alpha = np.zeros(n)
    alpha_star = np.zeros(n)
    beta = np.zeros(n)
    k_beta = np.zeros(n)

    for iteration in range(max_iter):
        margin = y - k_beta
        mval = np.concatenate([margin - epsilon, margin + epsilon])
        up = np.concatenate([alpha < C, alpha_star > 0])
        low = np.concatenate([alpha > 0, alpha_star < C])

        up_vals = np.where(up, mval, -np.inf)
        low_vals = np.where(low, mval, np.inf)
        i = int(np.argmax(up_vals))
        j = int(np.argmin(low_vals))
        m, M = up_vals[i], low_vals[j]
        if m - M < tol:
            return beta, float((m + M) / 2.0), iteration

        ii, jj = i % n, j % n
        eta = max(K[ii, ii] + K[jj, jj] - 2.0 * K[ii, jj], 1e-12)
        room_i = (C - alpha[ii]) if i < n else alpha_star[ii]
        room_j = alpha[jj] if j < n else (C - alpha_star[jj])
        t = min((m - M) / eta, room_i, room_j)

        if i < n:
            alpha[ii] += t
        else:
            alpha_star[ii] -= t
        if j < n:
            alpha[jj] -= t
        else:
            alpha_star[jj] += t
        beta[ii] += t
        beta[jj] -= t
        k_beta += t * (K[:, ii] - K[:, jj])

    raise NonConvergence(
        f"SMO gap still >= {tol} after {max_iter} iterations "
        f"(C/epsilon scaling is likely off)"
    )


def dual_objective(K: np.ndarray, y: np.ndarray, beta: np.ndarray,
                   epsilon: float) -> float:
    """Value being maximized: -1/2 b'Kb + y'b - epsilon * |b|_1."""
    return float(-0.5 * beta @ K @ beta + y @ beta - epsilon * np.abs(beta).sum())


def kkt_violation(K: np.ndarray, y: np.ndarray, beta: np.ndarray, bias: float,
                  C: float, epsilon: float) -> float:
    """Largest KKT violation of a dual solution, in target units.

    Zero-coefficient points must sit inside the tube, free coefficients
    exactly on their tube edge, and box-bound coefficients at or beyond it.
    """
    residual = y - (K @ beta + bias)
    at_box = 1e-10 * C
    worst = 0.0
    for i in range(y.size):
        b, r = beta[i], residual[i]
        if abs(b) <= at_box:
            worst = max(worst, abs(r) - epsilon)
        elif b >= C - at_box:
            worst = max(worst, epsilon - r)
        elif b > 0:
            worst = max(worst, abs(r - epsilon))
        elif b <= -C + at_box:
            worst = max(worst, r + epsilon)
        else:
            worst = max(worst, abs(r + epsilon))
    return worst


@dataclass(frozen=True)
class SVRModel:
    """Fitted SVR plus the feature/target scalers needed at prediction time."""

    kernel: KernelSpec
    dual_coefs: np.ndarray
    support_indices: np.ndarray
    bias: float
    epsilon: float
    C: float
    feature_mean: np.ndarray
    feature_std: np.ndarray
    y_mean: float
    y_std: float
    support_features: np.ndarray
    lag_steps: tuple[int, ...]
    steps_per_day: int

    def __post_init__(self) -> None:
        if np.any(np.abs(self.dual_coefs) > self.C * (1 + 1e-9)):
            raise ValueError("dual coefficients exceed the box constraint")
        for name in ("dual_coefs", "feature_mean", "feature_std", "support_features"):
            object.__setattr__(self, name, _freeze(getattr(self, name)))
        idx = np.array(self.support_indices, dtype=np.int64)
        idx.setflags(write=False)
        object.__setattr__(self, "support_indices", idx)

    @property
    def num_support(self) -> int:
        return int(self.support_indices.size)


def _raw_feature_row(lags: np.ndarray, step_abs: int, steps_per_day: int) -> np.ndarray:
    phase = 2.0 * math.pi * (step_abs % steps_per_day) / steps_per_day
    return np.concatenate([lags, [math.sin(phase), math.cos(phase)]])


def lag_feature_matrix(train: LoadSeries,
                       spec: WindowSpec = WindowSpec()) -> tuple[np.ndarray, np.ndarray]:
    """The supervised problem behind ``svr_fit``: raw features and targets.

    One row per predictable step (capped like GP training), columns are the
    whole-day lags followed by the sin/cos time-of-day pair.
    """
    spd = train.steps_per_day
    lag_steps = np.array([d * spd for d in range(1, spec.context_days + 1)])
    max_lag = int(lag_steps[-1])
    if len(train) <= max_lag:
        raise SeriesTooShort(
            f"need more than {max_lag} steps to build lag features, "
            f"got {len(train)}"
        )
    values = train.values
    rows = np.arange(max_lag, len(values))
    rows = rows[subsample_indices(rows.size)]
    X_raw = np.array([
        _raw_feature_row(values[t - lag_steps], t, spd) for t in rows
    ])
    return X_raw, values[rows]


def default_svr_kernel(num_features: int) -> KernelSpec:
    return KernelSpec("rbf", lengthscale=math.sqrt(num_features),
                      signal_variance=1.0, noise_variance=0.0)


def svr_fit(train: LoadSeries, spec: WindowSpec = WindowSpec(),
            epsilon: float | None = None, C: float = DEFAULT_C,
            kernel: KernelSpec | None = None, tol: float = DEFAULT_TOL,
            max_iter: int = DEFAULT_MAX_ITER) -> SVRModel:
    """Train on lag/time-of-day features from a load series.

    ``epsilon`` defaults to 0.1 x the target standard deviation (an absolute
    1e-3 for constant targets). Lags span one day per context day of the
    window protocol. Features and targets are z-scored internally; constant
    targets converge immediately to a bias-only model with no support vectors.
    """
    spd = train.steps_per_day
    lag_steps = tuple(d * spd for d in range(1, spec.context_days + 1))
    X_raw, y_raw = lag_feature_matrix(train, spec)

    y_std_raw = float(y_raw.std())
    if epsilon is None:
        epsilon = 0.1 * y_std_raw if y_std_raw > 0 else 1e-3
    if epsilon <= 0 or C <= 0 or tol <= 0:
        raise ValueError("epsilon, C, and tol must all be positive")

    feature_mean = X_raw.mean(axis=0)
    feature_std = X_raw.std(axis=0)
    feature_std = np.where(feature_std > 0, feature_std, 1.0)
    X = (X_raw - feature_mean) / feature_std
    y_mean = float(y_raw.mean())
    y_scale = y_std_raw if y_std_raw > 0 else 1.0
    y = (y_raw - y_mean) / y_scale

    if kernel is None:
        kernel = default_svr_kernel(X.shape[1])
    K = kernel_matrix(kernel, X, X)
    beta, bias, _ = solve_svr_dual(K, y, C, epsilon / y_scale, tol, max_iter)
    support = np.nonzero(np.abs(beta) > 1e-10 * C)[0]
    return SVRModel(
        kernel=kernel,
        dual_coefs=beta,
        support_indices=support,
        bias=bias,
        epsilon=epsilon,
        C=C,
        feature_mean=feature_mean,
        feature_std=feature_std,
        y_mean=y_mean,
        y_std=y_scale,
        support_features=X[support],
        lag_steps=lag_steps,
        steps_per_day=spd,
    )


def svr_predict(model: SVRModel, context: np.ndarray, horizon_H: int,
                start_step: int = 0) -> np.ndarray:
    """Point forecast; predictions re-enter the lag buffer for later steps.

    A zero horizon returns an empty vector. The context must cover the
    longest lag.
    """
    context = np.asarray(context, dtype=np.float64).ravel()
    if horizon_H < 0:
        raise ValueError("horizon_H must be >= 0")
    if horizon_H == 0:
        return np.zeros(0)
    max_lag = max(model.lag_steps)
    if context.size < max_lag:
        raise InsufficientContext(
            f"context of {context.size} steps cannot supply a {max_lag}-step lag"
        )
    support_coefs = model.dual_coefs[model.support_indices]
    buffer = np.concatenate([context, np.zeros(horizon_H)])
    L = context.size
    for h in range(horizon_H):
        pos = L + h
        lags = buffer[pos - np.array(model.lag_steps)]
        raw = _raw_feature_row(lags, start_step + pos, model.steps_per_day)
        x = (raw - model.feature_mean) / model.feature_std
        if support_coefs.size:
            k_row = kernel_matrix(model.kernel, x[None, :], model.support_features)
            f_std = float(k_row[0] @ support_coefs) + model.bias
        else:
            f_std = model.bias
        buffer[pos] = model.y_mean + model.y_std * f_std
    return buffer[L:].copy()


def save_svr_model(model: SVRModel, path) -> None:
    """Plain-text key-value dump of hyperparameters and coefficients."""
    lines = [
        f"kernel_kind={model.kernel.kind}",
        f"kernel_lengthscale={model.kernel.lengthscale!r}",
        f"kernel_signal_variance={model.kernel.signal_variance!r}",
        f"C={model.C!r}",
        f"epsilon={model.epsilon!r}",
        f"bias={model.bias!r}",
        f"y_mean={model.y_mean!r}",
        f"y_std={model.y_std!r}",
        f"lag_steps={','.join(str(lag) for lag in model.lag_steps)}",
        f"support_indices={','.join(str(i) for i in model.support_indices)}",
        f"dual_coefs={','.join(repr(float(b)) for b in model.dual_coefs)}",
    ]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


class SVRForecaster(Forecaster):
    """Trained, point-only: epsilon-SVR on lag and time-of-day features."""

    name = "svr"
    probabilistic = False
    requires_training = True

    def __init__(self, epsilon: float | None = None, C: float = DEFAULT_C,
                 kernel: KernelSpec | None = None, tol: float = DEFAULT_TOL,
                 window: WindowSpec = WindowSpec()):
        self.epsilon = epsilon
        self.C = C
        self.kernel = kernel
        self.tol = tol
        self.window = window
        self._model: SVRModel | None = None

    @property
    def model(self) -> SVRModel:
        if self._model is None:
            raise ValueError("SVRForecaster.predict requires a fit() call first")
        return self._model

    def fit(self, train: LoadSeries) -> "SVRForecaster":
        self._model = svr_fit(train, self.window, self.epsilon, self.C,
                              self.kernel, self.tol)
        return self

    def predict(self, context: np.ndarray, horizon_H: int, num_samples_S: int,
                seed: int, start_step: int = 0) -> np.ndarray:
        return svr_predict(self.model, context, horizon_H, start_step)
