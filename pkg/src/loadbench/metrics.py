"""Forecast error metrics and per-window scoring.

Point accuracy is measured by MAE and RMSE; probabilistic accuracy by the
quantile (pinball) loss at levels 0.1, 0.5, and 0.9. Two algebraic identities
pin the implementation down exactly: the loss at level 0.5 is always MAE/2,
and the losses at complementary levels sum to MAE.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyList,
    EmptyVector,
    GammaOutOfRange,
    HorizonMismatch,
    InconsistentFields,
    LengthMismatch,
)
from .forecasters import ProbabilisticForecast, forecast_mean, forecast_quantile

QUANTILE_LEVELS = (0.1, 0.5, 0.9)


def _paired(actual: np.ndarray, predicted: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(actual, dtype=np.float64).ravel()
    p = np.asarray(predicted, dtype=np.float64).ravel()
    if a.size == 0 or p.size == 0:
        raise EmptyVector("metric inputs must be non-empty")
    if a.size != p.size:
        raise LengthMismatch(f"length mismatch: actual {a.size} vs predicted {p.size}")
    return a, p


def mae(actual: np.ndarray, predicted: np.ndarray) -> float:
    """Mean absolute error: mean of |actual - predicted|."""
    a, p = _paired(actual, predicted)
    return float(np.mean(np.abs(a - p)))


def rmse(actual: np.ndarray, predicted: np.ndarray) -> float:
    """Root mean squared error: sqrt of the mean squared difference."""
    a, p = _paired(actual, predicted)
    return float(np.sqrt(np.mean((a - p) ** 2)))


def quantile_loss(actual: np.ndarray, predicted_quantile: np.ndarray,
                  gamma: float) -> float:
    """Pinball loss at level gamma.

    Over-prediction (predicted >= actual) costs ``(1-gamma) * |error|``;
    under-prediction costs ``gamma * |error|``. Minimized in expectation by
    the true gamma-quantile.
    """
    if not 0.0 < gamma < 1.0:
        raise GammaOutOfRange(f"gamma must lie in (0, 1), got {gamma}")
    a, p = _paired(actual, predicted_quantile)
    err = np.abs(a - p)
    over = p >= a
    return float(np.mean(np.where(over, (1.0 - gamma) * err, gamma * err)))


@dataclass(frozen=True)
class WindowScore:
    """Scores for one evaluation window.

    Quantile fields are either all present (probabilistic forecast) or all
    None (point forecast).
    """

    window_id: str
    mae: float
    rmse: float
    q10: float | None = None
    q50: float | None = None
    q90: float | None = None

    def __post_init__(self) -> None:
        quantiles = (self.q10, self.q50, self.q90)
        present = [q is not None for q in quantiles]
        if any(present) and not all(present):
            raise InconsistentFields(
                "q10/q50/q90 must be all present or all absent"
            )
        if self.mae < 0 or self.rmse < 0:
            raise ValueError("mae and rmse must be non-negative")
        if self.rmse < self.mae * (1.0 - 1e-12):
            raise ValueError(f"rmse {self.rmse} < mae {self.mae} is impossible")
        if all(present) and any(q < 0 for q in quantiles):
            raise ValueError("quantile losses must be non-negative")

    @property
    def is_probabilistic(self) -> bool:
        return self.q50 is not None


def score_window(target: np.ndarray, forecast: ProbabilisticForecast | np.ndarray,
                 window_id: str = "") -> WindowScore:
    """Score one window's forecast against its realized target.

    Probabilistic forecasts are reduced to their per-step mean for MAE/RMSE
    and to per-step quantiles for the pinball losses. A 1-D point vector gets
    MAE/RMSE only, leaving the quantile fields absent.
    """
    t = np.asarray(target, dtype=np.float64).ravel()
    if isinstance(forecast, ProbabilisticForecast):
        if forecast.horizon_H != t.size:
            raise HorizonMismatch(
                f"window {window_id or '?'}: forecast horizon {forecast.horizon_H} "
                f"vs target length {t.size}"
            )
        point = forecast_mean(forecast)
        q_losses = {
            gamma: quantile_loss(t, forecast_quantile(forecast, gamma), gamma)
            for gamma in QUANTILE_LEVELS
        }
        return WindowScore(
            window_id=window_id,
            mae=mae(t, point),
            rmse=rmse(t, point),
            q10=q_losses[0.1],
            q50=q_losses[0.5],
            q90=q_losses[0.9],
        )
    p = np.asarray(forecast, dtype=np.float64).ravel()
    if p.size != t.size:
        raise HorizonMismatch(
            f"window {window_id or '?'}: forecast length {p.size} "
            f"vs target length {t.size}"
        )
    return WindowScore(window_id=window_id, mae=mae(t, p), rmse=rmse(t, p))


def aggregate_scores(scores: list[WindowScore]) -> WindowScore:
    """Unweighted arithmetic mean of each field across windows.

    All scores must agree on quantile-field presence: mixing probabilistic
    and point scores is an error, not a silent partial mean.
    """
    if not scores:
        raise EmptyList("cannot aggregate an empty score list")
    if len(scores) == 1:
        return scores[0]
    probabilistic = scores[0].is_probabilistic
    if any(s.is_probabilistic != probabilistic for s in scores):
        raise InconsistentFields(
            "cannot aggregate a mix of probabilistic and point scores"
        )

    def mean_of(field: str) -> float:
        return float(np.mean([getattr(s, field) for s in scores]))

    return WindowScore(
        window_id=f"mean-of-{len(scores)}",
        mae=mean_of("mae"),
        rmse=mean_of("rmse"),
        q10=mean_of("q10") if probabilistic else None,
        q50=mean_of("q50") if probabilistic else None,
        q90=mean_of("q90") if probabilistic else None,
    )
