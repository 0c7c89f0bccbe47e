"""Sample-path forecasters built on the token codecs.

Two zero-shot mechanisms, each producing an S-by-H matrix of simulated future
trajectories:

- **Token sampler** — quantize the context, estimate an empirical (optionally
  recency-weighted) distribution over the observed tokens, draw future tokens
  i.i.d. from it, and map them back to bin centers. Outputs are confined to
  the context's own bin centers, so they are non-negative and never exceed
  the largest observed bin center.
- **Segment-distribution heads** — align context values by time-of-day
  position across days and fit a parametric head per horizon step by method
  of moments: a Student-t (location/scale, fixed dof) or an exponential
  (rate). Sampling from these heads can produce values outside the observed
  range, including negative values for the t head.

Also here: the quantile/mean reducers used for scoring, the common
``Forecaster`` contract both mechanisms (and the trained baselines) implement,
and ingestion of externally produced sample paths from CSV.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    EmptyContext,
    EmptyFile,
    GammaOutOfRange,
    HorizonMismatch,
    IndivisibleContext,
    MalformedRow,
    NonFiniteInput,
    RaggedPaths,
    TooFewSamples,
)
from .series import LoadSeries
from .tokenization import (
    QuantizationCodec,
    SegmentCodec,
    TokenSequence,
    fit_quantization_codec,
    tokenize,
)

DEFAULT_NUM_SAMPLES = 100
DEFAULT_NUM_BINS = 128
DEFAULT_STUDENT_T_DOF = 3.0

EXTERNAL_FORECAST_HEADER = ["window_id", "sample_id", "step", "value"]


def _freeze(values: np.ndarray) -> np.ndarray:
    out = np.array(values, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ProbabilisticForecast:
    """S sample paths over an H-step horizon, one row per path."""

    sample_paths: np.ndarray

    def __post_init__(self) -> None:
        paths = np.atleast_2d(np.asarray(self.sample_paths, dtype=np.float64))
        if paths.ndim != 2 or paths.shape[0] < 1 or paths.shape[1] < 1:
            raise ValueError(f"sample_paths must be S x H with S,H >= 1, got {paths.shape}")
        if not np.all(np.isfinite(paths)):
            raise NonFiniteInput("sample paths contain non-finite values")
        object.__setattr__(self, "sample_paths", _freeze(paths))

    @property
    def num_samples_S(self) -> int:
        return int(self.sample_paths.shape[0])

    @property
    def horizon_H(self) -> int:
        return int(self.sample_paths.shape[1])


def forecast_quantile(forecast: ProbabilisticForecast, gamma: float) -> np.ndarray:
    """Per-step empirical gamma-quantile of the sample paths.

    Linear interpolation between order statistics (position ``(S-1) * gamma``).
    ``gamma=0`` and ``gamma=1`` map to the per-step minimum and maximum.

    Raises
    ------
    TooFewSamples
        If the forecast has fewer than 2 sample paths.
    GammaOutOfRange
        If gamma is outside [0, 1].
    """
    if forecast.num_samples_S < 2:
        raise TooFewSamples(
            f"quantile extraction needs S >= 2 sample paths, got {forecast.num_samples_S}"
        )
    if not 0.0 <= gamma <= 1.0:
        raise GammaOutOfRange(f"gamma must lie in [0, 1], got {gamma}")
    return np.quantile(forecast.sample_paths, gamma, axis=0)


def forecast_mean(forecast: ProbabilisticForecast) -> np.ndarray:
    """Per-step arithmetic mean over sample paths."""
    return forecast.sample_paths.mean(axis=0)


# ---------------------------------------------------------------------------
# token sampler
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TokenSamplerModel:
    """Empirical distribution over the tokens observed in one context window."""

    codec: QuantizationCodec
    observed_tokens: np.ndarray
    token_probabilities: np.ndarray
    context_tokens: TokenSequence

    def __post_init__(self) -> None:
        observed = np.array(self.observed_tokens, dtype=np.int64)
        observed.setflags(write=False)
        probs = _freeze(self.token_probabilities)
        if observed.shape != probs.shape:
            raise ValueError("observed_tokens and token_probabilities must align")
        if np.any(probs < 0):
            raise ValueError("token probabilities must be non-negative")
        if abs(float(probs.sum()) - 1.0) > 1e-12:
            raise ValueError(f"token probabilities must sum to 1, got {probs.sum()!r}")
        object.__setattr__(self, "observed_tokens", observed)
        object.__setattr__(self, "token_probabilities", probs)


def fit_token_sampler(context: np.ndarray, num_bins: int = DEFAULT_NUM_BINS,
                      recency_half_life: float | None = None) -> TokenSamplerModel:
    """Quantize a context and estimate its empirical token distribution.

    With ``recency_half_life`` set, occurrence i of t context steps carries
    weight ``2 ** (-(t-1-i) / half_life)`` so the newest reading weighs 1 and
    each half-life into the past halves the weight.
    """
    if recency_half_life is not None and recency_half_life <= 0:
        raise ValueError("recency_half_life must be positive")
    codec = fit_quantization_codec(context, num_bins)
    seq = tokenize(codec, np.asarray(context, dtype=np.float64).ravel())
    t = len(seq)
    if recency_half_life is None:
        weights = np.ones(t)
    else:
        age = (t - 1) - np.arange(t)
        weights = np.exp2(-age / recency_half_life)
    observed, inverse = np.unique(seq.tokens, return_inverse=True)
    mass = np.bincount(inverse, weights=weights, minlength=observed.size)
    probs = mass / mass.sum()
    return TokenSamplerModel(
        codec=codec,
        observed_tokens=observed,
        token_probabilities=probs,
        context_tokens=seq,
    )


def sample_token_paths(model: TokenSamplerModel, horizon_H: int, num_samples_S: int,
                       seed: int) -> ProbabilisticForecast:
    """Draw H x S future tokens i.i.d. from the model and detokenize."""
    if horizon_H < 1 or num_samples_S < 1:
        raise ValueError("horizon_H and num_samples_S must be >= 1")
    rng = np.random.default_rng(seed)
    ids = rng.choice(
        model.observed_tokens,
        size=(num_samples_S, horizon_H),
        p=model.token_probabilities,
    )
    return ProbabilisticForecast(model.codec.bin_centers[ids])


def token_sampler_predict(context: np.ndarray, horizon_H: int, num_samples_S: int,
                          num_bins: int = DEFAULT_NUM_BINS,
                          recency_half_life: float | None = None,
                          seed: int = 0) -> ProbabilisticForecast:
    """Zero-shot token-sampling forecast of one context window.

    Every sampled value is the bin center of a token present in the context,
    hence non-negative and bounded by the largest observed center.
    Deterministic given identical inputs and seed.
    """
    model = fit_token_sampler(context, num_bins, recency_half_life)
    return sample_token_paths(model, horizon_H, num_samples_S, seed)


# ---------------------------------------------------------------------------
# segment-distribution heads
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SegmentDistModel:
    """Per-time-of-day parametric heads fitted to one context window.

    ``locations``/``scales`` hold Student-t parameters per within-day step
    (``scales[k] == 0`` marks a zero-variance point mass); ``rates`` holds
    exponential rates (``inf`` marks a zero-mean point mass at 0).
    """

    codec: SegmentCodec
    head_kind: str
    locations: np.ndarray | None = None
    scales: np.ndarray | None = None
    rates: np.ndarray | None = None
    dof: float = DEFAULT_STUDENT_T_DOF

    def __post_init__(self) -> None:
        if self.head_kind == "student_t":
            if self.locations is None or self.scales is None:
                raise ValueError("student_t head needs locations and scales")
            if self.dof <= 2:
                raise ValueError("dof must exceed 2 for finite variance")
            locations = _freeze(self.locations)
            scales = _freeze(self.scales)
            if not np.all(np.isfinite(locations)) or not np.all(np.isfinite(scales)):
                raise NonFiniteInput("student_t parameters must be finite")
            if np.any(scales < 0):
                raise ValueError("student_t scales must be >= 0")
            object.__setattr__(self, "locations", locations)
            object.__setattr__(self, "scales", scales)
        elif self.head_kind == "exponential":
            if self.rates is None:
                raise ValueError("exponential head needs rates")
            rates = _freeze(self.rates)
            if np.any(rates <= 0):
                raise ValueError("exponential rates must be strictly positive")
            object.__setattr__(self, "rates", rates)
        else:
            raise ValueError(f"unknown head_kind {self.head_kind!r}")

    @property
    def steps_per_day(self) -> int:
        params = self.locations if self.head_kind == "student_t" else self.rates
        return int(params.size)


def fit_segment_heads(context: np.ndarray, steps_per_day: int,
                      head_kind: str = "student_t",
                      dof: float = DEFAULT_STUDENT_T_DOF) -> SegmentDistModel:
    """Fit one distribution head per within-day step by method of moments.

    The context is reshaped into whole days; the values sharing time-of-day
    position k across days parameterize the head for horizon steps congruent
    to k. Student-t: location = mean, scale from the population variance at
    fixed dof (zero variance becomes a point mass). Exponential: rate = 1 /
    mean (zero mean becomes a point mass at 0).

    Raises
    ------
    EmptyContext, NonFiniteInput, IndivisibleContext
    """
    v = np.asarray(context, dtype=np.float64).ravel()
    if v.size == 0:
        raise EmptyContext("cannot fit segment heads on an empty context")
    if not np.all(np.isfinite(v)):
        raise NonFiniteInput("context contains non-finite values")
    if steps_per_day < 1:
        raise ValueError("steps_per_day must be >= 1")
    if v.size % steps_per_day != 0:
        raise IndivisibleContext(
            f"context length {v.size} is not divisible by steps_per_day {steps_per_day}"
        )
    by_day = v.reshape(-1, steps_per_day)
    codec = SegmentCodec(segment_length_b=steps_per_day)
    if head_kind == "student_t":
        locations = by_day.mean(axis=0)
        variances = by_day.var(axis=0)
        scales = np.sqrt(variances * (dof - 2.0) / dof)
        return SegmentDistModel(codec=codec, head_kind="student_t",
                                locations=locations, scales=scales, dof=dof)
    if head_kind == "exponential":
        means = by_day.mean(axis=0)
        with np.errstate(divide="ignore"):
            rates = np.where(means > 0, 1.0 / np.maximum(means, 1e-300), np.inf)
        return SegmentDistModel(codec=codec, head_kind="exponential", rates=rates)
    raise ValueError(f"unknown head_kind {head_kind!r}")


def sample_segment_paths(model: SegmentDistModel, horizon_H: int, num_samples_S: int,
                         seed: int) -> ProbabilisticForecast:
    """Draw S samples per horizon step from the aligned head."""
    if horizon_H < 1 or num_samples_S < 1:
        raise ValueError("horizon_H and num_samples_S must be >= 1")
    rng = np.random.default_rng(seed)
    spd = model.steps_per_day
    paths = np.empty((num_samples_S, horizon_H))
    for h in range(horizon_H):
        k = h % spd
        if model.head_kind == "student_t":
            loc = model.locations[k]
            scale = model.scales[k]
            if scale == 0.0:
                paths[:, h] = loc
            else:
                paths[:, h] = loc + scale * rng.standard_t(model.dof, size=num_samples_S)
        else:
            rate = model.rates[k]
            if math.isinf(rate):
                paths[:, h] = 0.0
            else:
                paths[:, h] = rng.exponential(scale=1.0 / rate, size=num_samples_S)
    return ProbabilisticForecast(paths)


def segment_dist_predict(context: np.ndarray, horizon_H: int, num_samples_S: int,
                         head_kind: str = "student_t", *, steps_per_day: int,
                         dof: float = DEFAULT_STUDENT_T_DOF,
                         seed: int = 0) -> ProbabilisticForecast:
    """Zero-shot segment-distribution forecast of one context window.

    Horizon steps beyond one day wrap around to the same time-of-day head.
    Deterministic given identical inputs and seed.
    """
    model = fit_segment_heads(context, steps_per_day, head_kind, dof)
    return sample_segment_paths(model, horizon_H, num_samples_S, seed)


# ---------------------------------------------------------------------------
# forecaster contract
# ---------------------------------------------------------------------------

class Forecaster:
    """Common contract: optional fit on a training series, pure predict.

    ``predict`` returns a :class:`ProbabilisticForecast` when ``probabilistic``
    is True and a 1-D point vector of length ``horizon_H`` otherwise.
    ``start_step`` is the absolute step index of the first context value in
    the original series — zero-shot models ignore it; trained models use it to
    recover calendar position. Zero-shot models must predict without any
    ``fit`` call.
    """

    name: str = "forecaster"
    probabilistic: bool = True
    requires_training: bool = False

    def fit(self, train: LoadSeries) -> "Forecaster":
        return self

    def predict(self, context: np.ndarray, horizon_H: int, num_samples_S: int,
                seed: int, start_step: int = 0) -> ProbabilisticForecast | np.ndarray:
        raise NotImplementedError


class TokenSamplerForecaster(Forecaster):
    """Zero-shot, probabilistic: i.i.d. sampling from the context's tokens."""

    name = "token-sampler"
    probabilistic = True
    requires_training = False

    def __init__(self, num_bins: int = DEFAULT_NUM_BINS,
                 recency_half_life: float | None = None):
        self.num_bins = num_bins
        self.recency_half_life = recency_half_life

    def predict(self, context: np.ndarray, horizon_H: int, num_samples_S: int,
                seed: int, start_step: int = 0) -> ProbabilisticForecast:
        return token_sampler_predict(
            context, horizon_H, num_samples_S,
            num_bins=self.num_bins,
            recency_half_life=self.recency_half_life,
            seed=seed,
        )


class SegmentDistForecaster(Forecaster):
    """Zero-shot, probabilistic: per-time-of-day parametric heads."""

    probabilistic = True
    requires_training = False

    def __init__(self, steps_per_day: int, head_kind: str = "student_t",
                 dof: float = DEFAULT_STUDENT_T_DOF):
        if head_kind not in ("student_t", "exponential"):
            raise ValueError(f"unknown head_kind {head_kind!r}")
        self.steps_per_day = steps_per_day
        self.head_kind = head_kind
        self.dof = dof
        self.name = f"segment-dist-{'t' if head_kind == 'student_t' else 'exp'}"

    def predict(self, context: np.ndarray, horizon_H: int, num_samples_S: int,
                seed: int, start_step: int = 0) -> ProbabilisticForecast:
        return segment_dist_predict(
            context, horizon_H, num_samples_S, self.head_kind,
            steps_per_day=self.steps_per_day, dof=self.dof, seed=seed,
        )


# ---------------------------------------------------------------------------
# external forecasts
# ---------------------------------------------------------------------------

def _id_sort_key(raw: str):
    try:
        return (0, int(raw), raw)
    except ValueError:
        return (1, 0, raw)


def ingest_external_forecasts(
        path: str | Path,
        expected_H: int) -> list[tuple[str, ProbabilisticForecast]]:
    """Read sample paths produced elsewhere, one (window_id, forecast) pair
    per window.

    The CSV must have the exact header ``window_id,sample_id,step,value``.
    Windows are returned sorted by window_id (numerically when ids are
    integers). Every sample within a window must cover steps 0..H-1 exactly.

    Raises
    ------
    EmptyFile, MalformedRow, RaggedPaths, HorizonMismatch
    """
    path = Path(path)
    table: dict[str, dict[str, dict[int, float]]] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyFile(f"{path}: file is empty")
        if [h.strip() for h in header] != EXTERNAL_FORECAST_HEADER:
            raise MalformedRow(
                f"{path}: expected header "
                f"'{','.join(EXTERNAL_FORECAST_HEADER)}', got {header}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise MalformedRow(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            wid, sid = row[0].strip(), row[1].strip()
            try:
                step = int(row[2])
                value = float(row[3])
            except ValueError as exc:
                raise MalformedRow(f"{path}:{lineno}: bad step/value {row[2:]!r}") from exc
            if step < 0:
                raise MalformedRow(f"{path}:{lineno}: negative step {step}")
            if not math.isfinite(value):
                raise MalformedRow(f"{path}:{lineno}: non-finite value {row[3]!r}")
            steps = table.setdefault(wid, {}).setdefault(sid, {})
            if step in steps:
                raise MalformedRow(
                    f"{path}:{lineno}: duplicate (window {wid}, sample {sid}, step {step})"
                )
            steps[step] = value

    if not table:
        raise EmptyFile(f"{path}: no data rows")

    forecasts = []
    for wid in sorted(table, key=_id_sort_key):
        samples = table[wid]
        step_sets = {frozenset(d) for d in samples.values()}
        if len(step_sets) != 1:
            raise RaggedPaths(f"window {wid}: sample paths cover different steps")
        steps = sorted(next(iter(step_sets)))
        h = len(steps)
        if steps != list(range(h)):
            raise RaggedPaths(f"window {wid}: steps are not contiguous from 0")
        if h != expected_H:
            raise HorizonMismatch(
                f"window {wid}: horizon {h} does not match expected {expected_H}"
            )
        paths = np.array(
            [[samples[sid][s] for s in range(h)]
             for sid in sorted(samples, key=_id_sort_key)]
        )
        forecasts.append((wid, ProbabilisticForecast(paths)))
    return forecasts
