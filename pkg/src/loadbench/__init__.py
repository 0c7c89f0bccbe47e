"""Probabilistic short-term electricity load forecasting benchmark.

A numpy/scipy library with four parts: load-series handling (ingestion,
resampling, aggregation, windowing, synthesis), two zero-shot forecast
mechanisms built on value quantization and on per-time-of-day distribution
heads, two trained baselines (Gaussian process regression and epsilon-SVR,
both implemented from scratch), and a deterministic benchmark harness that
scores every model on sliding context/horizon windows.
"""

from __future__ import annotations

from .bench import (
    ExperimentConfig,
    MODEL_REGISTRY,
    ResultRow,
    build_forecaster,
    derive_seed,
    emit_table,
    load_config,
    run_experiment,
    score_external_forecasts,
)
from .errors import LoadBenchError
from .forecasters import (
    Forecaster,
    ProbabilisticForecast,
    SegmentDistForecaster,
    SegmentDistModel,
    TokenSamplerForecaster,
    TokenSamplerModel,
    fit_segment_heads,
    fit_token_sampler,
    forecast_mean,
    forecast_quantile,
    ingest_external_forecasts,
    sample_segment_paths,
    sample_token_paths,
    segment_dist_predict,
    token_sampler_predict,
)
from .gp import (
    GPForecaster,
    GPModel,
    KernelSpec,
    gp_fit,
    gp_posterior,
    gp_predict,
    kernel_matrix,
    log_marginal_likelihood,
    log_marginal_likelihood_grad,
)
from .metrics import WindowScore, aggregate_scores, mae, quantile_loss, rmse, score_window
from .series import (
    ForecastWindow,
    LoadSeries,
    TrainTestSplit,
    WindowSpec,
    aggregate,
    chronological_split,
    generate_synthetic,
    ingest_csv,
    make_windows,
    resample,
    write_csv,
)
from .svr import SVRForecaster, SVRModel, svr_fit, svr_predict
from .tokenization import (
    QuantizationCodec,
    SegmentCodec,
    TokenSequence,
    default_segment_length,
    detokenize,
    fit_quantization_codec,
    load_codec,
    save_codec,
    segment,
    serialize_codec,
    tokenize,
)

__version__ = "0.1.0"

__all__ = [
    "ExperimentConfig", "MODEL_REGISTRY", "ResultRow", "build_forecaster",
    "derive_seed", "emit_table", "load_config", "run_experiment",
    "score_external_forecasts",
    "LoadBenchError",
    "Forecaster", "ProbabilisticForecast", "SegmentDistForecaster",
    "SegmentDistModel", "TokenSamplerForecaster", "TokenSamplerModel",
    "fit_segment_heads", "fit_token_sampler", "forecast_mean",
    "forecast_quantile", "ingest_external_forecasts", "sample_segment_paths",
    "sample_token_paths", "segment_dist_predict", "token_sampler_predict",
    "GPForecaster", "GPModel", "KernelSpec", "gp_fit", "gp_posterior",
    "gp_predict", "kernel_matrix", "log_marginal_likelihood",
    "log_marginal_likelihood_grad",
    "WindowScore", "aggregate_scores", "mae", "quantile_loss", "rmse",
    "score_window",
    "ForecastWindow", "LoadSeries", "TrainTestSplit", "WindowSpec",
    "aggregate", "chronological_split", "generate_synthetic", "ingest_csv",
    "make_windows", "resample", "write_csv",
    "SVRForecaster", "SVRModel", "svr_fit", "svr_predict",
    "QuantizationCodec", "SegmentCodec", "TokenSequence",
    "default_segment_length", "detokenize", "fit_quantization_codec",
    "load_codec", "save_codec", "segment", "serialize_codec", "tokenize",
    "__version__",
]
