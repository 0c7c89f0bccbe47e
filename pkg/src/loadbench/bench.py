"""Experiment configuration, orchestration, and result tables.

A benchmark run is described by a plain-text INI config: one data source,
one window protocol, a list of model names with optional per-model
hyperparameter sections, and output paths. ``run_experiment`` fits whatever
needs fitting on the chronological training split, evaluates every model on
every test window, and returns one aggregated row per model.

Determinism is the central contract: each window's sampling seed is a stable
hash of (master_seed, series_id, window_index), so results are byte-identical
across repeated runs and across worker counts. Wall time is reported on the
row object but never written to output files.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import os
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    ConfigError,
    EmptyFile,
    EmptyList,
    HorizonMismatch,
    IoFailure,
    LoadBenchError,
    MalformedRow,
    MisalignedSeries,
)
from .forecasters import (
    DEFAULT_NUM_SAMPLES,
    Forecaster,
    ProbabilisticForecast,
    SegmentDistForecaster,
    TokenSamplerForecaster,
)
from .gp import GPForecaster
from .metrics import WindowScore, aggregate_scores, score_window
from .series import (
    LoadSeries,
    WindowSpec,
    chronological_split,
    generate_synthetic,
    ingest_csv,
    make_windows,
)
from .svr import SVRForecaster

EXPERIMENT_ID_PATTERN = re.compile(r"^([A-Z]{2,8})-(I|A)-(\d+)$")
RESULT_CSV_HEADER = "experiment_id,model,q10,q50,q90,mae,rmse,num_windows"
ACTUALS_CSV_HEADER = ("window_id", "step", "value")
WORKERS_ENV_VAR = "LOADBENCH_WORKERS"
DEFAULT_TRAIN_FRACTION = 0.6


# --------------------------------------------------------------------------
# model registry
# --------------------------------------------------------------------------

def _parse_options(name: str, options: dict[str, str],
                   schema: dict[str, type]) -> dict:
    parsed = {}
    for key, raw in options.items():
        if key not in schema:
            known = ", ".join(sorted(schema)) or "none"
            raise ConfigError(
                f"model '{name}' does not accept option '{key}' (known: {known})"
            )
        try:
            parsed[key] = schema[key](raw)
        except ValueError as exc:
            raise ConfigError(f"model '{name}' option '{key}': {exc}") from exc
    return parsed


def _make_token_sampler(spd: int, window: WindowSpec,
                        options: dict[str, str]) -> Forecaster:
    opts = _parse_options("token-sampler", options,
                          {"num_bins": int, "recency_half_life": float})
    return TokenSamplerForecaster(**opts)


def _make_segment_t(spd: int, window: WindowSpec,
                    options: dict[str, str]) -> Forecaster:
    opts = _parse_options("segment-dist-t", options, {"dof": float})
    return SegmentDistForecaster(spd, head_kind="student_t", **opts)


def _make_segment_exp(spd: int, window: WindowSpec,
                      options: dict[str, str]) -> Forecaster:
    _parse_options("segment-dist-exp", options, {})
    return SegmentDistForecaster(spd, head_kind="exponential")


def _make_gp(spd: int, window: WindowSpec,
             options: dict[str, str]) -> Forecaster:
    _parse_options("gp", options, {})
    return GPForecaster(window=window)


def _make_svr(spd: int, window: WindowSpec,
              options: dict[str, str]) -> Forecaster:
    opts = _parse_options("svr", options,
                          {"C": float, "epsilon": float, "tol": float})
    return SVRForecaster(window=window, **opts)


MODEL_REGISTRY = {
    "token-sampler": _make_token_sampler,
    "segment-dist-t": _make_segment_t,
    "segment-dist-exp": _make_segment_exp,
    "gp": _make_gp,
    "svr": _make_svr,
}


def build_forecaster(name: str, steps_per_day: int, window: WindowSpec,
                     options: dict[str, str] | None = None) -> Forecaster:
    """Instantiate a registered forecaster from textual options."""
    if name not in MODEL_REGISTRY:
        raise ConfigError(
            f"unregistered model '{name}' "
            f"(registered: {', '.join(sorted(MODEL_REGISTRY))})"
        )
    return MODEL_REGISTRY[name](steps_per_day, window, options or {})


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    """Validated description of one benchmark run."""

    experiment_id: str
    resolution_minutes: int
    output_csv: str
    output_markdown: str
    data_csv: str | None = None
    synthetic_days: int | None = None
    synthetic_profile: str = "feeder"
    synthetic_seed: int = 0
    window: WindowSpec = WindowSpec()
    train_fraction: float = DEFAULT_TRAIN_FRACTION
    model_names: tuple[str, ...] = ()
    model_options: dict[str, dict[str, str]] = field(default_factory=dict)
    num_samples_S: int = DEFAULT_NUM_SAMPLES
    master_seed: int = 0

    def __post_init__(self) -> None:
        match = EXPERIMENT_ID_PATTERN.match(self.experiment_id)
        if not match:
            raise ConfigError(
                f"experiment_id '{self.experiment_id}' does not match "
                f"COUNTRY-{{I|A}}-RESOLUTION (e.g. 'GE-A-15')"
            )
        if int(match.group(3)) != self.resolution_minutes:
            raise ConfigError(
                f"experiment_id '{self.experiment_id}' claims "
                f"{match.group(3)}-minute resolution but the config says "
                f"{self.resolution_minutes}"
            )
        if (self.data_csv is None) == (self.synthetic_days is None):
            raise ConfigError(
                "exactly one data source is required: csv or synthetic_days"
            )
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(
                f"train_fraction must lie strictly between 0 and 1, "
                f"got {self.train_fraction}"
            )
        if self.num_samples_S < 1:
            raise ConfigError("num_samples must be >= 1")
        if not self.model_names:
            raise ConfigError("at least one model is required")
        if len(set(self.model_names)) != len(self.model_names):
            raise ConfigError("duplicate model names in config")
        for name in self.model_names:
            if name not in MODEL_REGISTRY:
                raise ConfigError(
                    f"unregistered model '{name}' "
                    f"(registered: {', '.join(sorted(MODEL_REGISTRY))})"
                )
        for name in self.model_options:
            if name not in MODEL_REGISTRY:
                raise ConfigError(f"options given for unregistered model '{name}'")
        # fail fast on bad hyperparameter spellings, before any data work
        for name in self.model_names:
            build_forecaster(name, 24, self.window,
                             self.model_options.get(name, {}))


_SECTION_KEYS = {
    "experiment": {"experiment_id", "resolution_minutes", "train_fraction",
                   "num_samples", "master_seed"},
    "data": {"csv", "synthetic_days", "synthetic_profile", "synthetic_seed"},
    "window": {"context_days", "horizon_days", "stride_days"},
    "models": {"names"},
    "output": {"csv", "markdown"},
}


def _get_typed(section, key: str, cast, default=None, required: bool = False):
    if key not in section:
        if required:
            raise ConfigError(f"missing required key '{key}'")
        return default
    raw = section[key].strip()
    try:
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(f"key '{key}': {exc}") from exc


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse and validate an INI experiment description.

    Unknown sections or keys are rejected outright so that typos surface in
    ``validate`` rather than silently running with defaults.
    """
    path = Path(path)
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # hyperparameter names are case-sensitive
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc

    model_sections = {}
    for section in parser.sections():
        if section.startswith("model."):
            model_sections[section[len("model."):]] = dict(parser[section])
        elif section not in _SECTION_KEYS:
            raise ConfigError(f"unknown config section [{section}]")
        else:
            extra = set(parser[section]) - _SECTION_KEYS[section]
            if extra:
                raise ConfigError(
                    f"unknown key(s) in [{section}]: {', '.join(sorted(extra))}"
                )
    for required in ("experiment", "data", "models", "output"):
        if required not in parser:
            raise ConfigError(f"missing required config section [{required}]")

    exp = parser["experiment"]
    data = parser["data"]
    out = parser["output"]
    window = WindowSpec(
        context_days=_get_typed(parser["window"], "context_days", int, 3)
        if "window" in parser else 3,
        horizon_days=_get_typed(parser["window"], "horizon_days", int, 1)
        if "window" in parser else 1,
        stride_days=_get_typed(parser["window"], "stride_days", int, 1)
        if "window" in parser else 1,
    )
    names_raw = _get_typed(parser["models"], "names", str, required=True)
    model_names = tuple(n.strip() for n in names_raw.split(",") if n.strip())

    return ExperimentConfig(
        experiment_id=_get_typed(exp, "experiment_id", str, required=True),
        resolution_minutes=_get_typed(exp, "resolution_minutes", int,
                                      required=True),
        train_fraction=_get_typed(exp, "train_fraction", float,
                                  DEFAULT_TRAIN_FRACTION),
        num_samples_S=_get_typed(exp, "num_samples", int, DEFAULT_NUM_SAMPLES),
        master_seed=_get_typed(exp, "master_seed", int, 0),
        data_csv=_get_typed(data, "csv", str),
        synthetic_days=_get_typed(data, "synthetic_days", int),
        synthetic_profile=_get_typed(data, "synthetic_profile", str, "feeder"),
        synthetic_seed=_get_typed(data, "synthetic_seed", int, 0),
        window=window,
        model_names=model_names,
        model_options=model_sections,
        output_csv=_get_typed(out, "csv", str, required=True),
        output_markdown=_get_typed(out, "markdown", str, required=True),
    )


# --------------------------------------------------------------------------
# orchestration
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ResultRow:
    """One model's aggregate scores over all test windows of an experiment."""

    experiment_id: str
    model_name: str
    mae: float
    rmse: float
    num_windows: int
    q10: float | None = None
    q50: float | None = None
    q90: float | None = None
    wall_time_seconds: float = 0.0

    def __post_init__(self) -> None:
        quantiles = (self.q10, self.q50, self.q90)
        if any(q is None for q in quantiles) != all(q is None for q in quantiles):
            raise ValueError("q10/q50/q90 must be all present or all absent")

    @property
    def is_probabilistic(self) -> bool:
        return self.q50 is not None


def derive_seed(master_seed: int, series_id: str, window_index: int) -> int:
    """Stable per-window seed, independent of scheduling order."""
    digest = hashlib.sha256(
        f"{master_seed}:{series_id}:{window_index}".encode("utf-8")
    ).digest()
    return int.from_bytes(digest[:8], "big")


def resolve_worker_count(workers: int | None = None) -> int:
    """Explicit argument, else the environment override, else a small pool."""
    if workers is None:
        env = os.environ.get(WORKERS_ENV_VAR)
        if env is not None:
            try:
                workers = int(env)
            except ValueError as exc:
                raise ConfigError(
                    f"{WORKERS_ENV_VAR} must be an integer, got {env!r}"
                ) from exc
        else:
            workers = min(8, os.cpu_count() or 1)
    if workers < 1:
        raise ConfigError(f"worker count must be >= 1, got {workers}")
    return workers


def load_experiment_series(config: ExperimentConfig) -> LoadSeries:
    kind = "individual" if config.experiment_id.split("-")[1] == "I" \
        else "aggregated"
    if config.data_csv is not None:
        return ingest_csv(config.data_csv, config.resolution_minutes,
                          kind=kind)
    return generate_synthetic(
        config.synthetic_days, config.resolution_minutes,
        profile=config.synthetic_profile, seed=config.synthetic_seed,
    )


def run_experiment(config: ExperimentConfig,
                   workers: int | None = None) -> list[ResultRow]:
    """Evaluate every configured model on every test window.

    Trained models see only the training split; zero-shot models see only
    each window's context. Window evaluations run on a thread pool whose
    size never affects the numbers: per-window seeds are derived by stable
    hashing and aggregation follows window order. Rows come back sorted by
    model name. Module errors are re-raised with the experiment and model
    names prepended.
    """
    n_workers = resolve_worker_count(workers)
    try:
        series = load_experiment_series(config)
        split = chronological_split(series, config.train_fraction)
        windows = make_windows(split.test, config.window)
    except LoadBenchError as exc:
        raise type(exc)(f"{config.experiment_id}: {exc}") from exc
    h_steps = config.window.horizon_steps(config.resolution_minutes)
    stride_steps = config.window.stride_days * split.test.steps_per_day
    base_step = len(split.train)

    rows = []
    for name in config.model_names:
        started = time.perf_counter()
        options = config.model_options.get(name, {})
        try:
            forecaster = build_forecaster(name, split.test.steps_per_day,
                                          config.window, options)
            if forecaster.requires_training:
                forecaster.fit(split.train)

            def evaluate(indexed, forecaster=forecaster):
                index, window = indexed
                seed = derive_seed(config.master_seed, window.series_id, index)
                output = forecaster.predict(
                    window.context, h_steps, config.num_samples_S, seed,
                    start_step=base_step + index * stride_steps,
                )
                return score_window(window.target, output,
                                    window_id=f"{window.series_id}:{index}")

            if n_workers == 1:
                scores = [evaluate(item) for item in enumerate(windows)]
            else:
                with ThreadPoolExecutor(max_workers=n_workers) as pool:
                    scores = list(pool.map(evaluate, enumerate(windows)))
        except LoadBenchError as exc:
            raise type(exc)(
                f"{config.experiment_id}/{name}: {exc}"
            ) from exc

        summary = aggregate_scores(scores)
        rows.append(ResultRow(
            experiment_id=config.experiment_id,
            model_name=name,
            mae=summary.mae,
            rmse=summary.rmse,
            num_windows=len(scores),
            q10=summary.q10,
            q50=summary.q50,
            q90=summary.q90,
            wall_time_seconds=time.perf_counter() - started,
        ))
    return sorted(rows, key=lambda row: row.model_name)


# --------------------------------------------------------------------------
# result tables
# --------------------------------------------------------------------------

def _fmt(value: float | None, missing: str) -> str:
    return missing if value is None else f"{value:.4f}"


def render_csv(rows: list[ResultRow]) -> str:
    lines = [RESULT_CSV_HEADER]
    for row in rows:
        lines.append(",".join([
            row.experiment_id,
            row.model_name,
            _fmt(row.q10, ""),
            _fmt(row.q50, ""),
            _fmt(row.q90, ""),
            f"{row.mae:.4f}",
            f"{row.rmse:.4f}",
            str(row.num_windows),
        ]))
    return "\n".join(lines) + "\n"


def render_markdown(rows: list[ResultRow]) -> str:
    groups: dict[str, list[ResultRow]] = {}
    for row in rows:
        groups.setdefault(row.experiment_id, []).append(row)
    blocks = []
    for experiment_id, group in groups.items():
        lines = [
            f"## {experiment_id}",
            "",
            "| model | Q 10% | Q 50% | Q 90% | MAE | RMSE | windows |",
            "| --- | --- | --- | --- | --- | --- | --- |",
        ]
        for row in group:
            lines.append(
                f"| {row.model_name} | {_fmt(row.q10, '/')} "
                f"| {_fmt(row.q50, '/')} | {_fmt(row.q90, '/')} "
                f"| {row.mae:.4f} | {row.rmse:.4f} | {row.num_windows} |"
            )
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def emit_table(rows: list[ResultRow], format: str, path: str | Path) -> Path:
    """Write rows as CSV or markdown; refuses to write an empty table."""
    if not rows:
        raise EmptyList("no result rows to write")
    if format == "csv":
        text = render_csv(rows)
    elif format == "markdown":
        text = render_markdown(rows)
    else:
        raise ValueError(f"unknown table format '{format}'")
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return path


# --------------------------------------------------------------------------
# external forecast scoring
# --------------------------------------------------------------------------

def read_window_actuals(path: str | Path) -> dict[str, np.ndarray]:
    """Read per-window target vectors from a ``window_id,step,value`` CSV."""
    path = Path(path)
    table: dict[str, dict[int, float]] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyFile(f"{path}: file is empty")
        if tuple(h.strip() for h in header) != ACTUALS_CSV_HEADER:
            raise MalformedRow(
                f"{path}: expected header "
                f"'{','.join(ACTUALS_CSV_HEADER)}', got {header}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise MalformedRow(
                    f"{path}:{lineno}: expected 3 fields, got {len(row)}"
                )
            wid = row[0].strip()
            try:
                step = int(row[1])
                value = float(row[2])
            except ValueError as exc:
                raise MalformedRow(f"{path}:{lineno}: {exc}") from exc
            if not np.isfinite(value):
                raise MalformedRow(f"{path}:{lineno}: non-finite value")
            steps = table.setdefault(wid, {})
            if step in steps:
                raise MalformedRow(
                    f"{path}:{lineno}: duplicate step {step} in window {wid}"
                )
            steps[step] = value
    if not table:
        raise EmptyFile(f"{path}: no data rows")
    actuals = {}
    for wid, steps in table.items():
        horizon = len(steps)
        if sorted(steps) != list(range(horizon)):
            raise MalformedRow(
                f"{path}: window {wid} steps are not contiguous from 0"
            )
        actuals[wid] = np.array([steps[s] for s in range(horizon)])
    return actuals


def score_external_forecasts(
        actuals: dict[str, np.ndarray],
        forecasts: list[tuple[str, ProbabilisticForecast]]) -> list[WindowScore]:
    """Score externally produced sample paths against per-window actuals.

    Single-sample forecasts are scored as point predictions (no quantile
    columns); multi-sample forecasts get the full probabilistic treatment.
    Every forecast window must have a matching actual of the same horizon.
    """
    scores = []
    for window_id, forecast in forecasts:
        if window_id not in actuals:
            raise MisalignedSeries(
                f"window {window_id} has forecasts but no actuals"
            )
        target = actuals[window_id]
        if target.size != forecast.horizon_H:
            raise HorizonMismatch(
                f"window {window_id}: forecast horizon {forecast.horizon_H} "
                f"does not match actuals length {target.size}"
            )
        if forecast.num_samples_S == 1:
            scores.append(score_window(target, forecast.sample_paths[0],
                                       window_id=window_id))
        else:
            scores.append(score_window(target, forecast,
                                       window_id=window_id))
    return scores


def render_score_csv(scores: list[WindowScore]) -> str:
    """Per-window score table plus a final mean row."""
    if not scores:
        raise EmptyList("no window scores to render")
    lines = ["window_id,q10,q50,q90,mae,rmse"]
    rows = list(scores)
    if len(scores) > 1:
        rows.append(aggregate_scores(scores))
    for score in rows:
        lines.append(",".join([
            score.window_id,
            _fmt(score.q10, ""),
            _fmt(score.q50, ""),
            _fmt(score.q90, ""),
            f"{score.mae:.4f}",
            f"{score.rmse:.4f}",
        ]))
    return "\n".join(lines) + "\n"
