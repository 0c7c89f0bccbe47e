"""Load time-series containers and operations.

Ingest, resample, aggregate, split, and window uniformly sampled electricity
consumption series, plus a deterministic synthetic-load generator used by the
test-suite and the demos. All containers are immutable after construction and
all operations are pure functions.

Data conventions:

- values are instantaneous load readings in kW, always >= 0 and finite
- timestamps are UTC and implied: ``timestamp(i) = start_time + i * resolution``
- supported resolutions are 15, 30, and 60 minutes
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .errors import (
    EmptyFile,
    EmptyList,
    IncompatibleResolution,
    MalformedRow,
    MisalignedSeries,
    NegativeValue,
    NonUniformSampling,
    SeriesTooShort,
)

SUPPORTED_RESOLUTIONS = (15, 30, 60)

CSV_HEADER = ["timestamp", "value"]
_TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%SZ"

MINUTES_PER_DAY = 24 * 60


def _freeze(values: np.ndarray) -> np.ndarray:
    out = np.array(values, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class LoadSeries:
    """A timestamped, uniformly sampled load sequence at a known resolution.

    Parameters
    ----------
    start_time : datetime
        UTC timestamp of the first reading.
    resolution_minutes : int
        Sampling interval; one of 15, 30, 60.
    values : np.ndarray
        Load readings in kW, finite and non-negative, length >= 1.
    series_id : str
        Opaque identifier.
    kind : str
        ``"individual"`` (single household) or ``"aggregated"`` (feeder level).
    """

    start_time: datetime
    resolution_minutes: int
    values: np.ndarray
    series_id: str = "series"
    kind: str = "individual"

    def __post_init__(self) -> None:
        if self.resolution_minutes not in SUPPORTED_RESOLUTIONS:
            raise IncompatibleResolution(
                f"resolution must be one of {SUPPORTED_RESOLUTIONS}, "
                f"got {self.resolution_minutes}"
            )
        if self.kind not in ("individual", "aggregated"):
            raise ValueError(f"kind must be 'individual' or 'aggregated', got {self.kind!r}")
        if self.start_time.tzinfo is None:
            object.__setattr__(self, "start_time", self.start_time.replace(tzinfo=timezone.utc))
        values = _freeze(np.atleast_1d(np.asarray(self.values, dtype=np.float64)))
        if values.ndim != 1 or values.size < 1:
            raise ValueError("values must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(values)):
            raise MalformedRow("values contain non-finite entries")
        if np.any(values < 0):
            raise NegativeValue(f"negative load reading: min={values.min()}")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def steps_per_day(self) -> int:
        return MINUTES_PER_DAY // self.resolution_minutes

    @property
    def num_days(self) -> int:
        """Whole days covered by the series (partial trailing day dropped)."""
        return len(self) // self.steps_per_day

    def timestamp(self, index: int) -> datetime:
        """Implied timestamp of reading ``index``."""
        return self.start_time + timedelta(minutes=index * self.resolution_minutes)

    def replace_values(self, values: np.ndarray, kind: str | None = None,
                       series_id: str | None = None) -> "LoadSeries":
        """A copy of this series with new values (same clock)."""
        return LoadSeries(
            start_time=self.start_time,
            resolution_minutes=self.resolution_minutes,
            values=values,
            series_id=self.series_id if series_id is None else series_id,
            kind=self.kind if kind is None else kind,
        )


@dataclass(frozen=True)
class WindowSpec:
    """Sliding-window layout: context/horizon/stride lengths in whole days."""

    context_days: int = 3
    horizon_days: int = 1
    stride_days: int = 1

    def __post_init__(self) -> None:
        for name in ("context_days", "horizon_days", "stride_days"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")

    def context_steps(self, resolution_minutes: int) -> int:
        return self.context_days * MINUTES_PER_DAY // resolution_minutes

    def horizon_steps(self, resolution_minutes: int) -> int:
        return self.horizon_days * MINUTES_PER_DAY // resolution_minutes


@dataclass(frozen=True)
class ForecastWindow:
    """One evaluation window: a context slice immediately followed by a target slice."""

    context: np.ndarray
    target: np.ndarray
    window_start: datetime
    series_id: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "context", _freeze(self.context))
        object.__setattr__(self, "target", _freeze(self.target))


@dataclass(frozen=True)
class TrainTestSplit:
    """Chronological train/test partition of one series."""

    train: LoadSeries
    test: LoadSeries
    train_fraction: float


def ingest_csv(path: str | Path, resolution_minutes: int,
               series_id: str | None = None, kind: str = "individual") -> LoadSeries:
    """Read a ``timestamp,value`` CSV into a validated :class:`LoadSeries`.

    The file must be UTF-8 with a header line, ISO-8601 UTC timestamps
    (``2013-01-01T00:00:00Z``), and strictly increasing rows uniformly spaced
    at ``resolution_minutes``.

    Raises
    ------
    EmptyFile, MalformedRow, NonUniformSampling, NegativeValue
    """
    path = Path(path)
    timestamps: list[datetime] = []
    values: list[float] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyFile(f"{path}: file is empty")
        if [h.strip() for h in header] != CSV_HEADER:
            raise MalformedRow(f"{path}: expected header 'timestamp,value', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise MalformedRow(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
            ts_text, value_text = row[0].strip(), row[1].strip()
            try:
                ts = datetime.fromisoformat(ts_text.replace("Z", "+00:00"))
            except ValueError as exc:
                raise MalformedRow(f"{path}:{lineno}: bad timestamp {ts_text!r}") from exc
            if ts.tzinfo is None:
                ts = ts.replace(tzinfo=timezone.utc)
            try:
                value = float(value_text)
            except ValueError as exc:
                raise MalformedRow(f"{path}:{lineno}: bad number {value_text!r}") from exc
            if not math.isfinite(value):
                raise MalformedRow(f"{path}:{lineno}: non-finite value {value_text!r}")
            if value < 0:
                raise NegativeValue(f"{path}:{lineno}: negative load {value}")
            timestamps.append(ts)
            values.append(value)

    if not values:
        raise EmptyFile(f"{path}: no data rows")

    expected_gap = timedelta(minutes=resolution_minutes)
    for i in range(1, len(timestamps)):
        gap = timestamps[i] - timestamps[i - 1]
        if gap != expected_gap:
            raise NonUniformSampling(
                f"{path}: gap of {gap} between rows {i + 1} and {i + 2}; "
                f"expected {expected_gap}"
            )

    return LoadSeries(
        start_time=timestamps[0],
        resolution_minutes=resolution_minutes,
        values=np.asarray(values),
        series_id=series_id if series_id is not None else path.stem,
        kind=kind,
    )


def write_csv(series: LoadSeries, path: str | Path) -> None:
    """Write a series in the exact CSV format accepted by :func:`ingest_csv`.

    UTF-8, ``timestamp,value`` header, ISO-8601 ``Z`` timestamps, LF endings.
    """
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("timestamp,value\n")
        for i, value in enumerate(series.values):
            stamp = series.timestamp(i).astimezone(timezone.utc).strftime(_TIMESTAMP_FORMAT)
            fh.write(f"{stamp},{float(value)!r}\n")


def resample(series: LoadSeries, target_resolution_minutes: int) -> LoadSeries:
    """Downsample to a coarser resolution by averaging consecutive readings.

    Values are kW (a rate), so each output value is the arithmetic mean of the
    ``k = target/source`` source values it covers. A trailing remainder of
    fewer than ``k`` values is dropped. Upsampling is rejected.
    """
    if (
        target_resolution_minutes not in SUPPORTED_RESOLUTIONS
        or target_resolution_minutes < series.resolution_minutes
        or target_resolution_minutes % series.resolution_minutes != 0
    ):
        raise IncompatibleResolution(
            f"cannot resample {series.resolution_minutes}-min series "
            f"to {target_resolution_minutes}-min"
        )
    k = target_resolution_minutes // series.resolution_minutes
    if k == 1:
        return series
    n_out = len(series) // k
    values = series.values[: n_out * k].reshape(n_out, k).mean(axis=1)
    return LoadSeries(
        start_time=series.start_time,
        resolution_minutes=target_resolution_minutes,
        values=values,
        series_id=series.series_id,
        kind=series.kind,
    )


def aggregate(series_list: list[LoadSeries]) -> LoadSeries:
    """Pointwise sum of aligned series; the result is feeder-level (aggregated)."""
    if not series_list:
        raise EmptyList("aggregate() needs at least one series")
    first = series_list[0]
    for other in series_list[1:]:
        if (
            other.start_time != first.start_time
            or other.resolution_minutes != first.resolution_minutes
            or len(other) != len(first)
        ):
            raise MisalignedSeries(
                f"series {other.series_id!r} is not aligned with {first.series_id!r}"
            )
    total = np.sum([s.values for s in series_list], axis=0)
    return LoadSeries(
        start_time=first.start_time,
        resolution_minutes=first.resolution_minutes,
        values=total,
        series_id="+".join(s.series_id for s in series_list),
        kind="aggregated",
    )


def chronological_split(series: LoadSeries, train_fraction: float = 0.6) -> TrainTestSplit:
    """Split a series into an earlier train part and a later test part.

    The train length is ``floor(train_fraction * len(series))`` rounded down to
    a whole number of days, so evaluation windows never straddle the boundary.
    No shuffling: every train timestamp precedes every test timestamp.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    spd = series.steps_per_day
    if len(series) < 2 * spd:
        raise SeriesTooShort(
            f"series spans {len(series)} steps; need at least 2 days ({2 * spd} steps)"
        )
    train_steps = int(math.floor(train_fraction * len(series)))
    train_steps -= train_steps % spd
    if train_steps < spd or len(series) - train_steps < 1:
        raise SeriesTooShort(
            f"train_fraction={train_fraction} leaves an empty side of the split"
        )
    train = LoadSeries(
        start_time=series.start_time,
        resolution_minutes=series.resolution_minutes,
        values=series.values[:train_steps],
        series_id=series.series_id,
        kind=series.kind,
    )
    test = LoadSeries(
        start_time=series.timestamp(train_steps),
        resolution_minutes=series.resolution_minutes,
        values=series.values[train_steps:],
        series_id=series.series_id,
        kind=series.kind,
    )
    return TrainTestSplit(train=train, test=test, train_fraction=train_fraction)


def make_windows(series: LoadSeries, spec: WindowSpec = WindowSpec()) -> list[ForecastWindow]:
    """Slide a context+horizon window over the series at ``stride_days``.

    Windows start at day boundaries relative to the series start. The number
    of windows is ``floor((D - context - horizon) / stride) + 1`` where ``D``
    is the number of whole days in the series.
    """
    spd = series.steps_per_day
    c_steps = spec.context_steps(series.resolution_minutes)
    h_steps = spec.horizon_steps(series.resolution_minutes)
    if len(series) < c_steps + h_steps:
        raise SeriesTooShort(
            f"series has {len(series)} steps; window needs {c_steps + h_steps}"
        )
    total_days = series.num_days
    count = (total_days - spec.context_days - spec.horizon_days) // spec.stride_days + 1
    windows = []
    for i in range(count):
        start = i * spec.stride_days * spd
        windows.append(
            ForecastWindow(
                context=series.values[start : start + c_steps],
                target=series.values[start + c_steps : start + c_steps + h_steps],
                window_start=series.timestamp(start),
                series_id=series.series_id,
            )
        )
    return windows


def _daily_profile(step_of_day: np.ndarray, spd: int, morning: float, evening: float,
                   base: float) -> np.ndarray:
    """Smooth within-day shape with morning and evening peaks (hours 0..24)."""
    hour = step_of_day * (24.0 / spd)
    bump_m = morning * np.exp(-0.5 * ((hour - 7.5) / 1.4) ** 2)
    bump_e = evening * np.exp(-0.5 * ((hour - 19.0) / 2.2) ** 2)
    return base + bump_m + bump_e


def generate_synthetic(num_days: int, resolution_minutes: int, profile: str = "household",
                       seed: int = 0) -> LoadSeries:
    """Generate a deterministic synthetic load series.

    The series has daily periodicity (morning/evening peaks), mild weekly
    modulation, multiplicative noise, and, for the ``household`` profile,
    sparse appliance spikes. Values are strictly positive. Bit-identical
    output for identical arguments.

    Parameters
    ----------
    num_days : int
        Whole days to generate (>= 1).
    resolution_minutes : int
        One of 15, 30, 60.
    profile : str
        ``"household"`` (single dwelling, spiky, ~kW scale) or ``"feeder"``
        (aggregate of many dwellings, smooth, ~tens of kW).
    seed : int
        RNG seed; output is a pure function of all four arguments.
    """
    if num_days < 1:
        raise ValueError("num_days must be >= 1")
    if profile not in ("household", "feeder"):
        raise ValueError(f"profile must be 'household' or 'feeder', got {profile!r}")
    spd = MINUTES_PER_DAY // resolution_minutes
    n = num_days * spd
    rng = np.random.default_rng(seed)

    steps = np.arange(n)
    step_of_day = steps % spd
    day_index = steps // spd
    weekly = 1.0 + 0.08 * np.sin(2.0 * np.pi * day_index / 7.0)

    if profile == "household":
        shape = _daily_profile(step_of_day, spd, morning=0.45, evening=0.9, base=0.18)
        values = shape * weekly * rng.lognormal(mean=0.0, sigma=0.25, size=n)
        # appliance events: rare on/off loads of 0.5-3 kW lasting one step
        spike_rate = 0.05 * resolution_minutes / 60.0
        spikes = rng.random(n) < spike_rate
        values = values + spikes * rng.exponential(scale=1.2, size=n)
        series_kind = "individual"
    else:
        shape = _daily_profile(step_of_day, spd, morning=18.0, evening=30.0, base=22.0)
        values = shape * weekly * rng.lognormal(mean=0.0, sigma=0.04, size=n)
        series_kind = "aggregated"

    return LoadSeries(
        start_time=datetime(2013, 1, 1, tzinfo=timezone.utc),
        resolution_minutes=resolution_minutes,
        values=values,
        series_id=f"synthetic-{profile}-{seed}",
        kind=series_kind,
    )
