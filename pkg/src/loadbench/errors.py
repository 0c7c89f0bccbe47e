"""Exception hierarchy shared by all loadbench modules.

Every error raised by the library derives from :class:`LoadBenchError`, so
callers can catch one type at the harness boundary while tests assert on the
precise condition.
"""

from __future__ import annotations


class LoadBenchError(Exception):
    """Base class for all loadbench errors."""


# --- time-series ingestion and manipulation ---------------------------------

class MalformedRow(LoadBenchError):
    """A CSV row could not be parsed (bad timestamp or number)."""


class NonUniformSampling(LoadBenchError):
    """Timestamps are not strictly increasing at the declared resolution."""


class NegativeValue(LoadBenchError):
    """A load reading is negative; load is physically non-negative."""


class EmptyFile(LoadBenchError):
    """The input file contains no data rows."""


class IncompatibleResolution(LoadBenchError):
    """Requested resampling target is not a valid downsampling of the source."""


class MisalignedSeries(LoadBenchError):
    """Series differ in start time, resolution, or length."""


class EmptyList(LoadBenchError):
    """An operation received an empty collection."""


class SeriesTooShort(LoadBenchError):
    """The series does not span enough days for the requested operation."""


# --- tokenization ------------------------------------------------------------

class EmptyContext(LoadBenchError):
    """A forecaster or codec was given an empty context."""


class NonFiniteInput(LoadBenchError):
    """Input contains NaN/inf, or violates a sign constraint."""


class TokenOutOfRange(LoadBenchError):
    """A token id does not belong to the codec's vocabulary."""


class IndivisibleLength(LoadBenchError):
    """Sequence length is not divisible by the segment length."""


# --- forecasting --------------------------------------------------------------

class TooFewSamples(LoadBenchError):
    """Quantile extraction needs at least two sample paths."""


class IndivisibleContext(LoadBenchError):
    """Context length is not a whole number of days."""


class RaggedPaths(LoadBenchError):
    """Externally supplied sample paths have inconsistent steps."""


class HorizonMismatch(LoadBenchError):
    """Forecast horizon does not match the expected/target length."""


class InsufficientContext(LoadBenchError):
    """Context does not supply all lags required by the model."""


# --- classical baselines -----------------------------------------------------

class FactorizationFailure(LoadBenchError):
    """Cholesky factorization failed even after jitter escalation."""


class NonConvergence(LoadBenchError):
    """Optimizer did not reach the tolerance within the iteration budget."""


# --- metrics -----------------------------------------------------------------

class LengthMismatch(LoadBenchError):
    """Paired vectors have different lengths."""


class EmptyVector(LoadBenchError):
    """A metric was applied to an empty vector."""


class GammaOutOfRange(LoadBenchError):
    """Quantile level outside [0, 1]."""


class InconsistentFields(LoadBenchError):
    """Scores with mixed probabilistic/point fields cannot be aggregated."""


# --- bench -------------------------------------------------------------------

class ConfigError(LoadBenchError):
    """Experiment configuration is invalid."""


class IoFailure(LoadBenchError):
    """Reading or writing a result file failed."""
