"""Two ways to turn a load series into discrete tokens.

Value quantization maps each reading to the index of a bin in a uniform,
mean-scaled grid over the context's value range, and back to bin centers.
Segmentation slices the series into equal-length contiguous blocks, each
treated as one token. Both are exact-contract codecs: quantization round-trips
within half a bin width, segmentation round-trips losslessly.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    EmptyContext,
    IndivisibleLength,
    NegativeValue,
    NonFiniteInput,
    TokenOutOfRange,
)

DEFAULT_NUM_BINS = 128


def _freeze(values: np.ndarray, dtype=np.float64) -> np.ndarray:
    out = np.array(values, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class QuantizationCodec:
    """Uniform value-quantization grid fitted to one context window.

    Bins are left-closed intervals ``[edge[i], edge[i+1])`` covering
    ``[0, 2 * max(context)]``; values outside clamp to the first/last bin.
    ``scale`` records the context mean used for normalization, so the grid is
    uniform in scaled space as well (the scaling is linear).
    """

    num_bins: int
    bin_edges: np.ndarray
    scale: float
    bin_centers: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.num_bins < 1:
            raise ValueError("num_bins must be >= 1")
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        edges = _freeze(self.bin_edges)
        if edges.shape != (self.num_bins + 1,):
            raise ValueError(
                f"expected {self.num_bins + 1} bin edges, got {edges.shape}"
            )
        if edges[0] != 0.0:
            raise ValueError("bin_edges must start at 0 (load is non-negative)")
        if not np.all(np.diff(edges) > 0):
            raise ValueError("bin_edges must be strictly increasing")
        object.__setattr__(self, "bin_edges", edges)
        centers = (edges[:-1] + edges[1:]) / 2.0
        if self.bin_centers is not None and not np.array_equal(
            np.asarray(self.bin_centers, dtype=np.float64), centers
        ):
            raise ValueError("bin_centers must be the midpoints of bin_edges")
        object.__setattr__(self, "bin_centers", _freeze(centers))

    @property
    def bin_width(self) -> float:
        return float(self.bin_edges[1] - self.bin_edges[0])

    @property
    def codec_id(self) -> str:
        """Stable short fingerprint of the codec contents."""
        digest = hashlib.sha256(serialize_codec(self).encode("utf-8"))
        return digest.hexdigest()[:12]


@dataclass(frozen=True)
class TokenSequence:
    """Ordered token ids plus the fingerprint of the codec that produced them."""

    tokens: np.ndarray
    codec_id: str

    def __post_init__(self) -> None:
        tokens = np.asarray(self.tokens)
        if not np.issubdtype(tokens.dtype, np.integer):
            raise TypeError("token ids must be integers")
        tokens = _freeze(tokens, dtype=np.int64)
        if tokens.size and tokens.min() < 0:
            raise TokenOutOfRange(f"negative token id {tokens.min()}")
        object.__setattr__(self, "tokens", tokens)

    def __len__(self) -> int:
        return int(self.tokens.size)


@dataclass(frozen=True)
class SegmentCodec:
    """Fixed-length segmentation: consecutive blocks of ``segment_length_b`` values."""

    segment_length_b: int

    def __post_init__(self) -> None:
        if self.segment_length_b < 1:
            raise ValueError("segment_length_b must be >= 1")


def default_segment_length(resolution_minutes: int) -> int:
    """Steps per hour, so segment tokens align with hour boundaries."""
    return 60 // resolution_minutes


def fit_quantization_codec(context: np.ndarray,
                           num_bins: int = DEFAULT_NUM_BINS) -> QuantizationCodec:
    """Fit a uniform bin grid to one context window.

    The grid spans ``[0, 2 * max(context)]`` so every context value falls
    strictly inside it, with ``scale = mean(context)`` recorded for
    normalization (falling back to 1 for an all-zero context, where the range
    defaults to ``[0, 1]``).

    Raises
    ------
    EmptyContext, NonFiniteInput, NegativeValue
    """
    values = np.asarray(context, dtype=np.float64).ravel()
    if values.size == 0:
        raise EmptyContext("cannot fit a codec on an empty context")
    if not np.all(np.isfinite(values)):
        raise NonFiniteInput("context contains non-finite values")
    if np.any(values < 0):
        raise NegativeValue(f"context contains negative load: min={values.min()}")
    mean = float(values.mean())
    scale = mean if mean > 0 else 1.0
    top = 2.0 * float(values.max())
    if top <= 0.0:
        top = 1.0
    edges = np.linspace(0.0, top, num_bins + 1)
    return QuantizationCodec(num_bins=num_bins, bin_edges=edges, scale=scale)


def tokenize(codec: QuantizationCodec, values: np.ndarray) -> TokenSequence:
    """Map values to bin indices (left-closed bins, clamped at both ends)."""
    v = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise NonFiniteInput("cannot tokenize non-finite values")
    ids = np.searchsorted(codec.bin_edges, v, side="right") - 1
    ids = np.clip(ids, 0, codec.num_bins - 1)
    return TokenSequence(tokens=ids.astype(np.int64), codec_id=codec.codec_id)


def detokenize(codec: QuantizationCodec,
               tokens: TokenSequence | np.ndarray) -> np.ndarray:
    """Map token ids back to their bin centers.

    Accepts a :class:`TokenSequence` or a raw integer array. Output is
    non-negative by construction (all bin centers are >= 0).
    """
    ids = tokens.tokens if isinstance(tokens, TokenSequence) else np.asarray(tokens)
    if ids.size and (ids.min() < 0 or ids.max() >= codec.num_bins):
        raise TokenOutOfRange(
            f"token ids must lie in [0, {codec.num_bins}), "
            f"got range [{ids.min()}, {ids.max()}]"
        )
    return codec.bin_centers[ids]


def segment(codec: SegmentCodec, values: np.ndarray) -> list[np.ndarray]:
    """Split values into contiguous non-overlapping blocks of length b.

    Concatenating the result reproduces the input bit-exactly.

    Raises
    ------
    IndivisibleLength
        If ``len(values)`` is not divisible by ``segment_length_b``.
    """
    v = np.asarray(values, dtype=np.float64)
    b = codec.segment_length_b
    if v.size % b != 0:
        raise IndivisibleLength(
            f"length {v.size} is not divisible by segment length {b}"
        )
    return [v[i : i + b].copy() for i in range(0, v.size, b)]


def serialize_codec(codec: QuantizationCodec) -> str:
    """Plain-text key-value form of a codec (exact float round-trip)."""
    edges = ",".join(repr(float(e)) for e in codec.bin_edges)
    return (
        f"num_bins={codec.num_bins}\n"
        f"scale={float(codec.scale)!r}\n"
        f"bin_edges={edges}\n"
    )


def save_codec(codec: QuantizationCodec, path: str | Path) -> None:
    Path(path).write_text(serialize_codec(codec), encoding="utf-8")


def load_codec(path: str | Path) -> QuantizationCodec:
    fields: dict[str, str] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        key, _, value = line.partition("=")
        fields[key.strip()] = value.strip()
    try:
        num_bins = int(fields["num_bins"])
        scale = float(fields["scale"])
        edges = np.array([float(e) for e in fields["bin_edges"].split(",")])
    except (KeyError, ValueError) as exc:
        raise ValueError(f"{path}: not a valid codec file") from exc
    return QuantizationCodec(num_bins=num_bins, bin_edges=edges, scale=scale)
