"""Value quantization and day segmentation.

Shows how a continuous load context becomes a discrete token sequence and
comes back, how large the reconstruction error can get, how codecs persist,
and how a series splits into fixed-length segments. Run from the repository
root:

    python3 demos/02_tokenization.py
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from loadbench import (
    SegmentCodec,
    default_segment_length,
    detokenize,
    fit_quantization_codec,
    generate_synthetic,
    load_codec,
    save_codec,
    segment,
    tokenize,
)

OUT_DIR = Path(__file__).resolve().parent / "output"


def main() -> None:
    series = generate_synthetic(3, 60, profile="household", seed=5)
    context = series.values

    print("== fitting a quantization codec ==")
    codec = fit_quantization_codec(context)  # default bin count
    print(f"  context range [{context.min():.3f}, {context.max():.3f}] kW")
    print(f"  {codec.num_bins} equal-width bins of {codec.bin_width:.4f} kW")
    print(f"  first three centers: "
          f"{np.array2string(codec.bin_centers[:3], precision=4)}")

    print("\n== round trip ==")
    tokens = tokenize(codec, context)
    recon = detokenize(codec, tokens)
    err = np.abs(recon - context)
    print(f"  {len(tokens)} tokens, ids in "
          f"[{tokens.tokens.min()}, {tokens.tokens.max()}]")
    print(f"  max reconstruction error {err.max():.5f} kW "
          f"<= half bin width {codec.bin_width / 2:.5f} kW: "
          f"{bool(err.max() <= codec.bin_width / 2)}")
    print("  a coarser codec trades fidelity for vocabulary size:")
    for bins in (16, 64, 256):
        c = fit_quantization_codec(context, bins)
        e = np.abs(detokenize(c, tokenize(c, context)) - context).max()
        print(f"    {bins:4d} bins -> max error {e:.5f} kW")

    print("\n== codec persistence ==")
    OUT_DIR.mkdir(exist_ok=True)
    path = OUT_DIR / "codec.json"
    save_codec(codec, path)
    loaded = load_codec(path)
    np.testing.assert_allclose(loaded.bin_edges, codec.bin_edges)
    print(f"  saved to {path.name} and re-loaded with identical bin edges")

    print("\n== hour segmentation ==")
    fine = generate_synthetic(1, 15, profile="household", seed=5)
    b = default_segment_length(15)
    parts = segment(SegmentCodec(b), fine.values)
    print(f"  15-minute resolution -> segment length {b} (one hour)")
    print(f"  one day -> {len(parts)} segments of {len(parts[0])} steps")
    np.testing.assert_array_equal(np.concatenate(parts), fine.values)
    print("  concatenating the segments reproduces the series exactly")


if __name__ == "__main__":
    main()
