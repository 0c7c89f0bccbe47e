"""Tour of the load-series toolkit.

Generates synthetic household and feeder series, resamples and aggregates
them, splits chronologically, slides evaluation windows, and round-trips a
series through CSV. Run from the repository root:

    python3 demos/01_synthetic_data.py
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from loadbench import (
    LoadSeries,
    WindowSpec,
    aggregate,
    chronological_split,
    generate_synthetic,
    ingest_csv,
    make_windows,
    resample,
    write_csv,
)

OUT_DIR = Path(__file__).resolve().parent / "output"


def describe(name: str, series: LoadSeries) -> None:
    v = series.values
    print(f"  {name}: {v.size} steps @ {series.resolution_minutes} min "
          f"({series.kind}), mean {v.mean():.3f}, min {v.min():.3f}, "
          f"max {v.max():.3f} kW")


def main() -> None:
    print("== synthetic generation ==")
    household = generate_synthetic(7, 60, profile="household", seed=1)
    feeder = generate_synthetic(7, 60, profile="feeder", seed=1)
    describe("household", household)
    describe("feeder   ", feeder)
    print("  households are spiky; feeders are smoother. Coefficients of "
          "variation:")
    for name, s in (("household", household), ("feeder", feeder)):
        print(f"    {name}: {s.values.std() / s.values.mean():.2f}")

    print("\n== resampling ==")
    fine = generate_synthetic(2, 15, profile="household", seed=2)
    coarse = resample(fine, 60)
    describe("15-min", fine)
    describe("60-min", coarse)
    total_fine = fine.values.mean()
    total_coarse = coarse.values.mean()
    print(f"  averaging preserves the mean: {total_fine:.6f} vs "
          f"{total_coarse:.6f}")

    print("\n== aggregation ==")
    homes = [generate_synthetic(7, 60, profile="household", seed=s)
             for s in range(5)]
    block = aggregate(homes)
    describe("5-home block", block)
    np.testing.assert_allclose(
        block.values, np.sum([h.values for h in homes], axis=0))
    print("  block series is the pointwise sum of its members")

    print("\n== chronological split and windows ==")
    series = generate_synthetic(14, 60, profile="feeder", seed=3)
    split = chronological_split(series, train_fraction=0.6)
    print(f"  14 days split 60/40: train {split.train.values.size} steps, "
          f"test {split.test.values.size} steps")
    spec = WindowSpec()  # 3 context days, 1 horizon day, stride 1 day
    windows = make_windows(split.test, spec)
    print(f"  test part yields {len(windows)} windows of "
          f"{spec.context_steps(60)} context + {spec.horizon_steps(60)} "
          f"target steps")
    first = windows[0]
    print(f"  first window starts {first.window_start.isoformat()} with "
          f"context mean {first.context.mean():.3f}")

    print("\n== CSV round trip ==")
    OUT_DIR.mkdir(exist_ok=True)
    path = OUT_DIR / "household_week.csv"
    write_csv(household, path)
    back = ingest_csv(path, 60, series_id=household.series_id)
    np.testing.assert_allclose(back.values, household.values)
    assert back.start_time == household.start_time
    print(f"  wrote and re-read {path.name}: values and start time intact")


if __name__ == "__main__":
    main()
