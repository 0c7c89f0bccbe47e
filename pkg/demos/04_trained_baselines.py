"""Trained baselines: Gaussian-process regression and epsilon-SVR.

Fits both models on the training part of a synthetic feeder series,
forecasts a held-out day, and compares them against last-day persistence.
If matplotlib is installed the forecasts are also drawn to
``demos/output/baselines.png``. Run from the repository root:

    python3 demos/04_trained_baselines.py
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from loadbench import (
    WindowSpec,
    chronological_split,
    forecast_quantile,
    generate_synthetic,
    gp_fit,
    gp_predict,
    make_windows,
    score_window,
    svr_fit,
    svr_predict,
)

OUT_DIR = Path(__file__).resolve().parent / "output"


def main() -> None:
    series = generate_synthetic(24, 60, profile="feeder", seed=11)
    split = chronological_split(series, train_fraction=0.6)
    spec = WindowSpec()
    print(f"24-day feeder series: train {split.train.values.size} steps, "
          f"test {split.test.values.size} steps")

    print("\n== fitting ==")
    gp = gp_fit(split.train, spec)
    print(f"  GP: kernel {gp.kernel.kind}, lengthscale "
          f"{gp.kernel.lengthscale:.3f}, noise variance "
          f"{gp.kernel.noise_variance:.4f} (grid-selected by marginal "
          f"likelihood)")
    svr = svr_fit(split.train, spec)
    print(f"  SVR: {svr.support_indices.size} support vectors out of "
          f"{svr.dual_coefs.size} training rows, tube half-width epsilon = "
          f"{svr.epsilon:.4f}")

    window = make_windows(split.test, spec)[0]
    context, target = window.context, window.target
    horizon = target.size
    # the window sits this many steps past the start of the series
    base = split.train.values.size

    print("\n== forecasting one held-out day ==")
    gp_fc = gp_predict(gp, context, horizon, 500, seed=0, start_step=base)
    svr_point = svr_predict(svr, context, horizon, start_step=base)
    persistence = context[-horizon:]

    rows = [
        ("persistence (yesterday)", score_window(target, persistence)),
        ("svr", score_window(target, svr_point)),
        ("gp", score_window(target, gp_fc)),
    ]
    print(f"  {'model':26s} {'MAE':>8s} {'RMSE':>8s}")
    for name, score in rows:
        print(f"  {name:26s} {score.mae:8.4f} {score.rmse:8.4f}")
    gp_score = rows[2][1]
    print(f"  gp pinball q10/q50/q90: {gp_score.q10:.4f} / "
          f"{gp_score.q50:.4f} / {gp_score.q90:.4f}")

    q10 = forecast_quantile(gp_fc, 0.1)
    q90 = forecast_quantile(gp_fc, 0.9)
    coverage = np.mean((target >= q10) & (target <= q90))
    print(f"  GP 80% band covers {coverage:.0%} of the day")
    print("  (GP sample paths draw from the posterior over the smooth "
          "profile,\n   not over noisy readings, so the band can be "
          "narrower than the data)")

    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("\nmatplotlib not installed; skipping the plot")
        return

    OUT_DIR.mkdir(exist_ok=True)
    hours = np.arange(horizon)
    fig, ax = plt.subplots(figsize=(9, 4.5))
    ax.fill_between(hours, q10, q90, alpha=0.25, label="GP 10-90% band")
    ax.plot(hours, forecast_quantile(gp_fc, 0.5), label="GP median")
    ax.plot(hours, svr_point, label="SVR", linestyle="--")
    ax.plot(hours, persistence, label="persistence", linestyle=":")
    ax.plot(hours, target, label="actual", color="black", linewidth=2)
    ax.set_xlabel("hour of held-out day")
    ax.set_ylabel("load (kW)")
    ax.legend(loc="upper left", ncol=2)
    fig.tight_layout()
    path = OUT_DIR / "baselines.png"
    fig.savefig(path, dpi=120)
    print(f"\nwrote {path}")


if __name__ == "__main__":
    main()
