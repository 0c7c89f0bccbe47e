"""Command-line entry point.

Four subcommands: ``run`` executes a configured benchmark and writes the
result tables, ``synth`` generates a synthetic load CSV, ``score`` evaluates
externally produced forecast samples against actuals, and ``validate`` checks
a config without running anything. Exit codes: 0 success, 1 validation
problem, 2 runtime failure. Errors go to stderr.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .bench import (
    emit_table,
    load_config,
    read_window_actuals,
    render_score_csv,
    resolve_worker_count,
    run_experiment,
    score_external_forecasts,
)
from .errors import ConfigError, IoFailure, LoadBenchError
from .forecasters import ingest_external_forecasts
from .series import generate_synthetic, write_csv


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loadbench",
        description="Probabilistic short-term load forecasting benchmark.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a configured benchmark")
    run.add_argument("--config", required=True, help="INI experiment config")
    run.add_argument("--seed", type=int, default=None,
                     help="override the config's master seed")
    run.add_argument("--out", default=None,
                     help="directory overriding the configured output location")
    run.add_argument("--workers", type=int, default=None,
                     help="thread pool size (default: env or cpu count)")

    synth = sub.add_parser("synth", help="write a synthetic load CSV")
    synth.add_argument("--days", type=int, required=True)
    synth.add_argument("--resolution", type=int, required=True,
                       choices=(15, 30, 60))
    synth.add_argument("--profile", default="household",
                       choices=("household", "feeder"))
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--out", required=True)

    score = sub.add_parser("score", help="score external forecast samples")
    score.add_argument("--actuals", required=True,
                       help="CSV of window_id,step,value targets")
    score.add_argument("--forecasts", required=True,
                       help="CSV of window_id,sample_id,step,value samples")
    score.add_argument("--out", required=True, help="score table destination")

    validate = sub.add_parser("validate", help="check a config file")
    validate.add_argument("--config", required=True)
    return parser


def _cmd_run(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = replace(config, master_seed=args.seed)
    workers = resolve_worker_count(args.workers)
    rows = run_experiment(config, workers=workers)
    csv_path = Path(config.output_csv)
    md_path = Path(config.output_markdown)
    if args.out is not None:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = out_dir / csv_path.name
        md_path = out_dir / md_path.name
    emit_table(rows, "csv", csv_path)
    emit_table(rows, "markdown", md_path)
    for row in rows:
        print(f"{row.experiment_id} {row.model_name}: mae={row.mae:.4f} "
              f"rmse={row.rmse:.4f} windows={row.num_windows} "
              f"({row.wall_time_seconds:.2f}s)")
    print(f"wrote {csv_path} and {md_path}")
    return 0


def _cmd_synth(args) -> int:
    series = generate_synthetic(args.days, args.resolution,
                                profile=args.profile, seed=args.seed)
    write_csv(series, args.out)
    print(f"wrote {len(series)} steps ({args.days} days at "
          f"{args.resolution}-minute resolution) to {args.out}")
    return 0


def _cmd_score(args) -> int:
    actuals = read_window_actuals(args.actuals)
    horizons = {v.size for v in actuals.values()}
    if len(horizons) != 1:
        raise ConfigError(
            f"actuals file mixes horizons {sorted(horizons)}; "
            f"score one protocol at a time"
        )
    expected_h = horizons.pop()
    forecasts = ingest_external_forecasts(args.forecasts, expected_h)
    scores = score_external_forecasts(actuals, forecasts)
    text = render_score_csv(scores)
    try:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoFailure(f"cannot write {args.out}: {exc}") from exc
    print(f"scored {len(scores)} windows -> {args.out}")
    return 0


def _cmd_validate(args) -> int:
    config = load_config(args.config)
    print(f"{args.config}: ok ({config.experiment_id}, "
          f"{len(config.model_names)} models)")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "synth": _cmd_synth,
        "score": _cmd_score,
        "validate": _cmd_validate,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (LoadBenchError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
