"""Command-line entry point.

Subcommands:

* ``run``: execute one or more scenario configs and write trace.jsonl,
  metrics.csv, transitions.csv and figures per run
* ``fusion-demo``: replay the two documented fusion cycles on their literal
  numbers and verify the composites 7.20 and 7.16
* ``twin-eval``: fit a twin, forecast a horizon, and report MAE, RMSE and
  tracking duration alongside a plot-ready forecast table

Exit codes: 0 success, 2 usage or config error, 3 total failure during a
run (partial artifacts are still written). TWINFUSE_MAX_WORKERS caps the
worker threads used when several configs run at once.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import __version__, twin as twin_mod
from .config import RunConfig, TwinEvalConfig, build_traces, load_run_config, load_twin_eval_config
from .fusion import FusionState, fusion_cycle
from .model import ConfigError, Reading, Threshold, ThresholdMode, TriadWindow, TwinfuseError
from .orchestrator import TotalFailureError, run_scenario
from .plotting import render_run_figures, render_twin_eval_figure
from .reporting import (
    atomic_write_text,
    forecast_table_text,
    metrics_text,
    write_report,
)
from .orchestrator import MetricRow

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_TOTAL_FAILURE = 3


def _max_workers() -> int:
    raw = os.environ.get("TWINFUSE_MAX_WORKERS", "")
    try:
        value = int(raw)
    except ValueError:
        return min(4, os.cpu_count() or 1)
    return max(1, value)


def _run_one(config_path: str, outdir: Path, seed: int | None, figures: bool) -> int:
    cfg = load_run_config(config_path)
    scenario = cfg.scenario if seed is None else replace(cfg.scenario, seed=seed)
    needed = scenario.twin_train_len + scenario.run_len
    clean, truth = build_traces(cfg.traces, needed, scenario.seed)

    failed = False
    try:
        report = run_scenario(scenario, clean, truth)
    except TotalFailureError as exc:
        report = exc.report
        failed = True
        print(f"{config_path}: {exc}", file=sys.stderr)
    paths = write_report(report, outdir)
    if figures:
        render_run_figures(report, outdir)
    for name in ("trace", "metrics", "transitions"):
        print(f"{name}: {paths[name]}")
    return EXIT_TOTAL_FAILURE if failed else EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    configs = args.config
    out = Path(args.out)
    jobs: list[tuple[str, Path]] = []
    for path in configs:
        subdir = out if len(configs) == 1 else out / Path(path).stem
        jobs.append((path, subdir))
    codes: list[int] = []
    if len(jobs) == 1:
        path, subdir = jobs[0]
        codes.append(_run_one(path, subdir, args.seed, not args.no_figures))
    else:
        with ThreadPoolExecutor(max_workers=_max_workers()) as pool:
            futures = [
                pool.submit(_run_one, path, subdir, args.seed, not args.no_figures)
                for path, subdir in jobs
            ]
            codes = [f.result() for f in futures]
    return max(codes)


# The documented two-cycle fusion example: three sensors, look-back 5, the
# second cycle has two dropped values on sensor 2 corrected against the
# previous composite.
_DEMO_CYCLE1 = ((7, 8, 8, 7, 6), (6, 7, 8, 8, 7), (7, 6, 7, 8, 8))
_DEMO_CYCLE2 = ((7, 8, 8, 7, 6), (6, 0, 0, 8, 7), (7, 6, 7, 8, 8))
_DEMO_EXPECTED = (7.20, 7.16)


def cmd_fusion_demo(_args: argparse.Namespace) -> int:
    threshold = Threshold(3.0, ThresholdMode.ABSOLUTE)
    state = FusionState()
    composites = []
    for cyc, rows in enumerate((_DEMO_CYCLE1, _DEMO_CYCLE2)):
        window = TriadWindow(
            timestamps=tuple(range(cyc * 5, cyc * 5 + 5)),
            rows=tuple(tuple(Reading.of(v) for v in row) for row in rows),
        )
        output, state = fusion_cycle(window, state, threshold)
        composites.append(output.composite)
        print(f"cycle {cyc + 1} readings:")
        for s, row in enumerate(rows):
            print(f"  sensor-{s + 1}: {row}")
        for s, row in enumerate(output.corrected):
            print(f"  corrected sensor-{s + 1}: ({', '.join(f'{v:g}' for v in row)})")
        print(f"  elementwise: ({', '.join(f'{v:.4f}' for v in output.elementwise)})")
        print(f"  composite: {output.composite:.4f}")
    ok = all(
        math.isclose(got, want, abs_tol=1e-9)
        for got, want in zip(composites, _DEMO_EXPECTED)
    )
    if not ok:
        print(
            f"MISMATCH: expected composites {_DEMO_EXPECTED}, got {composites}",
            file=sys.stderr,
        )
        return 1
    print("composites match 7.20 and 7.16")
    return EXIT_OK


def cmd_twin_eval(args: argparse.Namespace) -> int:
    cfg = load_twin_eval_config(args.config)
    needed = cfg.train_len + cfg.horizon
    clean, _truth = build_traces(cfg.trace, needed, cfg.seed)
    trace = clean[0]
    if len(trace) < needed:
        raise ConfigError(
            "trace.length", f"need {needed} grid points, trace has {len(trace)}"
        )

    history = trace.with_readings(trace.readings[: cfg.train_len])
    model = twin_mod.fit(history, cfg.settings)
    horizon_ts = [trace.timestamp_at(cfg.train_len + j) for j in range(cfg.horizon)]
    forecast = model.predict(horizon_ts)

    rows = []
    abs_errors = []
    for ts, value in zip(forecast.timestamps, forecast.values):
        reading = trace.readings[trace.index_of(ts)]
        truth_v = reading.value if reading.present else None
        rows.append((ts, truth_v, float(value)))
        if truth_v is not None:
            abs_errors.append(abs(float(value) - truth_v))

    out = Path(args.out)
    atomic_write_text(out / "forecast.csv", forecast_table_text(rows))
    metrics = []
    if abs_errors:
        mae = sum(abs_errors) / len(abs_errors)
        rmse = math.sqrt(sum(e * e for e in abs_errors) / len(abs_errors))
        metrics.append(MetricRow("twin_mae", None, mae))
        metrics.append(MetricRow("twin_rmse", None, rmse))
    duration = twin_mod.tracking_duration(forecast, trace, cfg.tolerance)
    metrics.append(MetricRow("tracking_duration_s", None, duration))
    atomic_write_text(out / "metrics.csv", metrics_text(metrics))
    if not args.no_figures:
        render_twin_eval_figure(rows, cfg.tolerance, out)
    print(f"forecast: {out / 'forecast.csv'}")
    print(f"metrics: {out / 'metrics.csv'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twinfuse",
        description="Fault-tolerant triplicated sensing simulator",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one or more scenario configs")
    run.add_argument(
        "--config", action="append", required=True, help="scenario config path (repeatable)"
    )
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    run.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    run.set_defaults(func=cmd_run)

    demo = sub.add_parser("fusion-demo", help="replay the documented two-cycle example")
    demo.set_defaults(func=cmd_fusion_demo)

    twin_eval = sub.add_parser("twin-eval", help="evaluate a twin forecast on a trace")
    twin_eval.add_argument("--config", required=True, help="twin-eval config path")
    twin_eval.add_argument("--out", required=True, help="output directory")
    twin_eval.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    twin_eval.set_defaults(func=cmd_twin_eval)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TwinfuseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
