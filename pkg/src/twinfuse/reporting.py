"""Machine-readable run artifacts.

Three delimited files per run, all written atomically (temp file + rename)
and byte-deterministic for a given config and seed:

* trace.jsonl: one JSON object per fusion cycle
* metrics.csv: rows of metric, sensor, value
* transitions.csv: rows of cycle, sensor, from, to, reason

Floats are serialized with their shortest round-trip decimal form.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Sequence

from .orchestrator import MetricRow, ScenarioReport

TRACE_FILE = "trace.jsonl"
METRICS_FILE = "metrics.csv"
TRANSITIONS_FILE = "transitions.csv"


def atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def trace_text(report: ScenarioReport) -> str:
    lines = []
    for record in report.cycles:
        obj = {
            "cycle_index": record.cycle_index,
            "timestamps": list(record.timestamps),
            "sources": [s.value for s in record.sources],
            "flags": [list(row) for row in record.flags.flags],
            "elementwise": list(record.elementwise),
            "composite": record.composite,
            "statuses": [s.value for s in record.statuses],
            "participating": list(record.participating),
        }
        lines.append(json.dumps(obj, separators=(",", ":")))
    return "\n".join(lines) + ("\n" if lines else "")


def metrics_text(rows: Sequence[MetricRow], failed_at_cycle: int | None = None) -> str:
    lines = ["metric,sensor,value"]
    for row in rows:
        sensor = "" if row.sensor is None else str(row.sensor)
        lines.append(f"{row.name},{sensor},{row.value!r}")
    if failed_at_cycle is not None:
        lines.append(f"failed_at_cycle,,{failed_at_cycle}")
    return "\n".join(lines) + "\n"


def transitions_text(report: ScenarioReport) -> str:
    lines = ["cycle,sensor,from,to,reason"]
    for t in report.transitions:
        lines.append(
            f"{t.cycle},{t.sensor},{t.from_status.value},{t.to_status.value},{t.reason}"
        )
    return "\n".join(lines) + "\n"


def write_report(report: ScenarioReport, outdir: str | Path) -> dict[str, Path]:
    """Write the three delimited artifacts; returns their paths by name."""
    out = Path(outdir)
    paths = {
        "trace": out / TRACE_FILE,
        "metrics": out / METRICS_FILE,
        "transitions": out / TRANSITIONS_FILE,
    }
    atomic_write_text(paths["trace"], trace_text(report))
    atomic_write_text(
        paths["metrics"], metrics_text(report.metrics, report.failed_at_cycle)
    )
    atomic_write_text(paths["transitions"], transitions_text(report))
    return paths


def forecast_table_text(
    rows: Sequence[tuple[int, float | None, float]],
) -> str:
    """(timestamp, truth, forecast) rows for twin evaluation plots."""
    lines = ["timestamp,truth,forecast"]
    for ts, truth, forecast in rows:
        truth_s = "" if truth is None else repr(truth)
        lines.append(f"{ts},{truth_s},{forecast!r}")
    return "\n".join(lines) + "\n"
