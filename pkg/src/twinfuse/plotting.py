"""Figures rendered next to the delimited artifacts.

Plots are a convenience view of the run; the delimited files remain the
authoritative, byte-deterministic outputs.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .orchestrator import RowSource, ScenarioReport, SensorStatus

_STATUS_LEVEL = {
    SensorStatus.LIVE: 0,
    SensorStatus.TWIN_SUBSTITUTED: 1,
    SensorStatus.DROPPED: 2,
    SensorStatus.UNDER_REPAIR: 3,
}


def render_run_figures(report: ScenarioReport, outdir: str | Path) -> list[Path]:
    """Render the fused-output and lifecycle figures for one run."""
    out = Path(outdir) / "figures"
    out.mkdir(parents=True, exist_ok=True)
    paths = []

    cycles = [r.cycle_index for r in report.cycles]
    composites = [r.composite for r in report.cycles]
    participation = [len(r.participating) for r in report.cycles]

    fig, (ax_top, ax_mid, ax_bot) = plt.subplots(
        3, 1, figsize=(10, 8), sharex=True,
        gridspec_kw={"height_ratios": [3, 1, 1.4]},
    )
    ax_top.plot(cycles, composites, lw=1.2, color="tab:blue", label="composite")
    for t in report.transitions:
        ax_top.axvline(t.cycle, color="tab:red", alpha=0.25, lw=0.8)
    ax_top.set_ylabel("composite value")
    ax_top.legend(loc="best", fontsize=8)
    ax_top.set_title("Fused output per cycle (red lines mark lifecycle transitions)")

    ax_mid.step(cycles, participation, where="post", color="tab:green")
    ax_mid.set_ylim(-0.2, 3.2)
    ax_mid.set_yticks([0, 1, 2, 3])
    ax_mid.set_ylabel("rows fused")

    for s in range(3):
        levels = [_STATUS_LEVEL[r.statuses[s]] for r in report.cycles]
        ax_bot.step(cycles, [l + s * 0.08 for l in levels], where="post",
                    label=f"sensor {s}")
    ax_bot.set_yticks(list(_STATUS_LEVEL.values()))
    ax_bot.set_yticklabels([k.value for k in _STATUS_LEVEL])
    ax_bot.set_ylabel("status")
    ax_bot.set_xlabel("cycle index")
    ax_bot.legend(loc="best", fontsize=8)

    fig.tight_layout()
    path = out / "run_overview.png"
    fig.savefig(path, dpi=110)
    plt.close(fig)
    paths.append(path)

    fig, ax = plt.subplots(figsize=(10, 4))
    for s in range(3):
        sub = [
            (r.cycle_index, 1 if r.sources[s] is RowSource.TWIN else 0)
            for r in report.cycles
        ]
        ax.step([c for c, _ in sub], [v + s * 1.1 for _, v in sub], where="post",
                label=f"sensor {s} (1 = twin)")
    ax.set_xlabel("cycle index")
    ax.set_ylabel("row source")
    ax.set_yticks([])
    ax.legend(loc="best", fontsize=8)
    ax.set_title("Twin substitution per sensor")
    fig.tight_layout()
    path = out / "row_sources.png"
    fig.savefig(path, dpi=110)
    plt.close(fig)
    paths.append(path)
    return paths


def render_twin_eval_figure(
    rows: Sequence[tuple[int, float | None, float]],
    tolerance: float,
    outdir: str | Path,
) -> Path:
    """Truth vs forecast over the evaluation horizon."""
    out = Path(outdir) / "figures"
    out.mkdir(parents=True, exist_ok=True)
    ts = [r[0] for r in rows]
    truth = [math.nan if r[1] is None else r[1] for r in rows]
    forecast = [r[2] for r in rows]

    fig, ax = plt.subplots(figsize=(10, 4))
    ax.plot(ts, truth, lw=1.0, color="tab:blue", label="truth")
    ax.plot(ts, forecast, lw=1.0, color="tab:red", label="forecast")
    known = [(t, v) for t, v in zip(ts, truth) if not math.isnan(v)]
    if known:
        ax.fill_between(
            [t for t, _ in known],
            [v - tolerance for _, v in known],
            [v + tolerance for _, v in known],
            alpha=0.15, color="tab:blue", label="tolerance band",
        )
    ax.set_xlabel("timestamp (s)")
    ax.set_ylabel("value")
    ax.legend(loc="best", fontsize=8)
    ax.set_title("Digital twin forecast vs actual readings")
    fig.tight_layout()
    path = out / "twin_eval.png"
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path
