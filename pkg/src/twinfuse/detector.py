"""Centralized anomaly detection against the running composite estimate.

A present reading is flagged when its deviation from the composite reference
strictly exceeds the threshold; absent readings are always flagged. Before a
first composite exists only absent readings can be flagged. Non-participating
window rows are skipped entirely.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .model import Threshold, TriadWindow


@dataclass(frozen=True)
class AnomalyFlags:
    """Per-row, per-position anomaly flags for one window."""

    flags: tuple[tuple[bool, ...], ...]

    @property
    def any_flagged(self) -> tuple[bool, ...]:
        return tuple(any(row) for row in self.flags)

    def row_flagged(self, sensor: int) -> bool:
        return any(self.flags[sensor])


def check(window: TriadWindow, reference: float | None, threshold: Threshold) -> AnomalyFlags:
    """Flag erroneous or missing readings in one window.

    Deviation uses strict inequality: a reading exactly at the threshold
    boundary is not flagged.
    """
    if threshold.value <= 0:
        raise ValueError("threshold must be positive")
    limit = threshold.limit(reference) if reference is not None else None
    rows = []
    for row, participating in zip(window.rows, window.participating):
        if not participating:
            rows.append(tuple(False for _ in row))
            continue
        row_flags = []
        for reading in row:
            if not reading.present:
                row_flags.append(True)
            elif limit is not None and abs(reading.value - reference) > limit:
                row_flags.append(True)
            else:
                row_flags.append(False)
        rows.append(tuple(row_flags))
    return AnomalyFlags(tuple(rows))


def divergence_event(
    flags_history: Sequence[AnomalyFlags], sensor: int, patience: int
) -> bool:
    """True iff ``sensor`` was flagged in each of the last ``patience`` cycles."""
    if patience < 1:
        raise ValueError("patience must be >= 1")
    if len(flags_history) < patience:
        return False
    return all(flags.row_flagged(sensor) for flags in flags_history[-patience:])
