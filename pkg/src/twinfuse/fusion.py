"""TMR data fusion: auto-correct flagged readings, average, produce the composite.

One fusion cycle takes the current look-back window and the last composite
estimate, replaces flagged or missing readings with that composite, averages
elementwise across the participating sensors, and averages those means into
the new composite. The arithmetic accepts any number of rows >= 1 so the
orchestrator can keep fusing after sensors drop out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import detector
from .detector import AnomalyFlags
from .model import Threshold, TriadWindow, TwinfuseError


class UnfusableCycleError(TwinfuseError):
    """Every reading is flagged and no prior composite exists to correct with."""


@dataclass(frozen=True)
class FusionState:
    """Carried across cycles: the last composite and the cycle counter."""

    last_composite: float | None = None
    cycle_index: int = 0


@dataclass(frozen=True)
class FusionOutput:
    """One cycle's result.

    ``corrected`` holds the values actually averaged, one row per
    participating sensor, in ``row_indices`` order.
    """

    elementwise: tuple[float, ...]
    composite: float
    corrected: tuple[tuple[float, ...], ...]
    row_indices: tuple[int, ...]
    flags: AnomalyFlags


def auto_correct(
    window: TriadWindow, flags: AnomalyFlags, state: FusionState
) -> tuple[tuple[float, ...], ...]:
    """Replace flagged or absent readings with the last composite.

    With no prior composite, a bootstrap composite (the grand mean of the
    unflagged present readings) is used as the replacement value instead.
    """
    rows = window.participating_indices()
    clean: list[float] = []
    for i in rows:
        for reading, flagged in zip(window.rows[i], flags.flags[i]):
            if reading.present and not flagged:
                clean.append(reading.value)

    if state.last_composite is not None:
        replacement = state.last_composite
    elif clean:
        replacement = math.fsum(clean) / len(clean)
    else:
        raise UnfusableCycleError(
            "every reading is flagged and no previous composite exists"
        )

    corrected = []
    for i in rows:
        corrected.append(
            tuple(
                reading.value if reading.present and not flagged else replacement
                for reading, flagged in zip(window.rows[i], flags.flags[i])
            )
        )
    return tuple(corrected)


def fuse(corrected: tuple[tuple[float, ...], ...]) -> tuple[tuple[float, ...], float]:
    """Elementwise cross-sensor means and their overall mean (the composite).

    Sums use math.fsum, whose correctly rounded result makes the output
    exactly invariant under row permutations.
    """
    m = len(corrected)
    if m < 1 or len(corrected[0]) < 1:
        raise ValueError("corrected must be an M x N matrix with M, N >= 1")
    n = len(corrected[0])
    if any(len(row) != n for row in corrected):
        raise ValueError("corrected rows must share one length")
    elementwise = tuple(
        math.fsum(row[j] for row in corrected) / m for j in range(n)
    )
    composite = math.fsum(elementwise) / n
    return elementwise, composite


def fusion_cycle(
    window: TriadWindow, state: FusionState, threshold: Threshold
) -> tuple[FusionOutput, FusionState]:
    """Run one full cycle: detect, auto-correct, fuse, advance the state."""
    flags = detector.check(window, state.last_composite, threshold)
    corrected = auto_correct(window, flags, state)
    elementwise, composite = fuse(corrected)
    output = FusionOutput(
        elementwise=elementwise,
        composite=composite,
        corrected=corrected,
        row_indices=window.participating_indices(),
        flags=flags,
    )
    return output, FusionState(last_composite=composite, cycle_index=state.cycle_index + 1)
