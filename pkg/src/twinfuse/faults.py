"""Fault injection: turn a clean trace into a faulted one plus a ground-truth mask.

Four injectable fault classes:

* hard: the sensor stops responding (readings become absent)
* soft: every reading in the window is corrupted (stuck / offset / scaled)
* intermittent: each window step is independently corrupted with probability p
* transient: mechanically a soft fault; semantically a brief episode

Intermittent masks are drawn from numpy's PCG64 generator seeded by the
caller, so the same (trace, spec, seed) always reproduces the same output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .model import Reading, TwinfuseError, UniformTrace


class FaultKind(str, Enum):
    HARD = "hard"
    SOFT = "soft"
    INTERMITTENT = "intermittent"
    TRANSIENT = "transient"


class SoftModeKind(str, Enum):
    STUCK = "stuck"
    OFFSET = "offset"
    SCALE = "scale"


class FaultWindowError(TwinfuseError):
    """A fault window does not fit inside the target trace."""


class FaultSpecError(TwinfuseError):
    """A fault spec is internally inconsistent."""


@dataclass(frozen=True)
class SoftMode:
    """Value corruption applied by soft, transient and intermittent faults."""

    kind: SoftModeKind
    param: float

    @classmethod
    def stuck(cls, value: float) -> "SoftMode":
        return cls(SoftModeKind.STUCK, float(value))

    @classmethod
    def offset(cls, delta: float) -> "SoftMode":
        return cls(SoftModeKind.OFFSET, float(delta))

    @classmethod
    def scale(cls, factor: float) -> "SoftMode":
        return cls(SoftModeKind.SCALE, float(factor))

    def apply(self, value: float) -> float:
        if self.kind is SoftModeKind.STUCK:
            return self.param
        if self.kind is SoftModeKind.OFFSET:
            return value + self.param
        return value * self.param


@dataclass(frozen=True)
class FaultSpec:
    """Declarative description of one fault episode.

    ``start_idx`` and ``duration`` are grid indices into the target trace.
    ``soft`` is required for every kind except hard; ``probability`` is the
    per-step fault probability of an intermittent episode.
    """

    kind: FaultKind
    start_idx: int
    duration: int
    soft: SoftMode | None = None
    probability: float | None = None

    def __post_init__(self):
        if self.start_idx < 0:
            raise FaultSpecError("start_idx must be >= 0")
        if self.duration < 1:
            raise FaultSpecError("duration must be >= 1")
        if self.kind is not FaultKind.HARD and self.soft is None:
            raise FaultSpecError(f"{self.kind.value} fault requires a soft mode")
        if self.kind is FaultKind.INTERMITTENT:
            if self.probability is None or not 0.0 < self.probability < 1.0:
                raise FaultSpecError("intermittent probability must lie in (0, 1)")
        if self.soft is not None and not math.isfinite(self.soft.param):
            raise FaultSpecError("soft mode parameter must be finite")


@dataclass(frozen=True)
class FaultMask:
    """Per-grid-point ground truth: true where the emitted reading differs
    from the clean trace in value or presence."""

    flags: tuple[bool, ...]

    def __len__(self) -> int:
        return len(self.flags)

    def any(self) -> bool:
        return any(self.flags)


def _differs(clean: Reading, emitted: Reading) -> bool:
    if clean.present != emitted.present:
        return True
    if not clean.present:
        return False
    return clean.value != emitted.value


def inject(trace: UniformTrace, spec: FaultSpec, seed: int) -> tuple[UniformTrace, FaultMask]:
    """Apply one fault episode to a copy of ``trace``.

    Outside [start_idx, start_idx + duration) the output is identical to the
    input. The mask marks exactly the points whose emitted reading differs
    from the clean one.
    """
    end = spec.start_idx + spec.duration
    if end > len(trace):
        raise FaultWindowError(
            f"fault window [{spec.start_idx}, {end}) exceeds trace length {len(trace)}"
        )

    readings = list(trace.readings)
    if spec.kind is FaultKind.HARD:
        for i in range(spec.start_idx, end):
            readings[i] = Reading.absent()
    elif spec.kind is FaultKind.INTERMITTENT:
        rng = np.random.default_rng(seed)
        hits = rng.random(spec.duration) < spec.probability
        for j, hit in enumerate(hits):
            i = spec.start_idx + j
            if hit and readings[i].present:
                readings[i] = Reading.of(spec.soft.apply(readings[i].value))
    else:  # soft and transient share mechanics
        for i in range(spec.start_idx, end):
            if readings[i].present:
                readings[i] = Reading.of(spec.soft.apply(readings[i].value))

    flags = tuple(_differs(c, e) for c, e in zip(trace.readings, readings))
    return trace.with_readings(readings), FaultMask(flags)


def repair_index(spec: FaultSpec, repair_after_s: int, interval_s: int) -> int:
    """Grid index at which the physical sensor is deemed restored."""
    if repair_after_s < 0:
        raise FaultSpecError("repair_after_s must be >= 0")
    return spec.start_idx + -(-repair_after_s // interval_s)
