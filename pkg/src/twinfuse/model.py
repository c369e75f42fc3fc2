"""Core domain types shared by every module, plus validation helpers.

All types here are immutable values. Timestamps are integer seconds since an
arbitrary epoch so grid arithmetic is exact; sensor units are carried as
metadata only and never converted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Iterator, Sequence

import numpy as np

if TYPE_CHECKING:
    from .faults import FaultSpec


class TwinfuseError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(TwinfuseError):
    """A scenario configuration violates an invariant.

    ``field`` names the offending configuration key.
    """

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class AlignmentError(TwinfuseError):
    """Two series that must share a grid do not."""


class SensorKind(str, Enum):
    TEMPERATURE = "temperature"
    HUMIDITY = "humidity"
    LIGHT = "light"
    VOLTAGE = "voltage"
    SYNTHETIC = "synthetic"


class TwinKind(str, Enum):
    ADDITIVE_SEASONAL = "additive_seasonal"
    KALMAN = "kalman"
    NAIVE = "naive"


class ThresholdMode(str, Enum):
    ABSOLUTE = "absolute"
    RELATIVE = "relative"


@dataclass(frozen=True)
class Threshold:
    """Deviation threshold, either in sensor units or relative to the reference."""

    value: float
    mode: ThresholdMode = ThresholdMode.ABSOLUTE

    def limit(self, reference: float) -> float:
        """Absolute deviation limit for a given reference value."""
        if self.mode is ThresholdMode.RELATIVE:
            return self.value * abs(reference)
        return self.value


@dataclass(frozen=True)
class Reading:
    """One grid-point sensor reading.

    When ``present`` is false the sensor gave no response; ``value`` is NaN
    and must not be used in arithmetic.
    """

    value: float
    present: bool = True

    @classmethod
    def of(cls, value: float) -> "Reading":
        return cls(float(value), True)

    @classmethod
    def absent(cls) -> "Reading":
        return cls(math.nan, False)


@dataclass(frozen=True)
class UniformTrace:
    """Per-sensor time series on a fixed-interval grid; values may be missing."""

    sensor_id: str
    kind: SensorKind
    start: int
    interval_s: int
    readings: tuple[Reading, ...]

    def __post_init__(self):
        if self.interval_s <= 0:
            raise ValueError(f"interval_s must be positive, got {self.interval_s}")
        if not self.readings:
            raise ValueError("readings must be non-empty")

    def __len__(self) -> int:
        return len(self.readings)

    def timestamp_at(self, idx: int) -> int:
        return self.start + idx * self.interval_s

    def timestamps(self) -> list[int]:
        return [self.start + i * self.interval_s for i in range(len(self.readings))]

    def index_of(self, timestamp: int) -> int:
        """Grid index of ``timestamp``; raises AlignmentError if off-grid."""
        offset = timestamp - self.start
        idx, rem = divmod(offset, self.interval_s)
        if rem != 0 or idx < 0 or idx >= len(self.readings):
            raise AlignmentError(
                f"timestamp {timestamp} not on grid of trace {self.sensor_id!r}"
            )
        return idx

    def values(self) -> np.ndarray:
        """Values as a float array with NaN at absent points."""
        return np.array(
            [r.value if r.present else math.nan for r in self.readings], dtype=float
        )

    def present_mask(self) -> np.ndarray:
        return np.array([r.present for r in self.readings], dtype=bool)

    def with_readings(self, readings: Sequence[Reading]) -> "UniformTrace":
        return UniformTrace(
            self.sensor_id, self.kind, self.start, self.interval_s, tuple(readings)
        )


@dataclass(frozen=True)
class TriadWindow:
    """One fusion cycle's look-back window: three sensor rows on shared timestamps.

    Rows with ``participating`` false are excluded from detection and fusion;
    their readings are placeholders.
    """

    timestamps: tuple[int, ...]
    rows: tuple[tuple[Reading, ...], ...]
    participating: tuple[bool, ...] = (True, True, True)

    def __post_init__(self):
        if len(self.rows) != len(self.participating):
            raise ValueError("participating must have one flag per row")
        n = len(self.timestamps)
        if n < 1:
            raise ValueError("window length must be >= 1")
        for row in self.rows:
            if len(row) != n:
                raise ValueError("all rows must match the timestamp grid length")

    @property
    def n(self) -> int:
        return len(self.timestamps)

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    def participating_indices(self) -> tuple[int, ...]:
        return tuple(i for i, p in enumerate(self.participating) if p)


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything that determines one simulated run, apart from the traces."""

    run_len: int
    lookback_n: int = 5
    threshold: Threshold = Threshold(3.0, ThresholdMode.ABSOLUTE)
    twin_kind: TwinKind = TwinKind.ADDITIVE_SEASONAL
    twin_train_len: int = 5760
    seasonal_period_s: int = 86400
    fourier_order_k: int = 3
    fault_specs: tuple[tuple[int, "FaultSpec"], ...] = ()
    repair_after_s: int | None = None
    patience: int = 2
    seed: int = 0


def validate_config(cfg: ScenarioConfig) -> ScenarioConfig:
    """Return ``cfg`` unchanged iff every invariant holds.

    Raises ConfigError naming the violated field otherwise. Idempotent.
    """
    if cfg.lookback_n < 1:
        raise ConfigError("lookback_n", "must be >= 1")
    if cfg.run_len < 1:
        raise ConfigError("run_len", "must be >= 1")
    if cfg.threshold.value <= 0 or not math.isfinite(cfg.threshold.value):
        raise ConfigError("threshold", "must be a positive finite real")
    if cfg.fourier_order_k < 1:
        raise ConfigError("fourier_order_k", "must be >= 1")
    if cfg.seasonal_period_s < 1:
        raise ConfigError("seasonal_period_s", "must be >= 1")
    # 2K + 2 regression columns; fewer rows leaves the design rank deficient.
    min_train = 2 * cfg.fourier_order_k + 2
    if cfg.twin_train_len < min_train:
        raise ConfigError(
            "twin_train_len",
            f"train length too short for K={cfg.fourier_order_k}; need >= {min_train}",
        )
    if cfg.repair_after_s is not None and cfg.repair_after_s < 0:
        raise ConfigError("repair_after_s", "must be >= 0 when given")
    if cfg.patience < 1:
        raise ConfigError("patience", "must be >= 1")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError("seed", "must fit in an unsigned 64-bit integer")
    for sensor_idx, _spec in cfg.fault_specs:
        if sensor_idx not in (0, 1, 2):
            raise ConfigError("fault_specs", f"sensor index {sensor_idx} not in 0..2")
    return cfg


def align_triads(
    a: UniformTrace, b: UniformTrace, c: UniformTrace, lookback_n: int
) -> Iterator[TriadWindow]:
    """Yield consecutive non-overlapping windows of length ``lookback_n``.

    The three traces must share start, interval and length; a final partial
    window is discarded.
    """
    if lookback_n < 1:
        raise ConfigError("lookback_n", "must be >= 1")
    traces = (a, b, c)
    for t in traces[1:]:
        if t.start != a.start:
            raise AlignmentError(f"trace {t.sensor_id!r} start differs from {a.sensor_id!r}")
        if t.interval_s != a.interval_s:
            raise AlignmentError(
                f"trace {t.sensor_id!r} interval differs from {a.sensor_id!r}"
            )
        if len(t) != len(a):
            raise AlignmentError(f"trace {t.sensor_id!r} length differs from {a.sensor_id!r}")
    for w0 in range(0, len(a) - lookback_n + 1, lookback_n):
        ts = tuple(a.timestamp_at(w0 + j) for j in range(lookback_n))
        rows = tuple(t.readings[w0 : w0 + lookback_n] for t in traces)
        yield TriadWindow(ts, rows)
