"""Seeded synthetic trace generators.

Every generator is a special case of base + slope * t + amplitude *
sin(2 pi t / period + phase) plus optional Gaussian noise, so the full test
and acceptance suite can run without any external dataset. The noiseless
signal is returned alongside the noisy trace as ground truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ConfigError, Reading, SensorKind, UniformTrace

_KINDS = ("constant", "linear", "sinusoid", "line_sinusoid", "line_sinusoid_noise")


@dataclass(frozen=True)
class GeneratorSpec:
    """Parameters of one synthetic signal."""

    kind: str = "constant"
    base: float = 0.0
    slope_per_s: float = 0.0
    amplitude: float = 0.0
    period_s: int = 86400
    phase: float = 0.0
    noise_sigma: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ConfigError("generator.kind", f"unknown kind {self.kind!r}")
        if self.period_s <= 0:
            raise ConfigError("generator.period_s", "must be positive")
        if self.noise_sigma < 0:
            raise ConfigError("generator.noise_sigma", "must be >= 0")

    @classmethod
    def from_dict(cls, raw: dict) -> "GeneratorSpec":
        allowed = {
            "kind", "base", "slope_per_s", "amplitude", "period_s", "phase",
            "noise_sigma", "seed",
        }
        unknown = set(raw) - allowed
        if unknown:
            raise ConfigError("generator", f"unknown keys {sorted(unknown)}")
        return cls(**raw)

    def signal(self, t: np.ndarray) -> np.ndarray:
        out = self.base + self.slope_per_s * np.asarray(t, dtype=float)
        if self.amplitude:
            out = out + self.amplitude * np.sin(
                2.0 * math.pi * np.asarray(t, dtype=float) / self.period_s + self.phase
            )
        return out


def generate(
    spec: GeneratorSpec,
    sensor_id: str,
    start: int,
    interval_s: int,
    length: int,
    seed_base: int,
    stream: int,
) -> tuple[UniformTrace, UniformTrace]:
    """Produce (noisy trace, noiseless truth) for one sensor.

    The noise stream is derived from (spec.seed or seed_base, stream) so
    replicated generators still get independent noise per sensor.
    """
    t = np.arange(length, dtype=np.int64) * interval_s + start
    signal = spec.signal(t)
    values = signal
    if spec.noise_sigma > 0:
        entropy = spec.seed if spec.seed is not None else seed_base
        rng = np.random.default_rng(np.random.SeedSequence([entropy, stream]))
        values = signal + rng.normal(0.0, spec.noise_sigma, size=length)
    trace = UniformTrace(
        sensor_id,
        SensorKind.SYNTHETIC,
        start,
        interval_s,
        tuple(Reading.of(v) for v in values),
    )
    truth = UniformTrace(
        sensor_id + "-truth",
        SensorKind.SYNTHETIC,
        start,
        interval_s,
        tuple(Reading.of(v) for v in signal),
    )
    return trace, truth
