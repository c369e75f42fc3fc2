"""Forecasting digital twins.

A twin is fitted on a trailing window of good readings, predicts forward to
substitute for a faulted sensor, and is updated continuously while the sensor
stays healthy. Three model classes honor the same contract:

* additive_seasonal: least squares on an affine trend plus a Fourier
  expansion of K harmonics over a fixed seasonal period
* kalman: a local-level filter; forecasts are flat at the filtered level
* naive: repeats the per-phase mean profile of the training window

Absent readings never enter a fit; the Kalman filter treats missing grid
steps as predict-only.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .model import ScenarioConfig, TwinfuseError, TwinKind, UniformTrace


class UnderdeterminedFitError(TwinfuseError):
    """Too few present readings to identify the model."""


class TemporalOrderError(TwinfuseError):
    """A timestamp moves backwards relative to the model's fitted range."""


@dataclass(frozen=True)
class TwinSettings:
    """Subset of the scenario config a twin needs."""

    kind: TwinKind = TwinKind.ADDITIVE_SEASONAL
    train_len: int = 5760
    seasonal_period_s: int = 86400
    fourier_order_k: int = 3
    process_var: float | None = None
    obs_var: float | None = None

    @classmethod
    def from_config(cls, cfg: ScenarioConfig) -> "TwinSettings":
        return cls(
            kind=cfg.twin_kind,
            train_len=cfg.twin_train_len,
            seasonal_period_s=cfg.seasonal_period_s,
            fourier_order_k=cfg.fourier_order_k,
        )


@dataclass(frozen=True)
class Forecast:
    timestamps: tuple[int, ...]
    values: np.ndarray

    def __post_init__(self):
        if len(self.timestamps) != len(self.values):
            raise ValueError("timestamps and values must have equal length")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("forecast values must be finite")


# Window entries are (timestamp, value) pairs of present readings only.
Window = tuple[tuple[int, float], ...]


@dataclass(frozen=True)
class TwinModel:
    """Fitted forecaster state; subclasses hold the model-specific fields."""

    settings: TwinSettings
    interval_s: int
    fitted_through: int
    window: Window

    @property
    def kind(self) -> TwinKind:
        return self.settings.kind

    def predict(self, timestamps: tuple[int, ...] | list[int]) -> Forecast:
        ts = tuple(int(t) for t in timestamps)
        for t in ts:
            if t < self.fitted_through:
                raise TemporalOrderError(
                    f"forecast timestamp {t} precedes fitted_through {self.fitted_through}"
                )
        return Forecast(ts, self._evaluate(np.array(ts, dtype=float)))

    def update(self, timestamp: int, value: float) -> "TwinModel":
        raise NotImplementedError

    def _evaluate(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _appended_window(self, timestamp: int, value: float) -> Window:
        window = self.window + ((timestamp, float(value)),)
        if len(window) > self.settings.train_len:
            window = window[-self.settings.train_len :]
        return window


def _check_update_order(model: TwinModel, timestamp: int) -> None:
    if timestamp <= model.fitted_through:
        raise TemporalOrderError(
            f"update timestamp {timestamp} not after fitted_through {model.fitted_through}"
        )


@dataclass(frozen=True)
class AdditiveSeasonalTwin(TwinModel):
    """Trend plus Fourier seasonality, fitted by least squares.

    Internally time is scaled to units of the seasonal period, anchored at
    the first window timestamp, which keeps the design well conditioned and
    makes fits invariant under shifting the epoch.
    """

    intercept: float = 0.0
    slope: float = 0.0  # per scaled time unit; per-second slope is slope / period
    cos_coef: tuple[float, ...] = ()
    sin_coef: tuple[float, ...] = ()
    t_ref: int = 0
    sigma_hat: float = 0.0

    def _design(self, t_seconds: np.ndarray) -> np.ndarray:
        period = float(self.settings.seasonal_period_s)
        u = (t_seconds - self.t_ref) / period
        k = np.arange(1, self.settings.fourier_order_k + 1)
        angles = 2.0 * np.pi * np.outer(u, k)
        return np.column_stack([np.ones_like(u), u, np.cos(angles), np.sin(angles)])

    def _evaluate(self, t: np.ndarray) -> np.ndarray:
        coef = np.concatenate(
            [[self.intercept, self.slope], self.cos_coef, self.sin_coef]
        )
        return self._design(t) @ coef

    def update(self, timestamp: int, value: float) -> "AdditiveSeasonalTwin":
        _check_update_order(self, timestamp)
        return _fit_additive(
            self._appended_window(timestamp, value), self.settings, self.interval_s, timestamp
        )


@dataclass(frozen=True)
class KalmanTwin(TwinModel):
    """Local-level filter; the forecast is flat at the current level."""

    level: float = 0.0
    variance: float = 0.0
    process_var: float = 1e-9
    obs_var: float = 1e-9

    def _evaluate(self, t: np.ndarray) -> np.ndarray:
        return np.full(t.shape, self.level, dtype=float)

    def update(self, timestamp: int, value: float) -> "KalmanTwin":
        _check_update_order(self, timestamp)
        gap_steps = (timestamp - self.fitted_through) // self.interval_s
        # Missed grid points are predict-only; the last step observes value.
        variance = self.variance + gap_steps * self.process_var
        gain = variance / (variance + self.obs_var)
        level = self.level + gain * (value - self.level)
        variance = (1.0 - gain) * variance
        return replace(
            self,
            fitted_through=timestamp,
            window=self._appended_window(timestamp, value),
            level=level,
            variance=variance,
        )


@dataclass(frozen=True)
class NaiveTwin(TwinModel):
    """Seasonal-profile repeater: per-phase means, falling back to the last value."""

    last_value: float = 0.0
    profile: tuple[tuple[int, float], ...] = ()

    def _evaluate(self, t: np.ndarray) -> np.ndarray:
        period = self.settings.seasonal_period_s
        lookup = dict(self.profile)
        phases = np.mod(t.astype(np.int64), period)
        return np.array([lookup.get(int(p), self.last_value) for p in phases])

    def update(self, timestamp: int, value: float) -> "NaiveTwin":
        _check_update_order(self, timestamp)
        return _fit_naive(
            self._appended_window(timestamp, value), self.settings, self.interval_s, timestamp
        )


def _present_window(history: UniformTrace) -> Window:
    return tuple(
        (history.timestamp_at(i), r.value)
        for i, r in enumerate(history.readings)
        if r.present
    )


def _fit_additive(
    window: Window, settings: TwinSettings, interval_s: int, fitted_through: int
) -> AdditiveSeasonalTwin:
    k = settings.fourier_order_k
    if len(window) < 2 * k + 2:
        raise UnderdeterminedFitError(
            f"additive fit needs >= {2 * k + 2} present readings, got {len(window)}"
        )
    t = np.array([ts for ts, _ in window], dtype=float)
    y = np.array([v for _, v in window], dtype=float)
    t_ref = window[0][0]
    probe = AdditiveSeasonalTwin(
        settings=settings,
        interval_s=interval_s,
        fitted_through=fitted_through,
        window=window,
        t_ref=t_ref,
    )
    design = probe._design(t)
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    residuals = y - design @ coef
    sigma_hat = float(np.sqrt(np.mean(residuals**2)))
    return replace(
        probe,
        intercept=float(coef[0]),
        slope=float(coef[1]),
        cos_coef=tuple(float(c) for c in coef[2 : 2 + k]),
        sin_coef=tuple(float(c) for c in coef[2 + k :]),
        sigma_hat=sigma_hat,
    )


def _default_noise_vars(window: Window, settings: TwinSettings) -> tuple[float, float]:
    """(process_var, obs_var) defaults: r from first-difference variance, q = r/10."""
    if settings.obs_var is not None:
        r = settings.obs_var
    else:
        values = np.array([v for _, v in window], dtype=float)
        diffs = np.diff(values)
        r = float(np.var(diffs, ddof=1)) if len(diffs) >= 2 else 0.0
        if r <= 0.0:
            r = 1e-9
    q = settings.process_var if settings.process_var is not None else r / 10.0
    if q <= 0.0:
        q = 1e-10
    return q, r


def _fit_kalman(
    window: Window, settings: TwinSettings, interval_s: int, fitted_through: int
) -> KalmanTwin:
    if not window:
        raise UnderdeterminedFitError("kalman fit needs >= 1 present reading")
    q, r = _default_noise_vars(window, settings)
    level = window[0][1]
    variance = r
    prev_ts = window[0][0]
    for ts, value in window[1:]:
        steps = (ts - prev_ts) // interval_s
        variance += steps * q
        gain = variance / (variance + r)
        level += gain * (value - level)
        variance = (1.0 - gain) * variance
        prev_ts = ts
    # Trailing absent grid points are predict-only.
    variance += max(0, (fitted_through - prev_ts) // interval_s) * q
    return KalmanTwin(
        settings=settings,
        interval_s=interval_s,
        fitted_through=fitted_through,
        window=window,
        level=level,
        variance=variance,
        process_var=q,
        obs_var=r,
    )


def _fit_naive(
    window: Window, settings: TwinSettings, interval_s: int, fitted_through: int
) -> NaiveTwin:
    if not window:
        raise UnderdeterminedFitError("naive fit needs >= 1 present reading")
    period = settings.seasonal_period_s
    sums: dict[int, list[float]] = {}
    for ts, value in window:
        sums.setdefault(ts % period, []).append(value)
    profile = tuple(sorted((phase, sum(vs) / len(vs)) for phase, vs in sums.items()))
    return NaiveTwin(
        settings=settings,
        interval_s=interval_s,
        fitted_through=fitted_through,
        window=window,
        last_value=window[-1][1],
        profile=profile,
    )


def fit(history: UniformTrace, settings: TwinSettings) -> TwinModel:
    """Fit a twin on a trailing history trace.

    Only present readings enter the fit; the window retains at most
    ``settings.train_len`` of them.
    """
    window = _present_window(history)
    if len(window) > settings.train_len:
        window = window[-settings.train_len :]
    fitted_through = history.timestamp_at(len(history) - 1)
    if settings.kind is TwinKind.ADDITIVE_SEASONAL:
        return _fit_additive(window, settings, history.interval_s, fitted_through)
    if settings.kind is TwinKind.KALMAN:
        return _fit_kalman(window, settings, history.interval_s, fitted_through)
    return _fit_naive(window, settings, history.interval_s, fitted_through)


def predict(model: TwinModel, timestamps: tuple[int, ...] | list[int]) -> Forecast:
    return model.predict(timestamps)


def update(model: TwinModel, reading: tuple[int, float]) -> TwinModel:
    timestamp, value = reading
    return model.update(int(timestamp), float(value))


def extend(model: TwinModel, readings: Sequence[tuple[int, float]]) -> TwinModel:
    """Apply a batch of updates; equivalent to updating one reading at a time.

    Kalman models step through each reading; refitting models append the
    whole batch and refit once, which matches the sequential result.
    """
    if not readings:
        return model
    if isinstance(model, KalmanTwin):
        for ts, value in readings:
            model = model.update(int(ts), float(value))
        return model
    window = model.window
    last = model.fitted_through
    for ts, value in readings:
        ts = int(ts)
        if ts <= last:
            raise TemporalOrderError(f"update timestamp {ts} not after {last}")
        window = window + ((ts, float(value)),)
        last = ts
    if len(window) > model.settings.train_len:
        window = window[-model.settings.train_len :]
    if isinstance(model, AdditiveSeasonalTwin):
        return _fit_additive(window, model.settings, model.interval_s, last)
    return _fit_naive(window, model.settings, model.interval_s, last)


def tracking_duration(forecast: Forecast, truth: UniformTrace, tol: float) -> int:
    """Seconds over which the forecast stays within ``tol`` of the truth.

    Returns the length of the longest horizon prefix on which every present
    truth point satisfies |forecast - truth| <= tol.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    prefix = 0
    for ts, value in zip(forecast.timestamps, forecast.values):
        idx = truth.index_of(ts)
        reading = truth.readings[idx]
        if reading.present and abs(value - reading.value) > tol:
            break
        prefix += 1
    return prefix * truth.interval_s
