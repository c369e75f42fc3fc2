"""Scenario lifecycle: run the triad cycle by cycle.

Per cycle the orchestrator assembles the look-back window from each sensor's
current source, runs one fusion cycle, and applies lifecycle transitions:

* an anomalous live sensor is disconnected and its twin substituted within
  the same cycle (the window is re-assembled before fusing),
* a twin flagged for ``patience`` consecutive cycles is dropped starting
  with the next cycle,
* a configured repair deadline restores the sensor to live at the next
  cycle boundary; its twin is then cold (rebuilt from scratch on fresh
  readings) and cannot substitute until warm, so anomalies on a cold sensor
  are left to the fusion block's composite auto-correction,
* with two participating rows and flags on both there is no attribution, so
  one row is selected uniformly at random (scenario seed) and used alone
  until a repair event; a later flag on a sole participant ends the run.

All transitions are recorded in an audit log whose edges are restricted to
the legal state graph; selection events are logged as self-loops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from . import detector, twin as twin_mod
from .detector import AnomalyFlags
from .faults import inject
from .fusion import FusionState, fusion_cycle
from .model import (
    Reading,
    ScenarioConfig,
    SensorKind,
    Threshold,
    TriadWindow,
    TwinfuseError,
    UniformTrace,
    validate_config,
)
from .twin import TwinModel, TwinSettings


class SensorStatus(str, Enum):
    LIVE = "Live"
    TWIN_SUBSTITUTED = "TwinSubstituted"
    DROPPED = "Dropped"
    UNDER_REPAIR = "UnderRepair"


class RowSource(str, Enum):
    PHYSICAL = "physical"
    TWIN = "twin"
    EXCLUDED = "excluded"


LEGAL_TRANSITIONS = frozenset(
    {
        (SensorStatus.LIVE, SensorStatus.TWIN_SUBSTITUTED),
        (SensorStatus.TWIN_SUBSTITUTED, SensorStatus.DROPPED),
        (SensorStatus.TWIN_SUBSTITUTED, SensorStatus.LIVE),
        (SensorStatus.DROPPED, SensorStatus.LIVE),
    }
    | {(s, s) for s in SensorStatus}
)


class ScenarioError(TwinfuseError):
    """A scenario precondition does not hold."""


class TotalFailureError(TwinfuseError):
    """No trustworthy sensor row remains; carries the partial report."""

    def __init__(self, cycle: int, report: "ScenarioReport"):
        super().__init__(f"total failure at cycle {cycle}: no trustworthy row remains")
        self.cycle = cycle
        self.report = report


@dataclass(frozen=True)
class Transition:
    cycle: int
    sensor: int
    from_status: SensorStatus
    to_status: SensorStatus
    reason: str


@dataclass(frozen=True)
class CycleRecord:
    """Everything observed in one fusion cycle, statuses as fused."""

    cycle_index: int
    timestamps: tuple[int, ...]
    statuses: tuple[SensorStatus, ...]
    sources: tuple[RowSource, ...]
    flags: AnomalyFlags
    elementwise: tuple[float, ...]
    composite: float
    participating: tuple[int, ...]


@dataclass(frozen=True)
class MetricRow:
    name: str
    sensor: int | None
    value: float


@dataclass(frozen=True)
class ScenarioReport:
    cycles: tuple[CycleRecord, ...]
    transitions: tuple[Transition, ...]
    metrics: tuple[MetricRow, ...]
    failed_at_cycle: int | None = None


def assemble_window(
    sources: Sequence[RowSource],
    physical: Sequence[UniformTrace],
    twins: Sequence[TwinModel | None],
    timestamps: Sequence[int],
) -> TriadWindow:
    """Build the fusion window from each row's current source.

    Physical rows copy the (possibly faulted) trace readings, twin rows copy
    the model forecast, and excluded rows carry absent placeholders with
    participation false.
    """
    ts = tuple(int(t) for t in timestamps)
    rows: list[tuple[Reading, ...]] = []
    participating: list[bool] = []
    for i, source in enumerate(sources):
        if source is RowSource.PHYSICAL:
            trace = physical[i]
            rows.append(tuple(trace.readings[trace.index_of(t)] for t in ts))
            participating.append(True)
        elif source is RowSource.TWIN:
            model = twins[i]
            if model is None:
                raise ScenarioError(f"sensor {i} has no twin model to substitute")
            forecast = model.predict(ts)
            rows.append(tuple(Reading.of(v) for v in forecast.values))
            participating.append(True)
        else:
            rows.append(tuple(Reading.absent() for _ in ts))
            participating.append(False)
    return TriadWindow(ts, tuple(rows), tuple(participating))


def audit_state_machine(report: ScenarioReport) -> None:
    """Replay the transition log and confirm it is sound and consistent.

    Raises ScenarioError on an illegal edge or a status sequence that the
    log cannot reproduce. Substitution, repair and selection events act on
    the cycle they are logged; divergence drops act from the next cycle.
    """
    for t in report.transitions:
        if (t.from_status, t.to_status) not in LEGAL_TRANSITIONS:
            raise ScenarioError(
                f"illegal transition {t.from_status.value} -> {t.to_status.value} "
                f"at cycle {t.cycle}"
            )
    statuses = [SensorStatus.LIVE] * 3
    by_cycle: dict[int, list[Transition]] = {}
    for t in report.transitions:
        by_cycle.setdefault(t.cycle, []).append(t)
    for record in report.cycles:
        pending = by_cycle.get(record.cycle_index, [])
        for t in pending:
            if t.reason != "divergence":
                if statuses[t.sensor] != t.from_status:
                    raise ScenarioError(
                        f"transition at cycle {t.cycle} expects sensor {t.sensor} "
                        f"in {t.from_status.value}, found {statuses[t.sensor].value}"
                    )
                statuses[t.sensor] = t.to_status
        if tuple(statuses) != record.statuses:
            raise ScenarioError(
                f"statuses at cycle {record.cycle_index} do not replay from the log"
            )
        for t in pending:
            if t.reason == "divergence":
                if statuses[t.sensor] != t.from_status:
                    raise ScenarioError(
                        f"transition at cycle {t.cycle} expects sensor {t.sensor} "
                        f"in {t.from_status.value}, found {statuses[t.sensor].value}"
                    )
                statuses[t.sensor] = t.to_status


def _check_traces(cfg: ScenarioConfig, traces: Sequence[UniformTrace]) -> None:
    if len(traces) != 3:
        raise ScenarioError(f"expected 3 traces, got {len(traces)}")
    a = traces[0]
    for t in traces[1:]:
        if (t.start, t.interval_s, len(t)) != (a.start, a.interval_s, len(a)):
            raise ScenarioError(f"trace {t.sensor_id!r} is not aligned with {a.sensor_id!r}")
    needed = cfg.twin_train_len + cfg.run_len
    if len(a) < needed:
        raise ScenarioError(
            f"traces must cover twin_train_len + run_len = {needed} points, got {len(a)}"
        )


@dataclass
class _SensorState:
    """Mutable per-sensor bookkeeping for one run."""

    status: SensorStatus = SensorStatus.LIVE
    twin: TwinModel | None = None
    cold: bool = False
    cold_buffer: list[tuple[int, float]] = field(default_factory=list)
    repair_due_idx: int | None = None
    # Per substituted span: (first_cycle, [(timestamp, forecast), ...])
    span_start_cycle: int | None = None
    span_points: list[tuple[int, float]] = field(default_factory=list)
    span_start_reference: float | None = None


class _MetricsBuilder:
    """Accumulates twin-substitution and fused-output error metrics."""

    def __init__(self, truth: Sequence[UniformTrace], threshold: Threshold):
        self.truth = truth
        self.threshold = threshold
        self.rows: list[MetricRow] = []
        self._fused_sq: list[float] = []

    def truth_value(self, sensor: int, timestamp: int) -> float | None:
        trace = self.truth[sensor]
        reading = trace.readings[trace.index_of(timestamp)]
        return reading.value if reading.present else None

    def add_fused(self, timestamps: Sequence[int], elementwise: Sequence[float]) -> None:
        for ts, fused in zip(timestamps, elementwise):
            values = [v for s in range(3) if (v := self.truth_value(s, ts)) is not None]
            if values:
                self._fused_sq.append((fused - sum(values) / len(values)) ** 2)

    def close_span(self, sensor: int, state: _SensorState, interval_s: int) -> None:
        points = state.span_points
        if not points:
            return
        errors = [
            abs(v - t)
            for ts, v in points
            if (t := self.truth_value(sensor, ts)) is not None
        ]
        if errors:
            mae = sum(errors) / len(errors)
            rmse = math.sqrt(sum(e * e for e in errors) / len(errors))
            self.rows.append(MetricRow("twin_mae", sensor, mae))
            self.rows.append(MetricRow("twin_rmse", sensor, rmse))
        # Tolerance for "tracks closely" is the detection threshold, resolved
        # against the composite that was current when the span began.
        ref = state.span_start_reference
        tol = self.threshold.limit(ref) if ref is not None else self.threshold.value
        if tol <= 0:
            tol = self.threshold.value
        prefix = 0
        for ts, v in points:
            t = self.truth_value(sensor, ts)
            if t is not None and abs(v - t) > tol:
                break
            prefix += 1
        self.rows.append(MetricRow("tracking_duration_s", sensor, prefix * interval_s))
        state.span_start_cycle = None
        state.span_points = []
        state.span_start_reference = None

    def finish(self) -> tuple[MetricRow, ...]:
        if self._fused_sq:
            rmse = math.sqrt(sum(self._fused_sq) / len(self._fused_sq))
            self.rows.append(MetricRow("fused_rmse", None, rmse))
        return tuple(self.rows)


def run_scenario(
    cfg: ScenarioConfig,
    clean_traces: Sequence[UniformTrace],
    truth_traces: Sequence[UniformTrace] | None = None,
) -> ScenarioReport:
    """Simulate one full scenario and return its report.

    ``clean_traces`` are the pre-injection sensor readings; faults from the
    config are injected into copies. ``truth_traces`` (defaulting to the
    clean traces) define the ground truth used for error metrics.

    Raises TotalFailureError, with the partial report attached, when no
    trustworthy row remains.
    """
    cfg = validate_config(cfg)
    _check_traces(cfg, clean_traces)
    truth = list(truth_traces) if truth_traces is not None else list(clean_traces)
    if truth_traces is not None:
        _check_traces(cfg, truth)

    interval = clean_traces[0].interval_s
    n = cfg.lookback_n
    num_cycles = cfg.run_len // n
    if num_cycles < 1:
        raise ScenarioError("run_len shorter than one look-back window")

    # One deterministic sub-seed per fault episode, plus one for selection.
    seed_states = np.random.SeedSequence(cfg.seed).generate_state(
        len(cfg.fault_specs) + 1, dtype=np.uint64
    )
    faulted = list(clean_traces)
    for k, (sensor_idx, spec) in enumerate(cfg.fault_specs):
        faulted[sensor_idx], _ = inject(faulted[sensor_idx], spec, int(seed_states[k]))
    selection_rng = np.random.default_rng(int(seed_states[-1]))

    settings = TwinSettings.from_config(cfg)
    sensors = [_SensorState() for _ in range(3)]
    for s in range(3):
        train = faulted[s].with_readings(faulted[s].readings[: cfg.twin_train_len])
        sensors[s].twin = twin_mod.fit(train, settings)

    state = FusionState()
    flags_history: list[AnomalyFlags] = []
    cycles: list[CycleRecord] = []
    transitions: list[Transition] = []
    metrics = _MetricsBuilder(truth, cfg.threshold)
    sole_survivor: int | None = None

    def fail(cycle: int) -> TotalFailureError:
        for s in range(3):
            metrics.close_span(s, sensors[s], interval)
        report = ScenarioReport(
            tuple(cycles), tuple(transitions), metrics.finish(), failed_at_cycle=cycle
        )
        return TotalFailureError(cycle, report)

    def schedule_repair(sensor: int, base_idx: int) -> None:
        if cfg.repair_after_s is not None:
            sensors[sensor].repair_due_idx = base_idx + -(-cfg.repair_after_s // interval)

    for cyc in range(num_cycles):
        base = cfg.twin_train_len + cyc * n
        timestamps = tuple(clean_traces[0].timestamp_at(base + j) for j in range(n))

        # Repair deadlines restore sensors at the cycle boundary.
        for s in range(3):
            sensor = sensors[s]
            if (
                sensor.repair_due_idx is not None
                and base >= sensor.repair_due_idx
                and sensor.status in (SensorStatus.TWIN_SUBSTITUTED, SensorStatus.DROPPED)
            ):
                transitions.append(
                    Transition(cyc, s, sensor.status, SensorStatus.LIVE, "repair")
                )
                metrics.close_span(s, sensor, interval)
                sensor.status = SensorStatus.LIVE
                sensor.repair_due_idx = None
                sensor.twin = None  # replaced device: model must be rebuilt
                sensor.cold = True
                sensor.cold_buffer = []
                sole_survivor = None

        sources = []
        for s in range(3):
            if sensors[s].status is SensorStatus.DROPPED:
                sources.append(RowSource.EXCLUDED)
            elif sensors[s].status is SensorStatus.TWIN_SUBSTITUTED:
                sources.append(RowSource.TWIN)
            else:
                sources.append(RowSource.PHYSICAL)
        if sole_survivor is not None:
            sources = [
                src if s == sole_survivor else RowSource.EXCLUDED
                for s, src in enumerate(sources)
            ]

        participating = [s for s in range(3) if sources[s] is not RowSource.EXCLUDED]
        if not participating:
            raise fail(cyc)

        window = assemble_window(
            sources, faulted, [sensors[s].twin for s in range(3)], timestamps
        )
        pre_flags = detector.check(window, state.last_composite, cfg.threshold)
        flagged = [s for s in participating if pre_flags.row_flagged(s)]

        if len(participating) == 1 and flagged:
            raise fail(cyc)

        reassemble = False
        if len(participating) >= 3 or len(flagged) <= 1:
            # Attribution holds: disconnect each anomalous live sensor whose
            # twin is warm and connect the twin in its place.
            for s in flagged:
                sensor = sensors[s]
                if sensor.status is SensorStatus.LIVE and sensor.twin is not None:
                    transitions.append(
                        Transition(
                            cyc, s, SensorStatus.LIVE, SensorStatus.TWIN_SUBSTITUTED,
                            "anomaly",
                        )
                    )
                    sensor.status = SensorStatus.TWIN_SUBSTITUTED
                    sensor.span_start_cycle = cyc
                    sensor.span_start_reference = state.last_composite
                    sources[s] = RowSource.TWIN
                    schedule_repair(s, base)
                    reassemble = True
        elif len(participating) == 2 and len(flagged) == 2:
            # No attribution between two rows: keep one at random.
            chosen = int(selection_rng.choice(np.array(flagged)))
            for s in flagged:
                reason = (
                    "random_selection_kept" if s == chosen else "random_selection_excluded"
                )
                transitions.append(
                    Transition(cyc, s, sensors[s].status, sensors[s].status, reason)
                )
                if s != chosen:
                    sources[s] = RowSource.EXCLUDED
            sole_survivor = chosen
            participating = [chosen]
            reassemble = True

        if reassemble:
            window = assemble_window(
                sources, faulted, [sensors[s].twin for s in range(3)], timestamps
            )

        output, state = fusion_cycle(window, state, cfg.threshold)
        flags_history.append(output.flags)

        statuses_at_fusion = tuple(sensors[s].status for s in range(3))
        cycles.append(
            CycleRecord(
                cycle_index=cyc,
                timestamps=timestamps,
                statuses=statuses_at_fusion,
                sources=tuple(sources),
                flags=output.flags,
                elementwise=output.elementwise,
                composite=output.composite,
                participating=output.row_indices,
            )
        )
        metrics.add_fused(timestamps, output.elementwise)

        # Track twin forecasts per substituted span for the metrics.
        for s in range(3):
            if sources[s] is RowSource.TWIN:
                row = window.rows[s]
                sensors[s].span_points.extend(
                    (t, r.value) for t, r in zip(timestamps, row)
                )

        # A twin flagged for `patience` consecutive cycles is dropped from
        # the next cycle on.
        for s in range(3):
            sensor = sensors[s]
            if sensor.status is SensorStatus.TWIN_SUBSTITUTED and detector.divergence_event(
                flags_history, s, cfg.patience
            ):
                transitions.append(
                    Transition(
                        cyc, s, SensorStatus.TWIN_SUBSTITUTED, SensorStatus.DROPPED,
                        "divergence",
                    )
                )
                metrics.close_span(s, sensor, interval)
                sensor.status = SensorStatus.DROPPED

        # Healthy live sensors keep their twins up to date; a cold twin
        # accumulates fresh readings until a full training window exists.
        for s in range(3):
            sensor = sensors[s]
            if sources[s] is not RowSource.PHYSICAL:
                continue
            if sensor.status is not SensorStatus.LIVE or output.flags.row_flagged(s):
                continue
            readings = [
                (t, r.value)
                for t, r in zip(timestamps, window.rows[s])
                if r.present
            ]
            if sensor.cold:
                sensor.cold_buffer.extend(readings)
                if len(sensor.cold_buffer) >= cfg.twin_train_len:
                    sensor.twin = _fit_from_buffer(sensor.cold_buffer, settings, interval)
                    sensor.cold = False
                    sensor.cold_buffer = []
            elif sensor.twin is not None and readings:
                sensor.twin = twin_mod.extend(sensor.twin, readings)

    for s in range(3):
        metrics.close_span(s, sensors[s], interval)
    return ScenarioReport(tuple(cycles), tuple(transitions), metrics.finish())


def _fit_from_buffer(
    buffer: list[tuple[int, float]], settings: TwinSettings, interval_s: int
) -> TwinModel:
    """Fit a twin from accumulated (timestamp, value) pairs, gap-filling absences."""
    first, last = buffer[0][0], buffer[-1][0]
    by_ts = dict(buffer)
    readings = []
    for i in range((last - first) // interval_s + 1):
        t = first + i * interval_s
        readings.append(Reading.of(by_ts[t]) if t in by_ts else Reading.absent())
    trace = UniformTrace(
        "post-repair", SensorKind.SYNTHETIC, first, interval_s, tuple(readings)
    )
    return twin_mod.fit(trace, settings)
