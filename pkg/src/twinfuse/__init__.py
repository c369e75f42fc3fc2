"""Fault-tolerant triplicated IoT sensing: digital twins plus TMR data fusion.

The package simulates a triad of sensors measuring one parameter. Each
sensor is paired with a forecasting digital twin that substitutes for it on
anomaly; a centralized fusion block auto-corrects flagged readings against
the running composite estimate and averages the triad into a single trusted
output per cycle.
"""

__version__ = "0.1.0"

from .detector import AnomalyFlags, check, divergence_event
from .faults import FaultKind, FaultMask, FaultSpec, SoftMode, inject, repair_index
from .fusion import (
    FusionOutput,
    FusionState,
    UnfusableCycleError,
    auto_correct,
    fuse,
    fusion_cycle,
)
from .model import (
    AlignmentError,
    ConfigError,
    Reading,
    ScenarioConfig,
    SensorKind,
    Threshold,
    ThresholdMode,
    TriadWindow,
    TwinfuseError,
    TwinKind,
    UniformTrace,
    align_triads,
    validate_config,
)
from .orchestrator import (
    RowSource,
    ScenarioReport,
    SensorStatus,
    TotalFailureError,
    assemble_window,
    audit_state_machine,
    run_scenario,
)
from .twin import (
    Forecast,
    TemporalOrderError,
    TwinModel,
    TwinSettings,
    UnderdeterminedFitError,
    fit,
    predict,
    tracking_duration,
    update,
)

__all__ = [
    "AlignmentError",
    "AnomalyFlags",
    "ConfigError",
    "FaultKind",
    "FaultMask",
    "FaultSpec",
    "Forecast",
    "FusionOutput",
    "FusionState",
    "Reading",
    "RowSource",
    "ScenarioConfig",
    "ScenarioReport",
    "SensorKind",
    "SensorStatus",
    "SoftMode",
    "TemporalOrderError",
    "Threshold",
    "ThresholdMode",
    "TotalFailureError",
    "TriadWindow",
    "TwinKind",
    "TwinModel",
    "TwinSettings",
    "TwinfuseError",
    "UnderdeterminedFitError",
    "UnfusableCycleError",
    "UniformTrace",
    "align_triads",
    "assemble_window",
    "audit_state_machine",
    "auto_correct",
    "check",
    "divergence_event",
    "fit",
    "fuse",
    "fusion_cycle",
    "inject",
    "predict",
    "repair_index",
    "run_scenario",
    "tracking_duration",
    "update",
    "validate_config",
]
