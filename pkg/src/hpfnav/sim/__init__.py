"""Closed-loop simulation: single runs, compliance runs, two-agent runs."""

from .compliance import ComplianceResult, MatchError, matched_initial_state, polyline_distance, run_compliance
from .core import (
    FREEZE_LOCAL,
    FREEZE_REFERENCE,
    FULL,
    MODES,
    SLAVE_LOCAL,
    Capture,
    DivergenceError,
    JointState,
    NoiseSpec,
    Scenario,
    observe,
    run,
    settling_time,
    stable_substeps,
    step,
    summarize,
)
from .log import TrajectoryLog, column_names
from .multi import MultiResult, MultiScenario, ResolveError, run_multi, stamp_disc

__all__ = [
    "FREEZE_LOCAL", "FREEZE_REFERENCE", "FULL", "MODES", "SLAVE_LOCAL", "Capture", "ComplianceResult",
    "DivergenceError", "JointState", "MatchError", "MultiResult", "MultiScenario", "NoiseSpec",
    "ResolveError", "Scenario", "TrajectoryLog", "column_names", "matched_initial_state", "observe",
    "polyline_distance", "run", "run_compliance", "run_multi", "settling_time", "stable_substeps",
    "stamp_disc", "step", "summarize",
]
