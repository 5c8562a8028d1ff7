"""Streaming anomaly detection with the Dendritic Cell Algorithm."""

from .core import (
    AntigenEvent,
    CellState,
    DendriticCell,
    OutputTriple,
    Presentation,
    SignalSnapshot,
    WeightMatrix,
    check_migration,
    present,
    process_signals,
    reset_cell,
    update_cell,
)
from .errors import ConfigError, DCAError, IngestionError
from .population import (
    Mode,
    PopulationConfig,
    RunResult,
    RunState,
    ThresholdDistribution,
    assign_thresholds,
    create_population,
    run,
    step_population,
)
from .scoring import Label, McavReport, classify, compute_mcav, segment_reports

__all__ = [
    "AntigenEvent", "CellState", "DendriticCell", "OutputTriple", "Presentation",
    "SignalSnapshot", "WeightMatrix", "check_migration", "present", "process_signals",
    "reset_cell", "update_cell", "ConfigError", "DCAError", "IngestionError", "Mode",
    "PopulationConfig", "RunResult", "RunState", "ThresholdDistribution",
    "assign_thresholds", "create_population", "run", "step_population", "Label",
    "McavReport", "classify", "compute_mcav", "segment_reports",
]
