"""Single-cell model of the Dendritic Cell Algorithm.

A cell samples antigen while it is immature, folds each signal snapshot into
three running outputs (costimulation, semi-mature, mature), and migrates once
its costimulation exceeds the cell's migration threshold. On migration the
collected antigen is presented with a binary context and the cell is reset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from .errors import ConfigError

DEFAULT_W1 = 2.0
DEFAULT_W2 = 2.0


class CellState(Enum):
    IMMATURE = "immature"
    SEMI_MATURE = "semi-mature"
    MATURE = "mature"


@dataclass(frozen=True)
class SignalSnapshot:
    """One time step of categorised, normalised input signals.

    ``time`` is optional bookkeeping used to align antigen events with the
    signal stream; it plays no part in signal processing.
    """

    pamp: tuple[float, ...] = ()
    danger: tuple[float, ...] = ()
    safe: tuple[float, ...] = ()
    inflammation: float = 0.0
    time: float | None = None

    def __post_init__(self):
        # accept any sequence, store tuples so snapshots stay hashable
        object.__setattr__(self, "pamp", tuple(float(v) for v in self.pamp))
        object.__setattr__(self, "danger", tuple(float(v) for v in self.danger))
        object.__setattr__(self, "safe", tuple(float(v) for v in self.safe))
        object.__setattr__(self, "inflammation", float(self.inflammation))

    def validate(self) -> None:
        for name in ("pamp", "danger", "safe"):
            for v in getattr(self, name):
                if not (v >= 0.0 and math.isfinite(v)):
                    raise ConfigError(f"{name} signal must be finite and >= 0, got {v}")
        if not (self.inflammation >= 0.0 and math.isfinite(self.inflammation)):
            raise ConfigError(f"inflammation must be finite and >= 0, got {self.inflammation}")


@dataclass(frozen=True)
class WeightMatrix:
    """Signal transformation weights built from the two PAMP weights.

    Rows are the outputs (csm, semi, mat), columns the input categories
    (PAMP, danger, safe). Only ``w1`` and ``w2`` are free; the remaining
    entries keep fixed ratios to them.
    """

    w1: float = DEFAULT_W1
    w2: float = DEFAULT_W2

    def __post_init__(self):
        for name in ("w1", "w2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be a positive finite number, got {v}")

    @property
    def csm(self) -> tuple[float, float, float]:
        return (self.w1, self.w1 / 2, self.w1 * 1.5)

    @property
    def semi(self) -> tuple[float, float, float]:
        return (0.0, 0.0, 1.0)

    @property
    def mat(self) -> tuple[float, float, float]:
        return (self.w2, self.w2 / 2, self.w2 * -1.5)

    @property
    def rows(self) -> tuple[tuple[float, float, float], ...]:
        return (self.csm, self.semi, self.mat)


@dataclass(frozen=True)
class OutputTriple:
    csm: float = 0.0
    semi: float = 0.0
    mat: float = 0.0

    def __add__(self, other: OutputTriple) -> OutputTriple:
        if not isinstance(other, OutputTriple):
            return NotImplemented
        return OutputTriple(self.csm + other.csm, self.semi + other.semi, self.mat + other.mat)

    def scaled(self, factor: float) -> OutputTriple:
        return OutputTriple(self.csm * factor, self.semi * factor, self.mat * factor)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.csm, self.semi, self.mat)


@dataclass
class DendriticCell:
    """One agent of the population.

    ``capacity`` optionally bounds the antigen store; when exceeded the oldest
    items are dropped and counted in ``dropped`` so that antigen accounting
    stays exact.
    """

    cell_id: int
    migration_threshold: float
    state: CellState = CellState.IMMATURE
    cumulative: OutputTriple = field(default_factory=OutputTriple)
    antigen_store: list[str] = field(default_factory=list)
    capacity: int | None = None
    dropped: int = 0
    iterations: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.migration_threshold) and self.migration_threshold > 0):
            raise ConfigError(
                f"cell {self.cell_id}: migration threshold must be positive, "
                f"got {self.migration_threshold}")
        if self.capacity is not None and self.capacity < 1:
            raise ConfigError(f"antigen capacity must be >= 1, got {self.capacity}")


@dataclass(frozen=True)
class AntigenEvent:
    """A timestamped occurrence of one antigen type (e.g. a process ID)."""

    timestamp: float
    antigen_type: str


@dataclass(frozen=True)
class Presentation:
    cell_id: int
    context: int
    antigen: tuple[str, ...]
    migration_time: int

    def __post_init__(self):
        if self.context not in (0, 1):
            raise ValueError(f"context must be 0 or 1, got {self.context}")


def _weighted(row: tuple[float, float, float], p: float, d: float, s: float) -> float:
    return math.fsum((row[0] * p, row[1] * d, row[2] * s))


def process_signals(snapshot: SignalSnapshot, weights: WeightMatrix) -> OutputTriple:
    """Interim outputs for one snapshot.

    Each output is the weighted sum of the per-category signal totals,
    multiplied by ``1 + inflammation`` as the very last operation.
    """
    p = math.fsum(snapshot.pamp)
    d = math.fsum(snapshot.danger)
    s = math.fsum(snapshot.safe)
    amp = 1.0 + snapshot.inflammation
    return OutputTriple(
        _weighted(weights.csm, p, d, s) * amp,
        _weighted(weights.semi, p, d, s) * amp,
        _weighted(weights.mat, p, d, s) * amp,
    )


def accumulate(cell: DendriticCell, interim: OutputTriple, antigen: Sequence[str] = ()) -> DendriticCell:
    """Add a precomputed interim triple and antigen to an immature cell."""
    assert cell.state is CellState.IMMATURE, f"cell {cell.cell_id} is {cell.state.value}"
    if antigen:
        cell.antigen_store.extend(antigen)
        if cell.capacity is not None and len(cell.antigen_store) > cell.capacity:
            excess = len(cell.antigen_store) - cell.capacity
            del cell.antigen_store[:excess]
            cell.dropped += excess
    cell.cumulative = cell.cumulative + interim
    cell.iterations += 1
    return cell


def update_cell(cell: DendriticCell, snapshot: SignalSnapshot, antigen: Sequence[str],
                weights: WeightMatrix) -> DendriticCell:
    """Sample antigen and fold one snapshot into the cell's cumulative outputs."""
    return accumulate(cell, process_signals(snapshot, weights), antigen)


def check_migration(cell: DendriticCell) -> bool:
    assert cell.state is CellState.IMMATURE, f"cell {cell.cell_id} is {cell.state.value}"
    return cell.cumulative.csm > cell.migration_threshold


def present(cell: DendriticCell, now: int) -> Presentation:
    """Move a migrating cell to its terminal state and emit its antigen.

    Context is mature (1) only when the cumulative mature output is strictly
    greater than the semi-mature output; ties go to semi-mature.
    """
    assert cell.state is CellState.IMMATURE, f"cell {cell.cell_id} already presented"
    mature = cell.cumulative.mat > cell.cumulative.semi
    cell.state = CellState.MATURE if mature else CellState.SEMI_MATURE
    return Presentation(cell.cell_id, 1 if mature else 0, tuple(cell.antigen_store), now)


def reset_cell(cell: DendriticCell) -> DendriticCell:
    cell.cumulative = OutputTriple()
    cell.antigen_store = []
    cell.state = CellState.IMMATURE
    return cell
