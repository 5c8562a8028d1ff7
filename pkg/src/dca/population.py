"""Population orchestration: thresholds, antigen distribution and the step loop."""

from __future__ import annotations

import bisect
import logging
import statistics
import warnings
from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np

from .core import (
    AntigenEvent,
    DendriticCell,
    OutputTriple,
    Presentation,
    SignalSnapshot,
    WeightMatrix,
    accumulate,
    check_migration,
    present,
    process_signals,
    reset_cell,
)
from .errors import ConfigError, IngestionError
from .scoring import DEFAULT_MCAV_THRESHOLD, McavReport, compute_mcav, classify, segment_reports

logger = logging.getLogger(__name__)

MIN_RECOMMENDED_CELLS = 10


class ThresholdDistribution(Enum):
    UNIFORM = "uniform"
    GAUSSIAN = "gaussian"
    FIXED = "fixed"


class Mode(Enum):
    DETERMINISTIC = "deterministic"
    STOCHASTIC = "stochastic"


@dataclass
class PopulationConfig:
    """Population parameters.

    Threshold bounds left as ``None`` are derived from the calibration
    signals: uniform uses ``[0.5*M, 1.5*M]`` and gaussian uses mean ``M`` and
    standard deviation ``M/4``, where ``M`` is the median interim csm.
    """

    n_cells: int = 100
    threshold_distribution: ThresholdDistribution = ThresholdDistribution.UNIFORM
    threshold_low: float | None = None
    threshold_high: float | None = None
    threshold_mean: float | None = None
    threshold_std: float | None = None
    threshold_value: float | None = None
    mode: Mode = Mode.DETERMINISTIC
    rng_seed: int | None = None
    antigen_per_update: int = 1
    antigen_capacity: int | None = None
    calibration_steps: int | None = None

    def __post_init__(self):
        self.threshold_distribution = ThresholdDistribution(self.threshold_distribution)
        self.mode = Mode(self.mode)

    def validate(self) -> None:
        if self.n_cells < 1:
            raise ConfigError(f"n_cells must be >= 1, got {self.n_cells}")
        if self.antigen_per_update < 1:
            raise ConfigError(f"antigen_per_update must be >= 1, got {self.antigen_per_update}")
        if self.antigen_capacity is not None and self.antigen_capacity < 1:
            raise ConfigError(f"antigen_capacity must be >= 1, got {self.antigen_capacity}")
        if self.calibration_steps is not None and self.calibration_steps < 1:
            raise ConfigError(f"calibration_steps must be >= 1, got {self.calibration_steps}")
        dist = self.threshold_distribution
        if dist is ThresholdDistribution.UNIFORM:
            lo, hi = self.threshold_low, self.threshold_high
            if (lo is None) != (hi is None):
                raise ConfigError("uniform thresholds need both low and high, or neither")
            if lo is not None and not (0 <= lo <= hi and hi > 0):
                raise ConfigError(f"uniform thresholds need 0 <= low <= high, high > 0; got [{lo}, {hi}]")
        elif dist is ThresholdDistribution.GAUSSIAN:
            mu, sd = self.threshold_mean, self.threshold_std
            if (mu is None) != (sd is None):
                raise ConfigError("gaussian thresholds need both mean and std, or neither")
            if mu is not None and not (mu > 0 and sd >= 0):
                raise ConfigError(f"gaussian thresholds need mean > 0, std >= 0; got ({mu}, {sd})")
        elif dist is ThresholdDistribution.FIXED:
            if self.threshold_value is None or not self.threshold_value > 0:
                raise ConfigError("fixed thresholds need a positive threshold_value")
        if self.mode is Mode.STOCHASTIC and self.rng_seed is None:
            raise ConfigError("stochastic mode needs an rng_seed")

    def make_rng(self) -> np.random.Generator | None:
        if self.mode is Mode.DETERMINISTIC:
            return None
        return np.random.default_rng(self.rng_seed)


@dataclass
class SignalMatrix:
    current: SignalSnapshot = field(default_factory=SignalSnapshot)
    step: int = -1


@dataclass
class RunState:
    cells: list[DendriticCell]
    presentations: list[Presentation] = field(default_factory=list)
    matrix: SignalMatrix = field(default_factory=SignalMatrix)
    pool: deque[AntigenEvent] = field(default_factory=deque)
    step: int = 0
    rng: np.random.Generator | None = None
    rr_next: int = 0
    ingested: int = 0
    presented: int = 0

    @property
    def held(self) -> int:
        return sum(len(c.antigen_store) for c in self.cells)

    @property
    def queued(self) -> int:
        return len(self.pool)

    @property
    def dropped(self) -> int:
        return sum(c.dropped for c in self.cells)


@dataclass(frozen=True)
class Diagnostics:
    cells: int
    steps: int
    presentations: int
    empty_presentations: int
    antigen_ingested: int
    antigen_presented: int
    antigen_held: int
    antigen_queued: int
    antigen_dropped: int

    @property
    def unpresented(self) -> int:
        return self.antigen_held + self.antigen_queued


@dataclass
class RunResult:
    presentations: list[Presentation]
    reports: list[McavReport]
    diagnostics: Diagnostics
    thresholds: list[float]
    config: PopulationConfig
    segments: list[list[McavReport]] = field(default_factory=list)


def calibration_median(calibration: Sequence[SignalSnapshot], weights: WeightMatrix) -> float:
    if not calibration:
        raise ConfigError("threshold bounds not given and no calibration signals available")
    return statistics.median(process_signals(s, weights).csm for s in calibration)


def _evenly_spaced(low: float, high: float, n: int) -> list[float]:
    width = high - low
    return [low + (i + 0.5) * width / n for i in range(n)]


def resolve_bounds(config: PopulationConfig, calibration: Sequence[SignalSnapshot] = (),
                   weights: WeightMatrix | None = None) -> PopulationConfig:
    """Copy of ``config`` with missing threshold bounds filled from calibration.

    With ``M`` the median interim csm over ``calibration``, uniform bounds
    become ``[0.5*M, 1.5*M]`` and gaussian parameters ``(M, M/4)``.
    """
    config.validate()
    dist = config.threshold_distribution
    if dist is ThresholdDistribution.FIXED:
        return replace(config)
    if dist is ThresholdDistribution.UNIFORM and config.threshold_low is not None:
        return replace(config)
    if dist is ThresholdDistribution.GAUSSIAN and config.threshold_mean is not None:
        return replace(config)
    median = calibration_median(calibration, weights or WeightMatrix())
    if median <= 0:
        raise ConfigError("calibration median csm is 0; give explicit threshold bounds")
    if dist is ThresholdDistribution.UNIFORM:
        return replace(config, threshold_low=0.5 * median, threshold_high=1.5 * median)
    return replace(config, threshold_mean=median, threshold_std=median / 4)


def assign_thresholds(config: PopulationConfig, calibration: Sequence[SignalSnapshot] = (),
                      weights: WeightMatrix | None = None,
                      rng: np.random.Generator | None = None) -> list[float]:
    """Return ``config.n_cells`` migration thresholds.

    Deterministic mode never samples: uniform thresholds sit at the midpoints
    of ``n`` equal sub-intervals and gaussian ones at the matching normal
    quantiles. Stochastic mode draws from ``rng``.
    """
    config = resolve_bounds(config, calibration, weights)
    n = config.n_cells
    dist = config.threshold_distribution
    deterministic = config.mode is Mode.DETERMINISTIC
    if not deterministic and rng is None:
        rng = config.make_rng()

    if dist is ThresholdDistribution.FIXED:
        return [float(config.threshold_value)] * n
    if dist is ThresholdDistribution.UNIFORM:
        low, high = config.threshold_low, config.threshold_high
        if deterministic:
            out = _evenly_spaced(low, high, n)
        else:
            out = [float(v) for v in rng.uniform(low, high, n)]
    else:
        mean, std = config.threshold_mean, config.threshold_std
        if deterministic:
            nd = statistics.NormalDist(mean, std) if std > 0 else None
            out = [nd.inv_cdf((i + 0.5) / n) if nd else mean for i in range(n)]
        else:
            out = []
            # truncate at zero by redrawing
            while len(out) < n:
                v = float(rng.normal(mean, std))
                if v > 0:
                    out.append(v)
    if any(not t > 0 for t in out):
        raise ConfigError("threshold distribution produced non-positive thresholds; narrow the range")
    return out


def create_population(config: PopulationConfig, thresholds: Sequence[float],
                      rng: np.random.Generator | None = None) -> RunState:
    config.validate()
    if len(thresholds) != config.n_cells:
        raise ConfigError(f"expected {config.n_cells} thresholds, got {len(thresholds)}")
    if config.n_cells < MIN_RECOMMENDED_CELLS:
        warnings.warn(
            f"population of {config.n_cells} cells is below the minimum of "
            f"{MIN_RECOMMENDED_CELLS} needed for reliable consensus",
            UserWarning, stacklevel=2)
    cells = [DendriticCell(i, float(t), capacity=config.antigen_capacity)
             for i, t in enumerate(thresholds)]
    if config.mode is Mode.STOCHASTIC and rng is None:
        rng = config.make_rng()
    return RunState(cells=cells, rng=rng if config.mode is Mode.STOCHASTIC else None)


def _distribute(state: RunState, config: PopulationConfig) -> list[list[str]]:
    n = len(state.cells)
    cap = config.antigen_per_update
    batches: list[list[str]] = [[] for _ in range(n)]
    take = min(len(state.pool), n * cap)
    if take == 0:
        return batches
    if config.mode is Mode.DETERMINISTIC:
        start = state.rr_next
        for j in range(take):
            batches[(start + j) % n].append(state.pool.popleft().antigen_type)
        state.rr_next = (start + take) % n
    else:
        rng = state.rng
        open_cells = list(range(n))
        for _ in range(take):
            k = int(rng.integers(len(open_cells)))
            idx = open_cells[k]
            batches[idx].append(state.pool.popleft().antigen_type)
            if len(batches[idx]) == cap:
                open_cells[k] = open_cells[-1]
                open_cells.pop()
    return batches


def step_population(state: RunState, snapshot: SignalSnapshot, events: Sequence[AntigenEvent],
                    weights: WeightMatrix, config: PopulationConfig,
                    cell_order: Sequence[int] | None = None) -> RunState:
    """Advance the population by one time step.

    New events join the back of the antigen pool, then up to
    ``antigen_per_update`` events per cell are handed out. Every immature cell
    folds in the shared snapshot, and cells whose costimulation exceeds their
    threshold present and reset before the step ends. ``cell_order`` only
    changes the order of per-cell work; the log is sorted by cell id per step.
    """
    state.matrix = SignalMatrix(snapshot, state.step)
    state.pool.extend(events)
    state.ingested += len(events)
    batches = _distribute(state, config)

    # all cells share one snapshot, so the interim outputs are computed once
    interim: OutputTriple = process_signals(snapshot, weights)
    order = range(len(state.cells)) if cell_order is None else cell_order
    migrated: list[Presentation] = []
    for idx in order:
        cell = state.cells[idx]
        accumulate(cell, interim, batches[idx])
        if check_migration(cell):
            migrated.append(present(cell, state.step))
            reset_cell(cell)
    migrated.sort(key=lambda p: p.cell_id)
    state.presentations.extend(migrated)
    state.presented += sum(len(p.antigen) for p in migrated)
    state.step += 1
    return state


def align_events(snapshots: Sequence[SignalSnapshot],
                 events: Sequence[AntigenEvent]) -> list[list[AntigenEvent]]:
    """Bucket events onto signal steps.

    An event belongs to the latest snapshot at or before its timestamp; events
    earlier than the first snapshot go to step 0. Snapshots without a time use
    their index.
    """
    times = [float(i) if s.time is None else s.time for i, s in enumerate(snapshots)]
    for i in range(1, len(times)):
        if times[i] < times[i - 1]:
            raise IngestionError("signal timestamps decrease", row=i)
    for i in range(1, len(events)):
        if events[i].timestamp < events[i - 1].timestamp:
            raise IngestionError("antigen timestamps decrease", row=i)
    buckets: list[list[AntigenEvent]] = [[] for _ in snapshots]
    if not snapshots:
        return buckets
    for ev in events:
        step = max(bisect.bisect_right(times, ev.timestamp) - 1, 0)
        buckets[step].append(ev)
    return buckets


def run(signal_stream: Sequence[SignalSnapshot], antigen_stream: Sequence[AntigenEvent],
        weights: WeightMatrix | None = None, config: PopulationConfig | None = None, *,
        mcav_threshold: float = DEFAULT_MCAV_THRESHOLD, segment_size: int = 0) -> RunResult:
    """Run the whole pipeline over aligned streams and score the result.

    Cells that never migrate keep their antigen; it is reported in the
    diagnostics and excluded from scoring.
    """
    weights = weights or WeightMatrix()
    config = config or PopulationConfig()
    config.validate()
    if not 0.0 <= mcav_threshold <= 1.0:
        raise ConfigError(f"mcav threshold must lie in [0, 1], got {mcav_threshold}")
    if segment_size < 0:
        raise ConfigError(f"segment size must be >= 0, got {segment_size}")
    for snap in signal_stream:
        snap.validate()

    buckets = align_events(signal_stream, antigen_stream)
    rng = config.make_rng()
    calibration = signal_stream[:config.calibration_steps] if config.calibration_steps else signal_stream
    config = resolve_bounds(config, calibration, weights)
    thresholds = assign_thresholds(config, calibration, weights, rng)
    state = create_population(config, thresholds, rng)
    logger.debug("thresholds: min=%s max=%s", min(thresholds), max(thresholds))

    for snap, events in zip(signal_stream, buckets):
        step_population(state, snap, events, weights, config)

    diag = Diagnostics(
        cells=len(state.cells),
        steps=state.step,
        presentations=len(state.presentations),
        empty_presentations=sum(1 for p in state.presentations if not p.antigen),
        antigen_ingested=state.ingested,
        antigen_presented=state.presented,
        antigen_held=state.held,
        antigen_queued=state.queued,
        antigen_dropped=state.dropped,
    )
    if diag.antigen_ingested != diag.antigen_presented + diag.unpresented + diag.antigen_dropped:
        raise AssertionError(f"antigen accounting broken: {diag}")

    types = {ev.antigen_type for ev in antigen_stream}
    reports = classify(compute_mcav(state.presentations, types), mcav_threshold)
    segments = (segment_reports(state.presentations, segment_size, mcav_threshold)
                if segment_size else [])
    return RunResult(state.presentations, reports, diag, thresholds, config, segments)
