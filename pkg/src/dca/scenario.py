"""Synthetic host-monitoring traces with an embedded port scan.

Seven attribute streams stand in for host measurements:

    pamp1   ICMP destination-unreachable errors / s
    pamp2   TCP resets received / s
    danger1 outbound packets / s
    danger2 TCP share of all packets
    safe1   rate of change of outbound packets
    safe2   mean TCP packet size
    inflammation  remote root login present

Values are emitted already on the normalised scale (signals in [0, 100],
inflammation in [0, 1]) so the accompanying mapping is the identity.
Outside the scan window safe signals dominate; inside it pamp and danger
spike and the scanner's process ID fires far more often.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import AntigenEvent, SignalSnapshot
from .errors import ConfigError
from .ingest import (
    Category,
    ColumnMapping,
    SignalMapping,
    fmt,
    write_antigen_stream,
    write_ground_truth,
    write_mapping,
    write_table,
)

SIGNAL_COLUMNS = ("pamp1", "pamp2", "danger1", "danger2", "safe1", "safe2", "inflammation")

SCENARIO_MAPPING = SignalMapping((
    ColumnMapping("pamp1", Category.PAMP, 100.0),
    ColumnMapping("pamp2", Category.PAMP, 100.0),
    ColumnMapping("danger1", Category.DANGER, 100.0),
    ColumnMapping("danger2", Category.DANGER, 100.0),
    ColumnMapping("safe1", Category.SAFE, 100.0),
    ColumnMapping("safe2", Category.SAFE, 100.0),
    ColumnMapping("inflammation", Category.INFLAMMATION, 1.0),
))

FILENAMES = {
    "signals": "signals.csv",
    "antigen": "antigen.csv",
    "truth": "truth.csv",
    "mapping": "mapping.csv",
}

# (mean, sd) per phase for the pamp, danger and safe pairs
BASELINE_PROFILE = {"danger": (10.0, 2.0), "safe": (60.0, 5.0)}
SCAN_PROFILE = {"pamp": (60.0, 5.0), "danger": (60.0, 5.0), "safe": (20.0, 5.0)}


@dataclass(frozen=True)
class ScenarioSpec:
    duration_steps: int = 1000
    normal_types: tuple[tuple[str, float], ...] = (
        ("pid-1001", 1.0), ("pid-1002", 1.0), ("pid-1003", 1.0))
    scan_type: str = "pid-6666"
    scan_rate: float = 3.0
    scan_baseline_rate: float = 0.02
    scan_window: tuple[int, int] | None = (400, 600)
    bystander: bool = False
    bystander_type: str | None = None
    noise_floor: float = 1.0
    root_login_during_scan: bool = False

    def validate(self) -> None:
        if self.duration_steps < 1:
            raise ConfigError(f"duration must be >= 1 step, got {self.duration_steps}")
        names = [n for n, _ in self.normal_types]
        if len(set(names)) != len(names) or self.scan_type in names:
            raise ConfigError("antigen type names must be distinct")
        if any(not n for n in names) or not self.scan_type:
            raise ConfigError("antigen type names must be non-empty")
        rates = [r for _, r in self.normal_types] + [self.scan_rate, self.scan_baseline_rate]
        if any(not r >= 0 for r in rates):
            raise ConfigError("event rates must be >= 0")
        if self.noise_floor < 0:
            raise ConfigError("noise floor must be >= 0")
        if self.scan_window is not None:
            start, end = self.scan_window
            if not 0 <= start <= end < self.duration_steps:
                raise ConfigError(
                    f"scan window [{start}, {end}] must lie within [0, {self.duration_steps})")
        if self.bystander:
            if not self.normal_types:
                raise ConfigError("bystander flag needs at least one normal type")
            if self.bystander_type is not None and self.bystander_type not in names:
                raise ConfigError(f"bystander type {self.bystander_type!r} is not a normal type")

    @property
    def resolved_bystander(self) -> str | None:
        if not self.bystander:
            return None
        return self.bystander_type or self.normal_types[0][0]

    def in_scan(self, step: int) -> bool:
        return self.scan_window is not None and self.scan_window[0] <= step <= self.scan_window[1]


@dataclass
class Scenario:
    spec: ScenarioSpec
    rows: list[tuple[float, ...]]
    events: list[AntigenEvent]
    truth: dict[str, str]
    mapping: SignalMapping = field(default=SCENARIO_MAPPING)

    @property
    def snapshots(self) -> list[SignalSnapshot]:
        return [SignalSnapshot(r[1:3], r[3:5], r[5:7], r[7], time=r[0]) for r in self.rows]

    def write(self, out_dir: str | os.PathLike) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {k: out / v for k, v in FILENAMES.items()}
        write_table(paths["signals"], ("time",) + SIGNAL_COLUMNS,
                    [[fmt(v) for v in r] for r in self.rows])
        write_antigen_stream(paths["antigen"], self.events)
        write_ground_truth(paths["truth"], self.truth)
        write_mapping(paths["mapping"], self.mapping)
        return paths


def _draw(rng: np.random.Generator, mean: float, sd: float, size: int) -> np.ndarray:
    return np.clip(rng.normal(mean, sd, size), 0.0, 100.0)


def generate_scenario(spec: ScenarioSpec | None = None, seed: int = 0) -> Scenario:
    spec = spec or ScenarioSpec()
    spec.validate()
    rng = np.random.default_rng(seed)
    n = spec.duration_steps
    scan = np.array([spec.in_scan(t) for t in range(n)])

    cols: dict[str, np.ndarray] = {}
    for i in (1, 2):
        floor = rng.uniform(0.0, spec.noise_floor, n) if spec.noise_floor > 0 else np.zeros(n)
        cols[f"pamp{i}"] = np.where(scan, _draw(rng, *SCAN_PROFILE["pamp"], n), floor)
        cols[f"danger{i}"] = np.where(scan, _draw(rng, *SCAN_PROFILE["danger"], n),
                                      _draw(rng, *BASELINE_PROFILE["danger"], n))
        cols[f"safe{i}"] = np.where(scan, _draw(rng, *SCAN_PROFILE["safe"], n),
                                    _draw(rng, *BASELINE_PROFILE["safe"], n))
    root = 1.0 if spec.root_login_during_scan else 0.0
    cols["inflammation"] = np.where(scan, root, 0.0)

    rows = [(float(t),) + tuple(float(cols[c][t]) for c in SIGNAL_COLUMNS) for t in range(n)]

    bystander = spec.resolved_bystander
    events: list[AntigenEvent] = []
    for t in range(n):
        step_events = []
        for name, rate in spec.normal_types:
            if name == bystander and scan[t]:
                rate = spec.scan_rate
            step_events += [(t + u, name) for u in rng.random(rng.poisson(rate))]
        rate = spec.scan_rate if scan[t] else spec.scan_baseline_rate
        step_events += [(t + u, spec.scan_type) for u in rng.random(rng.poisson(rate))]
        step_events.sort()
        events += [AntigenEvent(float(ts), name) for ts, name in step_events]

    truth = {name: "normal" for name, _ in spec.normal_types}
    truth[spec.scan_type] = "anomalous" if spec.scan_window is not None else "normal"
    return Scenario(spec, rows, events, truth)
