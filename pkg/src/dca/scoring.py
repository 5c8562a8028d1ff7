"""Collation of presented antigen into per-type MCAV scores."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Sequence

from .core import Presentation
from .errors import ConfigError

DEFAULT_MCAV_THRESHOLD = 0.5


class Label(Enum):
    NORMAL = "normal"
    ANOMALOUS = "anomalous"
    NO_DATA = "nodata"


@dataclass(frozen=True)
class McavReport:
    antigen_type: str
    mature_count: int
    semi_count: int
    mcav: float | None
    label: Label

    @property
    def total(self) -> int:
        return self.mature_count + self.semi_count


def _tally(pairs: Iterable[tuple[str, int]], antigen_types: Iterable[str]) -> list[McavReport]:
    mature: Counter[str] = Counter()
    semi: Counter[str] = Counter()
    for antigen_type, context in pairs:
        (mature if context == 1 else semi)[antigen_type] += 1
    types = set(antigen_types) | set(mature) | set(semi)
    reports = []
    for t in sorted(types):
        m, s = mature[t], semi[t]
        if m + s == 0:
            reports.append(McavReport(t, 0, 0, None, Label.NO_DATA))
        else:
            reports.append(McavReport(t, m, s, m / (m + s), Label.NORMAL))
    return reports


def compute_mcav(log: Sequence[Presentation], antigen_types: Iterable[str] = ()) -> list[McavReport]:
    """Per-type fraction of antigen instances presented in the mature context.

    Every antigen item in a presentation counts once. Types listed in
    ``antigen_types`` that were never presented get a NoData row. Reports are
    sorted by type and labelled with the default threshold; use
    :func:`classify` to relabel.
    """
    pairs = ((a, p.context) for p in log for a in p.antigen)
    return classify(_tally(pairs, antigen_types), DEFAULT_MCAV_THRESHOLD)


def classify(reports: Sequence[McavReport], threshold: float) -> list[McavReport]:
    if not 0.0 <= threshold <= 1.0:
        raise ConfigError(f"mcav threshold must lie in [0, 1], got {threshold}")
    out = []
    for r in reports:
        if r.mcav is None:
            out.append(replace(r, label=Label.NO_DATA))
        else:
            out.append(replace(r, label=Label.ANOMALOUS if r.mcav > threshold else Label.NORMAL))
    return out


def segment_reports(log: Sequence[Presentation], segment_size: int,
                    threshold: float = DEFAULT_MCAV_THRESHOLD) -> list[list[McavReport]]:
    """Score consecutive fixed-size segments of the presented antigen stream.

    Antigen instances are taken in log order; the final segment may be short.
    """
    if segment_size < 1:
        raise ConfigError(f"segment size must be >= 1, got {segment_size}")
    flat = [(a, p.context) for p in log for a in p.antigen]
    return [classify(_tally(flat[i:i + segment_size], ()), threshold)
            for i in range(0, len(flat), segment_size)]
