"""CSV stream ingestion and signal normalisation.

File formats (comma separated, header row first):

* signals:  ``time,<col>,...`` one row per time step
* antigen:  ``time,antigen_type``
* mapping:  ``column,category,max`` with category PAMP|DANGER|SAFE|INFLAMMATION
* truth:    ``antigen_type,label``
"""

from __future__ import annotations

import contextlib
import csv
import io
import math
import os
from dataclasses import dataclass
from enum import Enum
from typing import IO, Iterator, Sequence, Union

from .core import AntigenEvent, SignalSnapshot
from .errors import ConfigError, IngestionError

Source = Union[str, os.PathLike, IO[str]]

SIGNAL_SCALE = 100.0
INFLAMMATION_SCALE = 1.0


class Category(Enum):
    PAMP = "PAMP"
    DANGER = "DANGER"
    SAFE = "SAFE"
    INFLAMMATION = "INFLAMMATION"


@dataclass(frozen=True)
class ColumnMapping:
    name: str
    category: Category
    max_value: float

    def normalise(self, raw: float) -> float:
        """Clamp ``raw`` to ``[0, max]`` and rescale linearly.

        Signal columns land in ``[0, 100]``; inflammation lands in ``[0, 1]``.
        """
        top = INFLAMMATION_SCALE if self.category is Category.INFLAMMATION else SIGNAL_SCALE
        return min(raw, self.max_value) * (top / self.max_value)


@dataclass(frozen=True)
class SignalMapping:
    columns: tuple[ColumnMapping, ...]

    def __post_init__(self):
        names = [c.name for c in self.columns]
        dupes = {n for n in names if names.count(n) > 1}
        if dupes:
            raise ConfigError(f"columns mapped more than once: {sorted(dupes)}")
        if "time" in names:
            raise ConfigError("the time column cannot be mapped to a signal category")
        n_infl = sum(c.category is Category.INFLAMMATION for c in self.columns)
        if n_infl > 1:
            raise ConfigError("at most one INFLAMMATION column is allowed")
        for c in self.columns:
            if not (math.isfinite(c.max_value) and c.max_value > 0):
                raise ConfigError(f"column {c.name!r}: max must be positive, got {c.max_value}")

    def __getitem__(self, name: str) -> ColumnMapping:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]


@contextlib.contextmanager
def _reader(source: Source) -> Iterator[tuple[str, csv.reader]]:
    if hasattr(source, "read"):
        yield getattr(source, "name", "<stream>"), csv.reader(source)
        return
    try:
        fh = open(source, newline="", encoding="utf-8")
    except OSError as exc:
        raise IngestionError(f"cannot open file: {exc.strerror}", source=str(source)) from exc
    with fh:
        yield str(source), csv.reader(fh)


def _number(text: str, src: str, row: int, column: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise IngestionError(f"non-numeric value {text!r}", source=src, row=row, column=column) from None
    if not math.isfinite(value):
        raise IngestionError(f"non-finite value {text!r}", source=src, row=row, column=column)
    return value


def _header(reader, src: str, expected: Sequence[str] | None = None) -> list[str] | None:
    header = next(reader, None)
    if header is None:
        return None
    header = [h.strip() for h in header]
    if expected is not None and header != list(expected):
        raise IngestionError(f"expected header {','.join(expected)!r}, got {','.join(header)!r}",
                             source=src, row=1)
    return header


def parse_mapping(source: Source) -> SignalMapping:
    cols = []
    with _reader(source) as (src, reader):
        if _header(reader, src, ("column", "category", "max")) is None:
            raise IngestionError("mapping file is empty", source=src)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise IngestionError(f"expected 3 fields, got {len(row)}", source=src, row=lineno)
            name, cat, mx = (f.strip() for f in row)
            try:
                category = Category(cat.upper())
            except ValueError:
                raise ConfigError(f"{src}, row {lineno}: unknown category {cat!r}") from None
            cols.append(ColumnMapping(name, category, _number(mx, src, lineno, "max")))
    return SignalMapping(tuple(cols))


def parse_signal_stream(source: Source, mapping: SignalMapping) -> list[SignalSnapshot]:
    """Read a signal file into normalised snapshots, one per row.

    Category lists follow the column order of the file.
    """
    with _reader(source) as (src, reader):
        header = _header(reader, src)
        if header is None or not header or header[0] != "time":
            raise IngestionError("header must begin with 'time'", source=src, row=1)
        columns = header[1:]
        unknown = [c for c in columns if c not in mapping.names]
        if unknown:
            raise ConfigError(f"{src}: unknown signal columns {unknown} (not in mapping)")
        missing = [c for c in mapping.names if c not in columns]
        if missing:
            raise IngestionError(f"missing mapped column(s) {missing}", source=src, row=1,
                                 column=missing[0])
        routes = [mapping[c] for c in columns]

        snapshots = []
        last_time = -math.inf
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise IngestionError(f"expected {len(header)} fields, got {len(row)}",
                                     source=src, row=lineno)
            t = _number(row[0], src, lineno, "time")
            if t < last_time:
                raise IngestionError(f"time {t} is earlier than previous row ({last_time})",
                                     source=src, row=lineno, column="time")
            last_time = t
            pamp, danger, safe = [], [], []
            inflammation = 0.0
            for col, text in zip(routes, row[1:]):
                raw = _number(text, src, lineno, col.name)
                if raw < 0:
                    raise IngestionError(f"negative value {raw}", source=src, row=lineno, column=col.name)
                value = col.normalise(raw)
                if col.category is Category.PAMP:
                    pamp.append(value)
                elif col.category is Category.DANGER:
                    danger.append(value)
                elif col.category is Category.SAFE:
                    safe.append(value)
                else:
                    inflammation = value
            snapshots.append(SignalSnapshot(pamp, danger, safe, inflammation, time=t))
    return snapshots


def parse_antigen_stream(source: Source) -> list[AntigenEvent]:
    events = []
    with _reader(source) as (src, reader):
        if _header(reader, src, ("time", "antigen_type")) is None:
            return events
        last_time = -math.inf
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise IngestionError(f"expected 2 fields, got {len(row)}", source=src, row=lineno)
            t = _number(row[0], src, lineno, "time")
            if t < last_time:
                raise IngestionError(f"time {t} is earlier than previous row ({last_time})",
                                     source=src, row=lineno, column="time")
            last_time = t
            antigen_type = row[1].strip()
            if not antigen_type:
                raise IngestionError("empty antigen type", source=src, row=lineno, column="antigen_type")
            events.append(AntigenEvent(t, antigen_type))
    return events


def parse_ground_truth(source: Source) -> dict[str, str]:
    truth = {}
    with _reader(source) as (src, reader):
        if _header(reader, src, ("antigen_type", "label")) is None:
            return truth
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise IngestionError(f"expected 2 fields, got {len(row)}", source=src, row=lineno)
            truth[row[0].strip()] = row[1].strip()
    return truth


def fmt(value: float) -> str:
    """Shortest text that parses back to exactly ``value``."""
    if float(value).is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


def _writer(fh: IO[str]):
    return csv.writer(fh, lineterminator="\n")


def write_table(path: Source, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    if hasattr(path, "write"):
        w = _writer(path)
        w.writerow(header)
        w.writerows(rows)
        return
    buf = io.StringIO()
    write_table(buf, header, rows)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(buf.getvalue())


def write_mapping(path: Source, mapping: SignalMapping) -> None:
    write_table(path, ("column", "category", "max"),
                [(c.name, c.category.value, fmt(c.max_value)) for c in mapping.columns])


def write_antigen_stream(path: Source, events: Sequence[AntigenEvent]) -> None:
    write_table(path, ("time", "antigen_type"), [(fmt(e.timestamp), e.antigen_type) for e in events])


def write_ground_truth(path: Source, truth: dict[str, str]) -> None:
    write_table(path, ("antigen_type", "label"), sorted(truth.items()))


REPORT_HEADER = ("antigen_type", "mature_count", "semi_count", "total", "mcav", "label")
LOG_HEADER = ("migration_time", "cell_id", "context", "antigen")
ANTIGEN_SEPARATOR = ";"


def _report_row(r) -> list:
    mcav = "" if r.mcav is None else repr(r.mcav)
    return [r.antigen_type, r.mature_count, r.semi_count, r.total, mcav, r.label.value]


def write_report(path: Source, reports, segments=None) -> None:
    """Write MCAV reports; with ``segments`` a leading segment index column is added."""
    if segments:
        rows = [[i] + _report_row(r) for i, seg in enumerate(segments) for r in seg]
        write_table(path, ("segment",) + REPORT_HEADER, rows)
    else:
        write_table(path, REPORT_HEADER, [_report_row(r) for r in reports])


def write_presentation_log(path: Source, presentations) -> None:
    write_table(path, LOG_HEADER,
                [(p.migration_time, p.cell_id, p.context, ANTIGEN_SEPARATOR.join(p.antigen))
                 for p in presentations])
