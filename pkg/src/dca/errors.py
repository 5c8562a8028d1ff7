"""Exception hierarchy shared across the engine."""


class DCAError(Exception):
    """Base class for all engine errors."""


class ConfigError(DCAError):
    """Invalid parameters, weights, thresholds or mappings."""


class IngestionError(DCAError):
    """A stream or mapping file could not be parsed."""

    def __init__(self, message: str, *, source: str | None = None,
                 row: int | None = None, column: str | None = None):
        self.source = source
        self.row = row
        self.column = column
        where = []
        if source is not None:
            where.append(str(source))
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
