"""Exception types shared across the package."""


class DomainError(ValueError):
    """An operation was called with inputs outside its contract."""


class SchemaError(DomainError):
    """A table or config does not match the declared schema."""


class ParseError(DomainError):
    """A cell failed to parse; carries the 1-based row number (header = row 1)."""

    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(message + suffix)
