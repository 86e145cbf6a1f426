"""CSV ingestion into a SourceRegistry, plus the matching export.

Files are UTF-8, comma-delimited, RFC 4180 quoting, first row a header.
Malformed rows fail fast with their 1-based row number (header = row 1):
silently dropping rows would quietly change the base rates under audit.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data_model import DataSet, SourceRegistry, subgroup_ratio
from .errors import DomainError, ParseError, SchemaError


@dataclass(frozen=True)
class TableSchema:
    """Column names for features, label, subgroup and source."""

    feature_columns: tuple[str, ...]
    label_column: str
    subgroup_column: str
    source_column: str

    def __post_init__(self):
        object.__setattr__(self, "feature_columns", tuple(self.feature_columns))
        if not self.feature_columns:
            raise SchemaError("feature_columns must be non-empty")
        names = list(self.feature_columns) + [
            self.label_column, self.subgroup_column, self.source_column
        ]
        if len(set(names)) != len(names):
            raise SchemaError("schema column names must be unique")

    @property
    def all_columns(self) -> tuple[str, ...]:
        return self.feature_columns + (
            self.label_column, self.subgroup_column, self.source_column
        )


def load_csv(path: str | Path, schema: TableSchema) -> SourceRegistry:
    """Parse one CSV file into a registry with one DataSet per source token."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: file is empty")
        positions = {}
        for col in schema.all_columns:
            if col not in header:
                raise SchemaError(f"{path}: missing column {col!r}")
            positions[col] = header.index(col)

        feat_pos = [positions[c] for c in schema.feature_columns]
        label_pos = positions[schema.label_column]
        sub_pos = positions[schema.subgroup_column]
        src_pos = positions[schema.source_column]

        per_source: dict[str, dict[str, list]] = {}
        for row_no, row in enumerate(reader, start=2):
            if len(row) < len(header):
                raise ParseError(f"{path}: short row", row=row_no)
            raw_label = row[label_pos].strip()
            if raw_label not in ("0", "1"):
                raise ParseError(
                    f"{path}: label must be 0 or 1, got {raw_label!r}",
                    row=row_no, column=schema.label_column,
                )
            feats = []
            for col, pos in zip(schema.feature_columns, feat_pos):
                try:
                    value = float(row[pos])
                except ValueError:
                    raise ParseError(
                        f"{path}: non-numeric feature {row[pos]!r}",
                        row=row_no, column=col,
                    ) from None
                if not math.isfinite(value):
                    raise ParseError(
                        f"{path}: non-finite feature {row[pos]!r}",
                        row=row_no, column=col,
                    )
                feats.append(value)
            token = row[src_pos]
            bucket = per_source.setdefault(
                token, {"features": [], "labels": [], "subgroups": []}
            )
            bucket["features"].append(feats)
            bucket["labels"].append(int(raw_label))
            bucket["subgroups"].append(row[sub_pos])

    d = len(schema.feature_columns)
    sources = {}
    for token, cols in per_source.items():
        n = len(cols["labels"])
        sources[token] = DataSet(
            features=np.asarray(cols["features"], dtype=np.float64).reshape(n, d),
            labels=np.asarray(cols["labels"], dtype=np.int64),
            subgroups=np.asarray(cols["subgroups"], dtype=object),
            sources=np.asarray([token] * n, dtype=object),
        )
    return SourceRegistry(sources=sources, ordering=tuple(per_source))


def export_csv(registry: SourceRegistry, path: str | Path, schema: TableSchema) -> None:
    """Write a registry in the round-trip format load_csv reads back exactly.

    Floats are written with repr (shortest round-trip form), so re-ingesting
    yields an element-wise identical registry.
    """
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(schema.all_columns))
        for token in registry.ordering:
            ds = registry.get(token)
            for i in range(len(ds)):
                row = [repr(float(v)) for v in ds.features[i]]
                row.append(str(int(ds.labels[i])))
                row.append(str(ds.subgroups[i]))
                row.append(token)
                writer.writerow(row)


def merge_registries(parts: list[SourceRegistry]) -> SourceRegistry:
    """Combine independently parsed registries; duplicate tokens are rejected."""
    sources: dict[str, DataSet] = {}
    ordering: list[str] = []
    for reg in parts:
        for token in reg.ordering:
            if token in sources:
                raise DomainError(f"duplicate source token {token!r} in merge")
            sources[token] = reg.get(token)
            ordering.append(token)
    return SourceRegistry(sources=sources, ordering=tuple(ordering))


def registry_summary(registry: SourceRegistry) -> list[dict]:
    """Rows of (source, subgroup, count, ratio) plus a totals row per source."""
    rows: list[dict] = []
    for token in registry.ordering:
        ds = registry.get(token)
        for sub in ds.subgroup_tokens():
            count = int(np.count_nonzero(ds.subgroups == sub))
            rows.append({
                "source": token,
                "subgroup": sub,
                "count": count,
                "ratio": subgroup_ratio(ds, sub),
            })
        rows.append({
            "source": token, "subgroup": None, "count": len(ds), "ratio": 1.0,
        })
    return rows


def format_summary(rows: list[dict]) -> str:
    """Fixed-width rendering of registry_summary for terminal output."""
    lines = [f"{'source':<16} {'subgroup':<14} {'count':>8} {'ratio':>8}"]
    for row in rows:
        sub = row["subgroup"] if row["subgroup"] is not None else "(total)"
        lines.append(
            f"{row['source']:<16} {sub:<14} {row['count']:>8d} {row['ratio']:>8.4f}"
        )
    return "\n".join(lines)
