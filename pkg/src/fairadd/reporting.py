"""Serialization of result grids into stable JSON and CSV artifacts.

JSON is the canonical form; CSV exports are flat projections for spreadsheet
use. Floats are serialized in Python's shortest round-trip representation
(at most 17 significant digits), so load(dump(x)) == x exactly. Absent slices
are encoded as null, never 0.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .errors import DomainError
from .metrics import pearson_r
from .protocols import (
    DeltaRecord,
    ExperimentConfig,
    FoldStat,
    SliceMetrics,
    bmw_table,
    bmw_table_averaged,
    pareto_frontier,
)

SCHEMA_PREFIX = "fairadd"
RESULTSET_SCHEMA = f"{SCHEMA_PREFIX}.resultset.v1"
HEATMAP_SCHEMA = f"{SCHEMA_PREFIX}.heatmap.v1"
SCATTER_SCHEMA = f"{SCHEMA_PREFIX}.scatter.v1"
BMW_SCHEMA = f"{SCHEMA_PREFIX}.bmw.v1"
PARETO_SCHEMA = f"{SCHEMA_PREFIX}.pareto.v1"

HEATMAP_METRICS = ("accuracy", "auc", "disc")
SCATTER_TAGS = ("delta_accuracy", "delta_auc", "delta_disc", "delta_ratio", "samples_added")


@dataclass(frozen=True)
class Provenance:
    seed: int
    version: str
    timestamp: str

    @classmethod
    def now(cls, seed: int) -> "Provenance":
        return cls(
            seed=seed,
            version=__version__,
            timestamp=datetime.now(timezone.utc).isoformat(),
        )


@dataclass(frozen=True)
class ResultSet:
    protocol: str
    config: dict
    records: tuple[DeltaRecord, ...]
    provenance: Provenance

    def __post_init__(self):
        keys = [r.key() for r in self.records]
        if len(set(keys)) != len(keys):
            raise DomainError("records must be uniquely keyed by "
                              "(target, added, mode, subgroup_filter)")


def make_resultset(
    protocol: str,
    cfg: ExperimentConfig,
    records: list[DeltaRecord],
    extra_config: dict | None = None,
    seed: int | None = None,
) -> ResultSet:
    config = cfg.to_dict()
    if extra_config:
        config.update(extra_config)
    return ResultSet(
        protocol=protocol,
        config=config,
        records=tuple(records),
        provenance=Provenance.now(seed if seed is not None else cfg.seed),
    )


# --- ResultSet <-> JSON -----------------------------------------------------

def _fold_stat_doc(stat: FoldStat | None):
    if stat is None:
        return None
    return {"mean": stat.mean, "std": stat.std, "n_folds": stat.n_folds}


def _fold_stat_load(doc) -> FoldStat | None:
    if doc is None:
        return None
    return FoldStat(mean=doc["mean"], std=doc["std"], n_folds=doc["n_folds"])


_SLICE_FIELDS = (
    "accuracy", "auc", "mean_discrepancy",
    "delta_accuracy", "delta_auc", "delta_disc",
    "delta_ratio", "samples_added", "delta_accuracy_cal",
)


def _slice_doc(sm: SliceMetrics) -> dict:
    return {name: _fold_stat_doc(getattr(sm, name)) for name in _SLICE_FIELDS}


def _slice_load(doc: dict) -> SliceMetrics:
    return SliceMetrics(**{name: _fold_stat_load(doc.get(name)) for name in _SLICE_FIELDS})


def _record_doc(rec: DeltaRecord) -> dict:
    return {
        "target": rec.target,
        "added": rec.added,
        "mode": rec.mode,
        "subgroup_filter": rec.subgroup_filter,
        "overall": _slice_doc(rec.overall),
        "subgroups": {a: _slice_doc(sm) for a, sm in rec.subgroups.items()},
    }


def _record_load(doc: dict) -> DeltaRecord:
    return DeltaRecord(
        target=doc["target"],
        added=doc["added"],
        mode=doc["mode"],
        subgroup_filter=doc["subgroup_filter"],
        overall=_slice_load(doc["overall"]),
        subgroups={a: _slice_load(d) for a, d in doc["subgroups"].items()},
    )


def resultset_to_doc(rs: ResultSet) -> dict:
    return {
        "schema_version": RESULTSET_SCHEMA,
        "kind": "resultset",
        "protocol": rs.protocol,
        "config": rs.config,
        "conventions": {
            "plus_minus": "fold standard deviation (ddof=1)",
            "absent_slices": "null, never zero",
            "floats": "shortest round-trip repr (<= 17 significant digits)",
        },
        "provenance": {
            "seed": rs.provenance.seed,
            "version": rs.provenance.version,
            "timestamp": rs.provenance.timestamp,
        },
        "records": [_record_doc(r) for r in rs.records],
    }


def resultset_from_doc(doc: dict) -> ResultSet:
    if doc.get("schema_version") != RESULTSET_SCHEMA:
        raise DomainError(
            f"schema_version mismatch: {doc.get('schema_version')!r} != {RESULTSET_SCHEMA!r}"
        )
    prov = doc["provenance"]
    return ResultSet(
        protocol=doc["protocol"],
        config=doc["config"],
        records=tuple(_record_load(d) for d in doc["records"]),
        provenance=Provenance(
            seed=prov["seed"], version=prov["version"], timestamp=prov["timestamp"]
        ),
    )


def save_resultset(rs: ResultSet, path: str | Path) -> None:
    Path(path).write_text(json.dumps(resultset_to_doc(rs), indent=2))


def load_resultset(path: str | Path) -> ResultSet:
    return resultset_from_doc(json.loads(Path(path).read_text()))


# --- documents --------------------------------------------------------------

def _metric_stat(sm: SliceMetrics, metric: str) -> FoldStat | None:
    field = {"accuracy": "delta_accuracy", "auc": "delta_auc", "disc": "delta_disc"}
    if metric not in field:
        raise DomainError(f"unknown heatmap metric {metric!r}; expected one of {HEATMAP_METRICS}")
    return getattr(sm, field[metric])


def emit_heatmap(rs: ResultSet, metric: str, subgroup: str = "overall") -> dict:
    """Matrix of fold-mean deltas: rows = targets, columns = added sources.

    The diagonal holds the control records (same-source scaling). Cells for
    absent slices are null.
    """
    records = [r for r in rs.records if r.mode in ("whole_source", "control")]
    if not records:
        raise DomainError("result set has no whole_source records")
    order = rs.config.get("source_order") or sorted(
        {r.target for r in records} | {r.added for r in records}
    )
    rows = [t for t in order if any(r.target == t for r in records)]
    cols = [t for t in order if any(r.added == t for r in records)]
    by_key = {(r.target, r.added): r for r in records}
    cells, labels = [], []
    for target in rows:
        row, lab = [], []
        for added in cols:
            rec = by_key.get((target, added))
            stat = None
            if rec is not None:
                sm = rec.overall if subgroup == "overall" else rec.subgroups.get(subgroup)
                if sm is not None:
                    stat = _metric_stat(sm, metric)
            row.append(None if stat is None else stat.mean)
            lab.append(None if stat is None else f"{stat.mean:+.3f}")
        cells.append(row)
        labels.append(lab)
    return {
        "schema_version": HEATMAP_SCHEMA,
        "kind": "heatmap",
        "metric": metric,
        "subgroup": subgroup,
        "targets": rows,
        "added": cols,
        "cells": cells,
        "cell_labels": labels,
        "diagonal": "control",
    }


def emit_scatter(
    rs: ResultSet,
    x: str,
    y: str,
    group_by: list[str] | None = None,
    permutations: int = 10000,
) -> dict:
    """Per-subgroup point lists of (x, y) tags with correlation annotations.

    Groups with fewer than 3 points are not reported. A group whose x or y
    column is constant keeps its points but gets a null correlation.
    """
    for tag in (x, y):
        if tag not in SCATTER_TAGS:
            raise DomainError(f"unknown scatter tag {tag!r}; expected one of {SCATTER_TAGS}")
    records = [r for r in rs.records if r.mode != "baseline"]
    if not records:
        raise DomainError("result set has no intervention records")
    tokens = group_by or sorted({a for r in records for a in r.subgroups})
    groups = []
    seed = int(rs.config.get("seed", 0))
    for token in tokens:
        points = []
        for rec in records:
            sm = rec.subgroups.get(token)
            if sm is None:
                continue
            xs_stat = getattr(sm, x)
            ys_stat = getattr(sm, y)
            if xs_stat is None or ys_stat is None:
                continue
            points.append({
                "target": rec.target,
                "added": rec.added,
                "x": xs_stat.mean,
                "y": ys_stat.mean,
            })
        if len(points) < 3:
            continue
        xs = [p["x"] for p in points]
        ys = [p["y"] for p in points]
        try:
            r_val, p_val = pearson_r(xs, ys, permutations=permutations, seed=seed)
            p_text = f"p={p_val:.2f}" if p_val >= 0.005 else "p<0.01"
            corr = {
                "r": r_val,
                "p": p_val,
                "label": f"r={r_val:.2f}, {p_text}",
            }
        except DomainError:
            corr = None
        groups.append({"subgroup": token, "points": points, "correlation": corr})
    return {
        "schema_version": SCATTER_SCHEMA,
        "kind": "scatter",
        "x": x,
        "y": y,
        "groups": groups,
    }


def summarize_bmw(rs: ResultSet, target: str | None = None) -> dict:
    """Best/median/worst table over calibration-comparison records.

    With several targets and no explicit choice, the per-target rank values
    are averaged across targets.
    """
    cal = [r for r in rs.records if r.mode == "calibration"]
    if not cal:
        raise DomainError("result set has no calibration records")
    targets = sorted({r.target for r in cal})
    if target is None and len(targets) == 1:
        target = targets[0]
    if target is None:
        table = bmw_table_averaged(list(cal))
    else:
        table = bmw_table(list(cal), target)
    table["schema_version"] = BMW_SCHEMA
    return table


def emit_pareto(rs: ResultSet, subgroup: str) -> dict:
    """Scatter of (overall, subgroup) accuracy deltas with the Pareto frontier.

    The frontier is precomputed here; renderers overlay it verbatim.
    """
    records = [r for r in rs.records if r.mode in ("whole_source", "control")]
    if not records:
        raise DomainError("result set has no whole_source records")
    points, meta = [], []
    for rec in records:
        sm = rec.subgroups.get(subgroup)
        if sm is None or sm.delta_accuracy is None or rec.overall.delta_accuracy is None:
            continue
        points.append((rec.overall.delta_accuracy.mean, sm.delta_accuracy.mean))
        meta.append({"target": rec.target, "added": rec.added})
    if not points:
        raise DomainError(f"no points for subgroup {subgroup!r}")
    frontier = pareto_frontier(points)
    return {
        "schema_version": PARETO_SCHEMA,
        "kind": "pareto",
        "subgroup": subgroup,
        "points": [
            {"x": x, "y": y, **m} for (x, y), m in zip(points, meta)
        ],
        "frontier": [{"x": x, "y": y} for x, y in frontier],
    }


# --- file output ------------------------------------------------------------

def save_document(doc: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(doc, indent=2))


def load_document(path: str | Path, expected_schema: str | None = None) -> dict:
    doc = json.loads(Path(path).read_text())
    if expected_schema is not None and doc.get("schema_version") != expected_schema:
        raise DomainError(
            f"schema_version mismatch: {doc.get('schema_version')!r} != {expected_schema!r}"
        )
    return doc


def heatmap_csv(doc: dict, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["target"] + list(doc["added"]))
        for target, row in zip(doc["targets"], doc["cells"]):
            writer.writerow([target] + ["" if v is None else repr(v) for v in row])


def scatter_csv(doc: dict, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["subgroup", "target", "added", doc["x"], doc["y"]])
        for group in doc["groups"]:
            for p in group["points"]:
                writer.writerow([
                    group["subgroup"], p["target"], p["added"],
                    repr(p["x"]), repr(p["y"]),
                ])


def bmw_csv(doc: dict, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["subgroup", "arm", "rank", "added", "mean", "std"])
        blocks = dict(doc["subgroups"])
        if doc.get("overall"):
            blocks["(overall)"] = doc["overall"]
        for token, block in blocks.items():
            for arm in ("without_calibration", "with_calibration"):
                for rank in ("best", "median", "worst"):
                    cell = block[arm][rank]
                    writer.writerow([
                        token, arm, rank, cell["added"],
                        repr(cell["mean"]), repr(cell["std"]),
                    ])


def pareto_csv(doc: dict, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["target", "added", "x", "y", "on_frontier"])
        frontier = {(p["x"], p["y"]) for p in doc["frontier"]}
        for p in doc["points"]:
            writer.writerow([
                p["target"], p["added"], repr(p["x"]), repr(p["y"]),
                int((p["x"], p["y"]) in frontier),
            ])
