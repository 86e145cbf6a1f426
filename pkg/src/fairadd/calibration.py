"""Post-hoc isotonic calibration via pool-adjacent-violators.

The fitted map is a right-continuous step function over the unique training
scores: least-squares monotone projection of the labels ordered by score.
Samples with tied scores are pooled into one block before PAVA so the map is
a function of the score alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data_model import DataSet
from .errors import DomainError
from .model import BinaryClassifier


@dataclass(frozen=True, eq=False)
class CalibrationMap:
    """Increasing breakpoints with one fitted value per breakpoint."""

    breakpoints: np.ndarray
    fitted: np.ndarray

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=np.float64)
        fit = np.asarray(self.fitted, dtype=np.float64)
        if bp.shape != fit.shape or bp.ndim != 1 or bp.size == 0:
            raise DomainError("breakpoints and fitted must be equal-length 1-D arrays")
        if np.any(np.diff(bp) <= 0):
            raise DomainError("breakpoints must be strictly increasing")
        if np.any(np.diff(fit) < -1e-12):
            raise DomainError("fitted values must be non-decreasing")
        if fit.min() < -1e-9 or fit.max() > 1.0 + 1e-9:
            raise DomainError("fitted values must lie in [0, 1]")
        bp.setflags(write=False)
        fit.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "fitted", fit)


def pava(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Weighted monotone (non-decreasing) least-squares fit.

    Classic stack formulation: walk left to right, and whenever a new block
    undercuts the block before it, merge them into their weighted mean and
    keep merging backwards while violations remain.
    """
    means: list[float] = []
    wsums: list[float] = []
    counts: list[int] = []
    for v, w in zip(values, weights):
        means.append(float(v))
        wsums.append(float(w))
        counts.append(1)
        while len(means) > 1 and means[-2] > means[-1]:
            m2, w2, c2 = means.pop(), wsums.pop(), counts.pop()
            m1, w1, c1 = means.pop(), wsums.pop(), counts.pop()
            total = w1 + w2
            means.append((m1 * w1 + m2 * w2) / total)
            wsums.append(total)
            counts.append(c1 + c2)
    out = np.empty(len(values), dtype=np.float64)
    pos = 0
    for m, c in zip(means, counts):
        out[pos:pos + c] = m
        pos += c
    return out


def fit_isotonic(scores, labels) -> CalibrationMap:
    """Least-squares monotone fit of labels ordered by score."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if s.shape != y.shape or s.ndim != 1:
        raise DomainError("scores and labels must be 1-D with equal length")
    if s.size == 0:
        raise DomainError("cannot fit on zero samples")

    order = np.argsort(s, kind="stable")
    s_sorted = s[order]
    y_sorted = y[order]
    # Pool tied scores into single blocks: the map must be a function of the score.
    uniq, start = np.unique(s_sorted, return_index=True)
    block_weights = np.diff(np.append(start, s_sorted.size)).astype(np.float64)
    sums = np.add.reduceat(y_sorted, start)
    block_means = sums / block_weights
    fitted = pava(block_means, block_weights)
    return CalibrationMap(breakpoints=uniq, fitted=fitted)


def apply_map(m: CalibrationMap, score) -> np.ndarray | float:
    """Right-continuous step interpolation, clamped to the boundary blocks."""
    arr = np.asarray(score, dtype=np.float64)
    idx = np.searchsorted(m.breakpoints, arr, side="right") - 1
    idx = np.clip(idx, 0, m.breakpoints.size - 1)
    out = m.fitted[idx]
    return float(out) if np.isscalar(score) or arr.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class CalibratedClassifier:
    """Wraps a classifier with a fitted calibration map; threshold preserved."""

    base: BinaryClassifier
    map: CalibrationMap
    threshold: float

    def score(self, features: np.ndarray) -> np.ndarray:
        return np.asarray(apply_map(self.map, self.base.score(features)))


def calibrate_classifier(f: BinaryClassifier, validation: DataSet) -> CalibratedClassifier:
    """Fit an isotonic map on the validation set and wrap ``f`` with it."""
    if len(validation) < 2:
        raise DomainError("calibration needs at least 2 validation samples")
    scores = f.score(validation.features)
    cal_map = fit_isotonic(scores, validation.labels)
    return CalibratedClassifier(base=f, map=cal_map, threshold=f.threshold)


def map_to_json_dict(m: CalibrationMap) -> dict:
    return {
        "breakpoints": [float(v) for v in m.breakpoints],
        "fitted": [float(v) for v in m.fitted],
    }


def map_from_json_dict(doc: dict) -> CalibrationMap:
    return CalibrationMap(
        breakpoints=np.asarray(doc["breakpoints"], dtype=np.float64),
        fitted=np.asarray(doc["fitted"], dtype=np.float64),
    )


def classifier_to_json_dict(f: BinaryClassifier) -> dict:
    """Model document with the calibration map embedded when present."""
    from .model import LogisticModel, to_json_dict

    if isinstance(f, CalibratedClassifier):
        doc = classifier_to_json_dict(f.base)
        doc["calibration"] = map_to_json_dict(f.map)
        return doc
    if isinstance(f, LogisticModel):
        doc = to_json_dict(f)
        doc["calibration"] = None
        return doc
    raise DomainError(f"cannot serialize classifier of type {type(f).__name__}")


def classifier_from_json_dict(doc: dict) -> BinaryClassifier:
    from .model import from_json_dict

    base = from_json_dict({k: v for k, v in doc.items() if k != "calibration"})
    if doc.get("calibration"):
        cal_map = map_from_json_dict(doc["calibration"])
        return CalibratedClassifier(base=base, map=cal_map, threshold=base.threshold)
    return base
