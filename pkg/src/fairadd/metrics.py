"""Subgroup and overall performance metrics.

Accuracy, pairwise AUC, and mean discrepancy (the absolute gap between a
model's mean hard prediction and the true label mean). Mean discrepancy
bounds accuracy from above via the triangle inequality: Disc <= 1 - Acc,
so a model with a large discrepancy on a slice has a low accuracy ceiling
there.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data_model import DataSet, subgroup_subset
from .errors import DomainError
from .model import BinaryClassifier
from .seeding import derive_rng


@dataclass(frozen=True)
class MetricEntry:
    accuracy: float
    auc: float | None
    mean_discrepancy: float
    n: int
    n_pos: int


@dataclass(frozen=True)
class MetricRecord:
    overall: MetricEntry
    subgroups: dict[str, MetricEntry]


def _hard_labels(f: BinaryClassifier, d: DataSet) -> np.ndarray:
    return (f.score(d.features) >= f.threshold).astype(np.int64)


def _accuracy(preds: np.ndarray, labels: np.ndarray) -> float:
    return float(np.mean(1 - np.abs(labels - preds)))


def subgroup_accuracy(f: BinaryClassifier, test: DataSet, a: str) -> float:
    """Mean over the a-slice of 1 - |y - 1[f(x) >= t]|."""
    part = subgroup_subset(test, a)
    if len(part) == 0:
        raise DomainError(f"no samples with subgroup {a!r}")
    return _accuracy(_hard_labels(f, part), part.labels)


def auc_from_scores(scores: np.ndarray, labels: np.ndarray) -> float | None:
    """Fraction of (negative, positive) pairs ranked strictly correctly.

    Ties count zero: the comparison is strict. Returns None when either class
    is absent, so degenerate slices surface as absent values rather than fake
    numbers.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    neg = np.sort(scores[labels == 0])
    pos = scores[labels == 1]
    if neg.size == 0 or pos.size == 0:
        return None
    # For each positive score, count negatives strictly below it.
    wins = np.searchsorted(neg, pos, side="left").sum()
    return float(wins) / (neg.size * pos.size)


def subgroup_auc(f: BinaryClassifier, test: DataSet, a: str) -> float | None:
    """Pairwise AUC over the a-slice; None when the slice is single-class."""
    part = subgroup_subset(test, a)
    if len(part) == 0:
        return None
    return auc_from_scores(f.score(part.features), part.labels)


def mean_discrepancy(f: BinaryClassifier, d: DataSet) -> float:
    """|sum(1[f(x) >= t] - y)| / |D|."""
    if len(d) == 0:
        raise DomainError("mean_discrepancy of an empty dataset is undefined")
    preds = _hard_labels(f, d)
    return float(abs(int(preds.sum()) - int(d.labels.sum()))) / len(d)


def _entry(f: BinaryClassifier, d: DataSet) -> MetricEntry:
    preds = _hard_labels(f, d)
    return MetricEntry(
        accuracy=_accuracy(preds, d.labels),
        auc=auc_from_scores(f.score(d.features), d.labels),
        mean_discrepancy=float(abs(int(preds.sum()) - int(d.labels.sum()))) / len(d),
        n=len(d),
        n_pos=int(d.labels.sum()),
    )


def evaluate(f: BinaryClassifier, test: DataSet) -> MetricRecord:
    """Overall entry plus one entry per subgroup present in the test set."""
    if len(test) == 0:
        raise DomainError("cannot evaluate on an empty test set")
    subs = {}
    for a in test.subgroup_tokens():
        subs[a] = _entry(f, subgroup_subset(test, a))
    return MetricRecord(overall=_entry(f, test), subgroups=subs)


def pearson_r(
    xs, ys, permutations: int = 10000, seed: int = 0
) -> tuple[float, float]:
    """Sample Pearson r with a two-sided permutation p-value.

    The p-value counts seeded permutations of ``ys`` whose |r| reaches the
    observed |r|, with the identity permutation included (so p >= 1/(m+1)).
    Permutation testing keeps the p-value assumption-free.
    """
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DomainError("inputs must be 1-D with equal length")
    if x.size < 3:
        raise DomainError("need at least 3 points")
    if np.ptp(x) == 0.0 or np.ptp(y) == 0.0:
        raise DomainError("correlation of a constant input is undefined")
    if permutations < 1:
        raise DomainError("permutations must be >= 1")

    xc = x - x.mean()
    yc = y - y.mean()
    denom = float(np.sqrt(np.dot(xc, xc)) * np.sqrt(np.dot(yc, yc)))

    r_obs = float(np.dot(xc, yc) / denom)
    rng = derive_rng(seed, "pearson_permutation")
    hits = 0
    observed = abs(r_obs) - 1e-12
    for _ in range(permutations):
        # Permuting y preserves both norms, so only the cross term changes.
        if abs(np.dot(xc, yc[rng.permutation(y.size)]) / denom) >= observed:
            hits += 1
    p = (1 + hits) / (permutations + 1)
    return r_obs, float(p)
