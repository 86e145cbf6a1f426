"""Binary classifier contract and the reference logistic-regression trainer.

The trainer is deliberately plain: full-batch gradient descent from zero
initialization on z-scored features, minimizing mean log-loss plus an L2
penalty on the weights (the intercept is left unregularized so base-rate
fitting is never shrunk; base rates are the object of study downstream).
Everything is deterministic: identical inputs give bit-identical weights.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, runtime_checkable

import numpy as np
from scipy.special import expit

from .data_model import DataSet
from .errors import DomainError

_SCORE_EPS = 1e-15


@runtime_checkable
class BinaryClassifier(Protocol):
    """Scores feature rows with probabilities; labels via score >= threshold."""

    threshold: float

    def score(self, features: np.ndarray) -> np.ndarray:
        """Probability of label 1 for each row of ``features``."""
        ...


@dataclass(frozen=True)
class Hyper:
    l2_lambda: float = 1e-2
    learning_rate: float = 0.1
    max_iters: int = 5000
    grad_tol: float = 1e-7

    def __post_init__(self):
        if self.l2_lambda < 0:
            raise DomainError("l2_lambda must be >= 0")
        if self.learning_rate <= 0 or self.max_iters < 1 or self.grad_tol <= 0:
            raise DomainError("invalid optimizer hyperparameters")


@dataclass(frozen=True, eq=False)
class LogisticModel:
    weights: np.ndarray
    intercept: float
    feature_means: np.ndarray
    feature_stds: np.ndarray
    hyper: Hyper
    threshold: float = 0.5
    objective_trace: tuple[float, ...] | None = None

    def _standardize(self, features: np.ndarray) -> np.ndarray:
        x = np.asarray(features, dtype=np.float64)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.shape[1] != self.weights.shape[0]:
            raise DomainError(
                f"feature dimension {x.shape[1]} != model dimension {self.weights.shape[0]}"
            )
        if not np.isfinite(x).all():
            raise DomainError("features must be finite")
        z = (x - self.feature_means) / self.feature_stds
        return z[0] if single else z

    def score(self, features: np.ndarray) -> np.ndarray:
        z = self._standardize(features)
        raw = expit(z @ self.weights + self.intercept)
        return np.clip(raw, _SCORE_EPS, 1.0 - _SCORE_EPS)


def standardization_stats(features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Column means and stds; zero-variance columns get std 1 so the z-score
    is constant and the column's effect is absorbed by the intercept."""
    means = features.mean(axis=0)
    stds = features.std(axis=0)
    stds = np.where(stds > 0.0, stds, 1.0)
    return means, stds


def log_loss_value(
    z_features: np.ndarray,
    labels: np.ndarray,
    weights: np.ndarray,
    intercept: float,
    l2_lambda: float,
    sample_weight: np.ndarray | None = None,
) -> float:
    """Mean log-loss + (l2/2)·||w||² on already-standardized features."""
    margin = z_features @ weights + intercept
    losses = np.logaddexp(0.0, margin) - labels * margin
    if sample_weight is None:
        mean = losses.mean()
    else:
        mean = float(np.dot(sample_weight, losses) / sample_weight.sum())
    return float(mean + 0.5 * l2_lambda * np.dot(weights, weights))


def log_loss_gradient(
    z_features: np.ndarray,
    labels: np.ndarray,
    weights: np.ndarray,
    intercept: float,
    l2_lambda: float,
    sample_weight: np.ndarray | None = None,
) -> tuple[np.ndarray, float]:
    """Gradient of log_loss_value wrt (weights, intercept)."""
    resid = expit(z_features @ weights + intercept) - labels
    if sample_weight is None:
        grad_w = z_features.T @ resid / len(labels) + l2_lambda * weights
        grad_b = float(resid.mean())
    else:
        total = sample_weight.sum()
        weighted = resid * sample_weight
        grad_w = z_features.T @ weighted / total + l2_lambda * weights
        grad_b = float(weighted.sum() / total)
    return grad_w, grad_b


def fit_logistic(
    train: DataSet,
    hyper: Hyper | None = None,
    seed: int = 0,
    threshold: float = 0.5,
    sample_weight: np.ndarray | None = None,
    track_objective: bool = False,
) -> LogisticModel:
    """Train the reference logistic model.

    ``seed`` is accepted for trainer-interface uniformity; the optimizer is
    deterministic and does not consume randomness. Single-label training sets
    yield an intercept-only model (weights pinned at zero), since
    subgroup-filtered additions can be label-degenerate.
    """
    hyper = hyper or Hyper()
    if len(train) < 1:
        raise DomainError("cannot fit on an empty dataset")
    if not 0.0 < threshold < 1.0:
        raise DomainError("threshold must lie strictly inside (0, 1)")
    labels = train.labels.astype(np.float64)
    if sample_weight is not None:
        sample_weight = np.asarray(sample_weight, dtype=np.float64)
        if sample_weight.shape != labels.shape:
            raise DomainError("sample_weight length mismatch")
        if (sample_weight < 0).any() or sample_weight.sum() <= 0:
            raise DomainError("sample weights must be non-negative with positive sum")

    means, stds = standardization_stats(train.features)
    z = (train.features - means) / stds

    single_label = len(set(train.labels.tolist())) < 2
    w = np.zeros(train.feature_dim, dtype=np.float64)
    b = 0.0
    trace: list[float] | None = [] if track_objective else None
    for _ in range(hyper.max_iters):
        if trace is not None:
            trace.append(
                log_loss_value(z, labels, w, b, hyper.l2_lambda, sample_weight)
            )
        grad_w, grad_b = log_loss_gradient(
            z, labels, w, b, hyper.l2_lambda, sample_weight
        )
        if single_label:
            grad_w = np.zeros_like(grad_w)
        inf_norm = max(float(np.abs(grad_w).max(initial=0.0)), abs(grad_b))
        if inf_norm < hyper.grad_tol:
            break
        w = w - hyper.learning_rate * grad_w
        b = b - hyper.learning_rate * grad_b

    return LogisticModel(
        weights=w,
        intercept=float(b),
        feature_means=np.asarray(means, dtype=np.float64),
        feature_stds=np.asarray(stds, dtype=np.float64),
        hyper=hyper,
        threshold=threshold,
        objective_trace=tuple(trace) if trace is not None else None,
    )


def predict_proba(model: BinaryClassifier, x: np.ndarray) -> float:
    """Probability for a single feature vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DomainError("predict_proba expects a single feature vector")
    return float(model.score(x[None, :])[0])


def predict_label(model: BinaryClassifier, x: np.ndarray) -> int:
    """1 iff score >= threshold (boundary inclusive), else 0."""
    return int(predict_proba(model, x) >= model.threshold)


def predict_labels(model: BinaryClassifier, features: np.ndarray) -> np.ndarray:
    """Vectorized hard labels for a feature matrix."""
    return (model.score(features) >= model.threshold).astype(np.int64)


def to_json_dict(model: LogisticModel) -> dict:
    return {
        "kind": "logistic",
        "weights": [float(v) for v in model.weights],
        "intercept": model.intercept,
        "feature_means": [float(v) for v in model.feature_means],
        "feature_stds": [float(v) for v in model.feature_stds],
        "threshold": model.threshold,
        "hyper": {
            "l2_lambda": model.hyper.l2_lambda,
            "learning_rate": model.hyper.learning_rate,
            "max_iters": model.hyper.max_iters,
            "grad_tol": model.hyper.grad_tol,
        },
    }


def from_json_dict(doc: dict) -> LogisticModel:
    if doc.get("kind") != "logistic":
        raise DomainError(f"not a logistic model document: kind={doc.get('kind')!r}")
    return LogisticModel(
        weights=np.asarray(doc["weights"], dtype=np.float64),
        intercept=float(doc["intercept"]),
        feature_means=np.asarray(doc["feature_means"], dtype=np.float64),
        feature_stds=np.asarray(doc["feature_stds"], dtype=np.float64),
        hyper=Hyper(**doc["hyper"]),
        threshold=float(doc["threshold"]),
    )


def save_model(model: LogisticModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(to_json_dict(model), indent=2))


def load_model(path: str | Path) -> LogisticModel:
    return from_json_dict(json.loads(Path(path).read_text()))
