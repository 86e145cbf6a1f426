"""Distributional similarity scoring via a trained domain classifier.

A logistic membership model is fit on the concatenation of two datasets with
labels 1 (target distribution P) and 0 (candidate Q). Its inputs are the
feature vector with the outcome label appended as one extra column, so shifts
in the label distribution are visible to the score. The similarity score is
the mean membership probability on held-out P samples: 0.5 means the two
distributions are indistinguishable to the model, values near 1 mean P is
easily told apart from Q.

Half of P is held out for scoring (fitting and scoring on the same points
would bias the score upward); all of Q is used for fitting. Class imbalance
between |P| and |Q| is corrected with inverse-frequency sample weights so 0.5
stays the indistinguishability point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data_model import DataSet, concat, subgroup_subset
from .errors import DomainError
from .model import Hyper, LogisticModel, fit_logistic
from .seeding import derive_rng

# The membership fit favors a lighter penalty and a larger step than the
# outcome model: separable pairs should saturate toward probability 1.
DOMAIN_HYPER = Hyper(l2_lambda=1e-3, learning_rate=0.5, max_iters=3000, grad_tol=1e-7)


@dataclass(frozen=True, eq=False)
class DomainClassifier:
    model: LogisticModel
    p_source: DataSet
    q_source: DataSet
    p_holdout: DataSet

    def membership(self, d: DataSet) -> np.ndarray:
        """Membership probability for each (x, y) pair of ``d``."""
        inputs = np.column_stack([d.features, d.labels.astype(np.float64)])
        return self.model.score(inputs)


def _with_label_column(d: DataSet, membership_label: int) -> DataSet:
    """Re-encode (x, y) as features and the membership side as the label."""
    return DataSet(
        features=np.column_stack([d.features, d.labels.astype(np.float64)]),
        labels=np.full(len(d), membership_label, dtype=np.int64),
        subgroups=d.subgroups.copy(),
        sources=d.sources.copy(),
    )


def fit_domain_classifier(
    p: DataSet, q: DataSet, seed: int, hyper: Hyper | None = None
) -> DomainClassifier:
    """Fit the membership model for P (label 1) against Q (label 0)."""
    if len(p) == 0 or len(q) == 0:
        raise DomainError("both datasets must be non-empty")
    rng = derive_rng(seed, "similarity_split")
    perm = rng.permutation(len(p))
    n_fit = len(p) // 2
    if n_fit == 0:
        raise DomainError("P must have at least 2 samples to split for scoring")
    p_fit = p.take(np.sort(perm[:n_fit]))
    p_holdout = p.take(np.sort(perm[n_fit:]))

    train = concat([_with_label_column(p_fit, 1), _with_label_column(q, 0)])
    weights = np.concatenate([
        np.full(len(p_fit), 1.0 / len(p_fit)),
        np.full(len(q), 1.0 / len(q)),
    ])
    model = fit_logistic(train, hyper or DOMAIN_HYPER, seed=seed, sample_weight=weights)
    return DomainClassifier(model=model, p_source=p, q_source=q, p_holdout=p_holdout)


def score_xy(s: DomainClassifier, p: DataSet) -> float:
    """Mean membership probability over ``p`` (uniform empirical weights)."""
    if len(p) == 0:
        raise DomainError("cannot score an empty dataset")
    return float(s.membership(p).mean())


def subgroup_score_xy(s: DomainClassifier, p: DataSet, a: str) -> float:
    """score_xy restricted to the a-slice of ``p``."""
    part = subgroup_subset(p, a)
    if len(part) == 0:
        raise DomainError(f"no samples with subgroup {a!r} to score")
    return score_xy(s, part)


def holdout_membership_accuracy(s: DomainClassifier) -> float:
    """Fraction of held-out P samples classified as members (score >= 0.5)."""
    return float((s.membership(s.p_holdout) >= 0.5).mean())
