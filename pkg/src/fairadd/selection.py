"""Data-source selection strategies.

Each strategy maps a target (training set, test slice, subgroup) and a source
registry to one chosen source plus the full per-source criterion map. Ties
break by registry order, which keeps every outcome deterministic and
auditable. None of these heuristics is asserted to improve accuracy; the
audit protocols exist precisely to measure whether they do.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .data_model import (
    AdditionVector,
    DataSet,
    SourceRegistry,
    compose,
    subgroup_ratio,
    subgroup_subset,
)
from .errors import DomainError
from .metrics import mean_discrepancy
from .model import BinaryClassifier
from .seeding import subseed
from .similarity import fit_domain_classifier, subgroup_score_xy

Trainer = Callable[[DataSet], BinaryClassifier]

CRITERIA = ("max_ratio", "max_count", "max_similarity", "min_disc_delta", "greedy_accuracy")


@dataclass(frozen=True)
class SelectionOutcome:
    chosen: str
    scores: dict[str, float]
    criterion: str
    notes: tuple[str, ...] = field(default=())


def _argbest(
    registry: SourceRegistry,
    scores: dict[str, float],
    criterion: str,
    maximize: bool,
    notes: list[str],
) -> SelectionOutcome:
    """Pick the optimum with registry-order tie-breaking."""
    candidates = [t for t in registry.ordering if t in scores]
    if not candidates:
        raise DomainError("no scorable candidates")
    best = candidates[0]
    for token in candidates[1:]:
        better = scores[token] > scores[best] if maximize else scores[token] < scores[best]
        if better:
            best = token
    return SelectionOutcome(
        chosen=best, scores=scores, criterion=criterion, notes=tuple(notes)
    )


def select_max_ratio(registry: SourceRegistry, a: str) -> SelectionOutcome:
    """Source with the highest proportion of the target subgroup."""
    if len(registry) == 0:
        raise DomainError("empty registry")
    scores = {t: subgroup_ratio(registry.get(t), a) for t in registry.ordering}
    notes = []
    if all(v == 0.0 for v in scores.values()):
        notes.append(f"subgroup {a!r} absent from every source")
    return _argbest(registry, scores, "max_ratio", maximize=True, notes=notes)


def select_max_count(registry: SourceRegistry, a: str) -> SelectionOutcome:
    """Source with the greatest number of target-subgroup samples."""
    if len(registry) == 0:
        raise DomainError("empty registry")
    scores = {
        t: float(np.count_nonzero(registry.get(t).subgroups == a))
        for t in registry.ordering
    }
    notes = []
    if all(v == 0.0 for v in scores.values()):
        notes.append(f"subgroup {a!r} absent from every source")
    return _argbest(registry, scores, "max_count", maximize=True, notes=notes)


def select_most_similar(
    test_slice: DataSet, registry: SourceRegistry, a: str, seed: int
) -> SelectionOutcome:
    """Source whose distribution the target subgroup slice resembles most.

    The criterion value is |score - 0.5|: 0.5 is the indistinguishability
    point of the membership score, and finite-sample scores can land on
    either side of it.
    """
    p = subgroup_subset(test_slice, a)
    if len(p) == 0:
        raise DomainError(f"test slice has no {a!r} members")
    scores: dict[str, float] = {}
    notes: list[str] = []
    for token in registry.ordering:
        q = registry.get(token)
        try:
            dc = fit_domain_classifier(p, q, seed=subseed(seed, "similar", token))
            value = subgroup_score_xy(dc, dc.p_holdout, a)
        except DomainError as exc:
            notes.append(f"excluded {token!r}: {exc}")
            continue
        scores[token] = abs(value - 0.5)
    return _argbest(registry, scores, "max_similarity", maximize=False, notes=notes)


def _whole_source_candidate(
    train: DataSet, registry: SourceRegistry, token: str, cap: int | None, seed: int
) -> DataSet:
    include = tuple(1 if t == token else 0 for t in registry.ordering)
    z = AdditionVector(include=include, per_source_cap=cap)
    return compose(train, registry, z, seed)


def select_min_disc_delta(
    train: DataSet,
    registry: SourceRegistry,
    test_slice: DataSet,
    trainer: Trainer,
    cap: int | None = 1000,
    seed: int = 0,
    repeats: int = 1,
) -> SelectionOutcome:
    """Source whose addition moves mean discrepancy on the test slice least upward.

    Criterion per candidate: Disc(f_train+i, slice) - Disc(f_train, slice),
    averaged over ``repeats`` re-seeded candidate draws.
    """
    if len(train) == 0 or len(test_slice) == 0:
        raise DomainError("train and test slice must be non-empty")
    base_disc = mean_discrepancy(trainer(train), test_slice)
    scores: dict[str, float] = {}
    notes: list[str] = []
    for token in registry.ordering:
        deltas = []
        try:
            for rep in range(repeats):
                augmented = _whole_source_candidate(
                    train, registry, token, cap, subseed(seed, "mindisc", token, rep)
                )
                deltas.append(mean_discrepancy(trainer(augmented), test_slice) - base_disc)
        except DomainError as exc:
            notes.append(f"excluded {token!r}: {exc}")
            continue
        scores[token] = float(np.mean(deltas))
    return _argbest(registry, scores, "min_disc_delta", maximize=False, notes=notes)


def greedy_accuracy_step(
    train: DataSet,
    registry: SourceRegistry,
    test_slice: DataSet,
    trainer: Trainer,
    cap: int | None = 1000,
    seed: int = 0,
    repeats: int = 1,
) -> SelectionOutcome:
    """One greedy step: the source whose addition maximizes slice accuracy."""
    if len(train) == 0 or len(test_slice) == 0:
        raise DomainError("train and test slice must be non-empty")
    scores: dict[str, float] = {}
    notes: list[str] = []
    for token in registry.ordering:
        accs = []
        try:
            for rep in range(repeats):
                augmented = _whole_source_candidate(
                    train, registry, token, cap, subseed(seed, "greedy", token, rep)
                )
                model = trainer(augmented)
                preds = (model.score(test_slice.features) >= model.threshold).astype(int)
                accs.append(float(np.mean(preds == test_slice.labels)))
        except DomainError as exc:
            notes.append(f"excluded {token!r}: {exc}")
            continue
        scores[token] = float(np.mean(accs))
    return _argbest(registry, scores, "greedy_accuracy", maximize=True, notes=notes)
