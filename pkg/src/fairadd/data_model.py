"""Dataset representation, subgroup views, ratio arithmetic, splits, composition.

A DataSet is a column-oriented, immutable bundle of feature rows with a binary
label, a subgroup token and a source token per row. All downstream modules
(metrics, protocols, selection) operate on these views.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .seeding import derive_rng, subseed


@dataclass(frozen=True)
class LabeledSample:
    """One row: feature vector, binary label, subgroup token, source token."""

    features: tuple[float, ...]
    label: int
    subgroup: str
    source: str

    def __post_init__(self):
        if self.label not in (0, 1):
            raise DomainError(f"label must be 0 or 1, got {self.label!r}")
        if not all(np.isfinite(v) for v in self.features):
            raise DomainError("features must be finite")


@dataclass(frozen=True, eq=False)
class DataSet:
    """Ordered collection of labeled samples with a shared feature dimension."""

    features: np.ndarray  # (n, d) float64
    labels: np.ndarray    # (n,) int64, values in {0, 1}
    subgroups: np.ndarray  # (n,) str
    sources: np.ndarray    # (n,) str

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        if feats.ndim != 2:
            raise DomainError("features must be a 2-D array")
        labels = np.asarray(self.labels, dtype=np.int64)
        subgroups = np.asarray(self.subgroups, dtype=object)
        sources = np.asarray(self.sources, dtype=object)
        n = feats.shape[0]
        if not (labels.shape == subgroups.shape == sources.shape == (n,)):
            raise DomainError("column lengths disagree")
        if not np.isfinite(feats).all():
            raise DomainError("features must be finite")
        if labels.size and not np.isin(labels, (0, 1)).all():
            raise DomainError("labels must be in {0, 1}")
        for arr, name in ((feats, "features"), (labels, "labels"),
                          (subgroups, "subgroups"), (sources, "sources")):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_samples(cls, samples: list[LabeledSample]) -> "DataSet":
        if not samples:
            raise DomainError("cannot build a DataSet from zero samples")
        d = len(samples[0].features)
        if any(len(s.features) != d for s in samples):
            raise DomainError("samples disagree on feature dimension")
        return cls(
            features=np.array([s.features for s in samples], dtype=np.float64),
            labels=np.array([s.label for s in samples], dtype=np.int64),
            subgroups=np.array([s.subgroup for s in samples], dtype=object),
            sources=np.array([s.source for s in samples], dtype=object),
        )

    @classmethod
    def empty(cls, feature_dim: int) -> "DataSet":
        return cls(
            features=np.empty((0, feature_dim), dtype=np.float64),
            labels=np.empty((0,), dtype=np.int64),
            subgroups=np.empty((0,), dtype=object),
            sources=np.empty((0,), dtype=object),
        )

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    def sample(self, i: int) -> LabeledSample:
        return LabeledSample(
            features=tuple(self.features[i]),
            label=int(self.labels[i]),
            subgroup=str(self.subgroups[i]),
            source=str(self.sources[i]),
        )

    def take(self, indices) -> "DataSet":
        """New DataSet containing the given rows, in the given order."""
        idx = np.asarray(indices, dtype=np.int64)
        return DataSet(
            features=self.features[idx].copy(),
            labels=self.labels[idx].copy(),
            subgroups=self.subgroups[idx].copy(),
            sources=self.sources[idx].copy(),
        )

    def subgroup_tokens(self) -> list[str]:
        """Distinct subgroup tokens, lexicographically sorted."""
        return sorted({str(t) for t in self.subgroups})

    def __eq__(self, other) -> bool:
        if not isinstance(other, DataSet):
            return NotImplemented
        return (
            self.features.shape == other.features.shape
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.subgroups, other.subgroups)
            and np.array_equal(self.sources, other.sources)
        )


def concat(parts: list[DataSet]) -> DataSet:
    """Multiset concatenation; duplicates allowed, order preserved."""
    if not parts:
        raise DomainError("nothing to concatenate")
    d = parts[0].feature_dim
    if any(p.feature_dim != d for p in parts):
        raise DomainError("feature dimensions disagree")
    return DataSet(
        features=np.concatenate([p.features for p in parts], axis=0),
        labels=np.concatenate([p.labels for p in parts]),
        subgroups=np.concatenate([p.subgroups for p in parts]),
        sources=np.concatenate([p.sources for p in parts]),
    )


@dataclass(frozen=True, eq=False)
class SourceRegistry:
    """Map of source token to DataSet with a stable ordering."""

    sources: dict[str, DataSet]
    ordering: tuple[str, ...] = field(default=())

    def __post_init__(self):
        order = tuple(self.ordering) if self.ordering else tuple(self.sources)
        if sorted(order) != sorted(self.sources):
            raise DomainError("ordering must list each source token exactly once")
        dims = {ds.feature_dim for ds in self.sources.values()}
        if len(dims) > 1:
            raise DomainError(f"member datasets disagree on feature_dim: {sorted(dims)}")
        object.__setattr__(self, "ordering", order)

    def __len__(self) -> int:
        return len(self.sources)

    def __contains__(self, token: str) -> bool:
        return token in self.sources

    def get(self, token: str) -> DataSet:
        if token not in self.sources:
            raise DomainError(f"unknown source token {token!r}")
        return self.sources[token]

    @property
    def feature_dim(self) -> int:
        if not self.sources:
            raise DomainError("empty registry has no feature_dim")
        return next(iter(self.sources.values())).feature_dim

    def __eq__(self, other) -> bool:
        if not isinstance(other, SourceRegistry):
            return NotImplemented
        return self.ordering == other.ordering and all(
            self.sources[t] == other.sources[t] for t in self.ordering
        )


@dataclass(frozen=True)
class AdditionVector:
    """Per-source inclusion flags plus an optional cap and subgroup filter."""

    include: tuple[int, ...]
    per_source_cap: int | None = None
    subgroup_filter: str | None = None

    def __post_init__(self):
        if any(flag not in (0, 1) for flag in self.include):
            raise DomainError("include flags must be 0 or 1")
        if self.per_source_cap is not None and self.per_source_cap < 1:
            raise DomainError("per_source_cap must be >= 1 when present")


def subgroup_subset(d: DataSet, a: str) -> DataSet:
    """Rows of ``d`` whose subgroup equals ``a``, original order preserved."""
    mask = d.subgroups == a
    return d.take(np.flatnonzero(mask))


def subgroup_ratio(d: DataSet, a: str) -> float:
    """|D^a| / |D|."""
    if len(d) == 0:
        raise DomainError("subgroup_ratio of an empty dataset is undefined")
    return float(np.count_nonzero(d.subgroups == a)) / len(d)


def delta_ratio(train: DataSet, added: DataSet, a: str) -> float:
    """Ratio(train ∪ added, a) − Ratio(train, a); union is concatenation."""
    if len(train) == 0:
        raise DomainError("delta_ratio needs a non-empty train set")
    n_train_a = np.count_nonzero(train.subgroups == a)
    n_added_a = np.count_nonzero(added.subgroups == a) if len(added) else 0
    combined = (n_train_a + n_added_a) / (len(train) + len(added))
    return float(combined - n_train_a / len(train))


def _cell_keys(d: DataSet) -> np.ndarray:
    """Stratification key per row: (subgroup, label)."""
    return np.array(
        [f"{s}\x1f{y}" for s, y in zip(d.subgroups, d.labels)], dtype=object
    )


def stratified_kfold(d: DataSet, k: int, seed: int) -> list[tuple[DataSet, DataSet]]:
    """Deterministic k-fold split stratified on (subgroup × label) cells.

    Per-fold counts of each cell differ by at most one across folds, and the
    fold sizes themselves differ by at most one. Which members of a cell land
    in which fold is decided by a seeded shuffle.
    """
    n = len(d)
    if k < 2:
        raise DomainError("k must be >= 2")
    if k > n:
        raise DomainError(f"k={k} exceeds dataset size {n}")
    rng = derive_rng(seed, "stratified_kfold")
    keys = _cell_keys(d)
    # Shuffle within each cell, then lay cells out contiguously and deal the
    # combined sequence round-robin: position j goes to fold j % k. This keeps
    # both per-cell and overall fold sizes balanced to within one.
    order = []
    for cell in sorted(set(keys)):
        members = np.flatnonzero(keys == cell)
        order.extend(members[rng.permutation(len(members))])
    order = np.asarray(order, dtype=np.int64)
    fold_of = np.empty(n, dtype=np.int64)
    fold_of[order] = np.arange(n) % k
    splits = []
    for f in range(k):
        test_idx = np.flatnonzero(fold_of == f)
        train_idx = np.flatnonzero(fold_of != f)
        splits.append((d.take(train_idx), d.take(test_idx)))
    return splits


def draw_indices(d: DataSet, n: int, seed: int, stratify: bool = False) -> np.ndarray:
    """Sorted row indices of a seeded draw of ``n`` rows without replacement.

    With ``stratify`` the draw allocates counts to (subgroup × label) cells
    proportionally (largest-remainder rounding), so each cell is represented
    within one sample of its exact share.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    if n > len(d):
        raise DomainError(f"cannot draw {n} from {len(d)} samples")
    rng = derive_rng(seed, "draw_fixed")
    if not stratify:
        return np.sort(rng.permutation(len(d))[:n])
    keys = _cell_keys(d)
    cells = sorted(set(keys))
    members = {c: np.flatnonzero(keys == c) for c in cells}
    shares = {c: n * len(members[c]) / len(d) for c in cells}
    counts = {c: int(np.floor(shares[c])) for c in cells}
    short = n - sum(counts.values())
    by_remainder = sorted(cells, key=lambda c: (-(shares[c] - counts[c]), c))
    for c in by_remainder[:short]:
        counts[c] += 1
    chosen: list[np.ndarray] = []
    for c in cells:
        perm = members[c][rng.permutation(len(members[c]))]
        chosen.append(perm[:counts[c]])
    idx = np.concatenate(chosen) if chosen else np.empty(0, dtype=np.int64)
    # Proportional shares never exceed cell sizes (n <= |d|), so the slices
    # above cannot come up short; assert the bookkeeping anyway.
    if idx.size != n:
        raise DomainError("stratified allocation failed to reach n")
    return np.sort(idx)


def draw_fixed(d: DataSet, n: int, seed: int, stratify: bool = False) -> DataSet:
    """Seeded draw of ``n`` rows without replacement; see draw_indices."""
    return d.take(draw_indices(d, n, seed, stratify))


def compose(
    train: DataSet, registry: SourceRegistry, z: AdditionVector, seed: int
) -> DataSet:
    """Assemble an augmented training set: train plus the flagged sources.

    Each included source is restricted to the subgroup filter (when set) and
    truncated to the per-source cap by a seeded draw. Output order: train
    first, then sources in registry order.
    """
    if len(z.include) != len(registry):
        raise DomainError(
            f"addition vector length {len(z.include)} != registry size {len(registry)}"
        )
    parts = [train]
    for flag, token in zip(z.include, registry.ordering):
        if not flag:
            continue
        part = registry.get(token)
        if z.subgroup_filter is not None:
            part = subgroup_subset(part, z.subgroup_filter)
        if len(part) == 0:
            continue
        if z.per_source_cap is not None and len(part) > z.per_source_cap:
            part = draw_fixed(part, z.per_source_cap, subseed(seed, "compose", token))
        parts.append(part)
    return concat(parts)
