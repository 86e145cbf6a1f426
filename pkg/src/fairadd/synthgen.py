"""Seeded synthetic multi-source generator.

Each source is a mixture over subgroups; each subgroup draws a Bernoulli label
at its base rate and then class-conditional isotropic Gaussian features. The
three knobs the audit cares about (feature mean shift, base-rate shift, and
subgroup mixture shift) are therefore independently tunable per source.

Labels are drawn before features, so shifting the feature means of every
subgroup never changes label statistics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data_model import DataSet, SourceRegistry
from .errors import DomainError
from .seeding import derive_rng


@dataclass(frozen=True)
class SubgroupSpec:
    """Mixture weight, base rate and class-conditional feature locations."""

    weight: float
    base_rate: float
    mean_0: tuple[float, ...]
    mean_1: tuple[float, ...]
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "mean_0", tuple(float(v) for v in self.mean_0))
        object.__setattr__(self, "mean_1", tuple(float(v) for v in self.mean_1))
        if not 0.0 < self.weight <= 1.0:
            raise DomainError("weight must be in (0, 1]")
        if not 0.0 <= self.base_rate <= 1.0:
            raise DomainError("base_rate must be in [0, 1]")
        if self.scale <= 0.0:
            raise DomainError("scale must be positive")
        if len(self.mean_0) != len(self.mean_1):
            raise DomainError("mean_0 and mean_1 must share a dimension")


@dataclass(frozen=True)
class SyntheticSpec:
    """Per-source subgroup specs plus the shared feature dimension and seed."""

    sources: dict[str, dict[str, SubgroupSpec]]
    feature_dim: int
    seed: int

    def __post_init__(self):
        if self.feature_dim < 1:
            raise DomainError("feature_dim must be >= 1")
        for token, subs in self.sources.items():
            if not subs:
                raise DomainError(f"source {token!r} has no subgroups")
            for name, spec in subs.items():
                if len(spec.mean_0) != self.feature_dim:
                    raise DomainError(
                        f"source {token!r} subgroup {name!r}: mean dimension "
                        f"{len(spec.mean_0)} != feature_dim {self.feature_dim}"
                    )
            total = sum(s.weight for s in subs.values())
            if abs(total - 1.0) > 1e-9:
                raise DomainError(
                    f"source {token!r}: subgroup weights sum to {total}, expected 1"
                )


def generate_source(spec: SyntheticSpec, source: str, n: int) -> DataSet:
    """Draw ``n`` samples for one source; deterministic per (seed, source, n)."""
    if source not in spec.sources:
        raise DomainError(f"unknown source token {source!r}")
    if n < 1:
        raise DomainError("n must be >= 1")
    subs = spec.sources[source]
    names = list(subs)
    weights = np.array([subs[s].weight for s in names], dtype=np.float64)
    weights = weights / weights.sum()

    rng = derive_rng(spec.seed, "synthgen", source)
    which = rng.choice(len(names), size=n, p=weights)
    base_rates = np.array([subs[s].base_rate for s in names])[which]
    labels = (rng.random(n) < base_rates).astype(np.int64)
    noise = rng.standard_normal((n, spec.feature_dim))

    mean_0 = np.array([subs[s].mean_0 for s in names], dtype=np.float64)[which]
    mean_1 = np.array([subs[s].mean_1 for s in names], dtype=np.float64)[which]
    scales = np.array([subs[s].scale for s in names], dtype=np.float64)[which]
    means = np.where(labels[:, None] == 1, mean_1, mean_0)
    features = means + scales[:, None] * noise

    return DataSet(
        features=features,
        labels=labels,
        subgroups=np.array([names[i] for i in which], dtype=object),
        sources=np.array([source] * n, dtype=object),
    )


def generate_registry(spec: SyntheticSpec, sizes: dict[str, int]) -> SourceRegistry:
    """Generate every requested source into a registry."""
    for token, n in sizes.items():
        if token not in spec.sources:
            raise DomainError(f"unknown source token {token!r}")
        if n < 1:
            raise DomainError(f"size for source {token!r} must be >= 1")
    sources = {token: generate_source(spec, token, n) for token, n in sizes.items()}
    return SourceRegistry(sources=sources, ordering=tuple(sizes))
