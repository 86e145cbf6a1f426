import numpy as np
import pytest

from fairadd.data_model import DataSet
from fairadd.synthgen import SubgroupSpec, SyntheticSpec, generate_registry


def make_dataset(labels, subgroups, features=None, source="S"):
    labels = np.asarray(labels, dtype=np.int64)
    n = labels.size
    if features is None:
        features = np.arange(n, dtype=np.float64)[:, None]
    return DataSet(
        features=np.asarray(features, dtype=np.float64).reshape(n, -1),
        labels=labels,
        subgroups=np.asarray(list(subgroups), dtype=object),
        sources=np.asarray([source] * n, dtype=object),
    )


class FixedScoreClassifier:
    """Test double mapping row index (feature column 0) to a preset score."""

    def __init__(self, scores, threshold=0.5):
        self.scores = np.asarray(scores, dtype=np.float64)
        self.threshold = threshold

    def score(self, features):
        idx = np.asarray(features)[:, 0].astype(np.int64)
        return self.scores[idx]


class ConstantClassifier:
    def __init__(self, value, threshold=0.5):
        self.value = value
        self.threshold = threshold

    def score(self, features):
        return np.full(np.asarray(features).shape[0], self.value, dtype=np.float64)


def two_source_spec(seed=7, dim=2, rate_a=0.5, rate_b=0.5, shift=0.0):
    """Two sources with a minority subgroup whose base rate differs."""
    def subs(rate):
        return {
            "maj": SubgroupSpec(0.7, 0.4, (0.0,) * dim, (1.0,) * dim),
            "min": SubgroupSpec(0.3, rate, (shift,) * dim, tuple(shift + 1.0 for _ in range(dim))),
        }
    return SyntheticSpec(
        sources={"A": subs(rate_a), "B": subs(rate_b)}, feature_dim=dim, seed=seed
    )


@pytest.fixture(scope="session")
def small_registry():
    return generate_registry(two_source_spec(), {"A": 1200, "B": 1200})
