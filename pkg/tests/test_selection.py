import numpy as np
import pytest

from fairadd.data_model import SourceRegistry, subgroup_subset
from fairadd.errors import DomainError
from fairadd.model import Hyper
from fairadd.protocols import make_trainer
from fairadd.selection import (
    greedy_accuracy_step,
    select_max_count,
    select_max_ratio,
    select_min_disc_delta,
    select_most_similar,
)
from fairadd.synthgen import SubgroupSpec, SyntheticSpec, generate_registry, generate_source

from conftest import make_dataset

# Each source's (subgroup -> count) mirrors a multi-hospital demographic
# table; "Unknown" is the remainder bucket up to each hospital's total.
HOSPITAL_COUNTS = {
    "73": {"Asian": 61, "Black": 622, "Other": 347, "White": 3221, "Unknown": 69},
    "167": {"Asian": 29, "Black": 154, "Other": 421, "White": 1503},
    "188": {"Asian": 29, "Black": 517, "Other": 64, "White": 1689},
    "199": {"Asian": 3, "Black": 42, "Other": 48, "White": 2434, "Unknown": 2},
    "243": {"Asian": 24, "Black": 873, "Other": 83, "White": 1831, "Unknown": 1},
    "252": {"Asian": 7, "Black": 152, "Other": 50, "White": 1993, "Unknown": 8},
    "264": {"Asian": 31, "Black": 263, "Other": 64, "White": 3299, "Unknown": 88},
    "300": {"Asian": 19, "Black": 267, "Other": 84, "White": 2000},
    "338": {"Asian": 5, "Black": 41, "Other": 143, "White": 2568, "Unknown": 5},
    "420": {"Asian": 52, "Black": 157, "Other": 276, "White": 2940},
    "443": {"Asian": 12, "Black": 1352, "Other": 83, "White": 1119, "Unknown": 14},
    "458": {"Asian": 34, "Black": 747, "Other": 132, "White": 1542, "Unknown": 1},
}


def counts_registry(counts=HOSPITAL_COUNTS):
    sources = {}
    for token, per_sub in counts.items():
        subgroups, labels = [], []
        for sub, n in per_sub.items():
            subgroups.extend([sub] * n)
            labels.extend([i % 2 for i in range(n)])
        sources[token] = make_dataset(labels, subgroups, source=token)
    return SourceRegistry(sources=sources)


@pytest.fixture(scope="module")
def hospitals():
    return counts_registry()


class TestMaxRatio:
    def test_black_picks_443(self, hospitals):
        out = select_max_ratio(hospitals, "Black")
        assert out.chosen == "443"
        assert out.scores["443"] == pytest.approx(1352 / 2580)
        assert round(out.scores["443"], 3) == 0.524

    def test_asian_picks_420(self, hospitals):
        out = select_max_ratio(hospitals, "Asian")
        assert out.chosen == "420"

    def test_single_source(self):
        reg = counts_registry({"only": {"a": 5, "b": 5}})
        assert select_max_ratio(reg, "a").chosen == "only"

    def test_absent_subgroup_flagged(self, hospitals):
        out = select_max_ratio(hospitals, "ghost")
        assert out.chosen == "73"
        assert out.notes


class TestMaxCount:
    def test_black_picks_443(self, hospitals):
        out = select_max_count(hospitals, "Black")
        assert out.chosen == "443"
        assert out.scores["443"] == 1352

    def test_asian_picks_73(self, hospitals):
        out = select_max_count(hospitals, "Asian")
        assert out.chosen == "73"
        assert out.scores["73"] == 61

    def test_tie_breaks_by_registry_order(self):
        reg = counts_registry({"first": {"a": 7, "b": 3}, "second": {"a": 7, "b": 13}})
        assert select_max_count(reg, "a").chosen == "first"

    def test_pure_count_function_no_model(self, hospitals):
        out = select_max_count(hospitals, "Other")
        assert out.scores == {t: float(np.sum(hospitals.get(t).subgroups == "Other"))
                              for t in hospitals.ordering}


def shifted_spec(seed=60):
    """Target 'T' plus a twin source and a strongly shifted source."""
    def subs(offset):
        return {
            "min": SubgroupSpec(0.5, 0.5, (offset, offset), (offset + 1.0, offset + 1.0)),
            "maj": SubgroupSpec(0.5, 0.4, (offset, offset), (offset + 1.0, offset + 1.0)),
        }
    return SyntheticSpec(
        sources={"T": subs(0.0), "twin": subs(0.0), "far": subs(5.0)},
        feature_dim=2, seed=seed,
    )


class TestMostSimilar:
    def test_twin_chosen_over_shifted(self):
        spec = shifted_spec()
        reg = generate_registry(spec, {"twin": 1500, "far": 1500})
        test_slice = generate_source(spec, "T", 1200)
        out = select_most_similar(test_slice, reg, "min", seed=4)
        assert out.chosen == "twin"
        assert out.scores["twin"] < out.scores["far"]

    def test_single_source(self):
        spec = shifted_spec(seed=61)
        reg = generate_registry(spec, {"twin": 800})
        test_slice = generate_source(spec, "T", 800)
        assert select_most_similar(test_slice, reg, "min", seed=1).chosen == "twin"

    def test_missing_subgroup_rejected(self):
        spec = shifted_spec(seed=62)
        reg = generate_registry(spec, {"twin": 400})
        test_slice = generate_source(spec, "T", 400)
        with pytest.raises(DomainError):
            select_most_similar(test_slice, reg, "ghost", seed=1)


def base_rate_spec(seed=63):
    """Sources that differ only in the minority base rate."""
    def subs(rate):
        return {
            "maj": SubgroupSpec(0.6, 0.35, (0.0, 0.0, 0.0), (0.0, 1.0, 1.0)),
            "min": SubgroupSpec(0.4, rate, (3.0, 0.0, 0.0), (3.0, 0.3, 0.3)),
        }
    return SyntheticSpec(
        sources={"T": subs(0.75), "aligned": subs(0.75), "skewed": subs(0.15)},
        feature_dim=3, seed=seed,
    )


@pytest.fixture(scope="module")
def trainer():
    return make_trainer(Hyper(learning_rate=0.5, max_iters=1500), threshold=0.5)


class TestMinDiscDelta:
    def test_aligned_source_beats_skewed(self, trainer):
        spec = base_rate_spec()
        reg = generate_registry(spec, {"aligned": 1500, "skewed": 1500})
        train = generate_source(spec, "T", 700)
        test_slice = subgroup_subset(generate_source(spec, "T", 2000), "min")
        out = select_min_disc_delta(train, reg, test_slice, trainer, cap=700, seed=2)
        assert out.chosen == "aligned"
        assert out.scores["aligned"] <= out.scores["skewed"]

    def test_single_candidate_chosen(self, trainer):
        spec = base_rate_spec(seed=64)
        reg = generate_registry(spec, {"skewed": 1000})
        train = generate_source(spec, "T", 600)
        test_slice = subgroup_subset(generate_source(spec, "T", 1500), "min")
        assert select_min_disc_delta(train, reg, test_slice, trainer,
                                     cap=600, seed=1).chosen == "skewed"

    def test_chosen_attains_minimum(self, trainer):
        spec = base_rate_spec(seed=65)
        reg = generate_registry(spec, {"aligned": 1200, "skewed": 1200})
        train = generate_source(spec, "T", 500)
        test_slice = subgroup_subset(generate_source(spec, "T", 1500), "min")
        out = select_min_disc_delta(train, reg, test_slice, trainer, cap=500, seed=3)
        assert out.scores[out.chosen] == min(out.scores.values())


class TestGreedyAccuracy:
    def test_twin_beats_far_shift(self, trainer):
        spec = shifted_spec(seed=66)
        reg = generate_registry(spec, {"twin": 1500, "far": 1500})
        train = generate_source(spec, "T", 600)
        test_slice = subgroup_subset(generate_source(spec, "T", 1500), "min")
        out = greedy_accuracy_step(train, reg, test_slice, trainer, cap=600, seed=2)
        assert out.chosen == "twin"

    def test_chosen_attains_maximum(self, trainer):
        spec = base_rate_spec(seed=67)
        reg = generate_registry(spec, {"aligned": 1000, "skewed": 1000})
        train = generate_source(spec, "T", 500)
        test_slice = subgroup_subset(generate_source(spec, "T", 1200), "min")
        out = greedy_accuracy_step(train, reg, test_slice, trainer, cap=500, seed=4)
        assert out.scores[out.chosen] == max(out.scores.values())

    def test_strictly_increasing_transform_keeps_choice(self, trainer):
        spec = base_rate_spec(seed=68)
        reg = generate_registry(spec, {"aligned": 900, "skewed": 900})
        train = generate_source(spec, "T", 400)
        test_slice = subgroup_subset(generate_source(spec, "T", 900), "min")
        out = greedy_accuracy_step(train, reg, test_slice, trainer, cap=400, seed=5)
        transformed = {t: np.exp(3 * v) for t, v in out.scores.items()}
        assert max(transformed, key=transformed.get) == out.chosen
