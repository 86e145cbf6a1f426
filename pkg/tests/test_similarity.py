import numpy as np
import pytest

from fairadd.data_model import concat
from fairadd.errors import DomainError
from fairadd.similarity import (
    fit_domain_classifier,
    holdout_membership_accuracy,
    score_xy,
    subgroup_score_xy,
)
from fairadd.synthgen import SubgroupSpec, SyntheticSpec, generate_source

from conftest import ConstantClassifier, make_dataset, two_source_spec


def separated_pair(distance, n=2000, seed=17):
    off = distance / np.sqrt(2.0)
    spec = SyntheticSpec(
        sources={
            "P": {"all": SubgroupSpec(1.0, 0.4, (0.0, 0.0), (0.5, 0.5))},
            "Q": {"all": SubgroupSpec(1.0, 0.4, (off, off), (off + 0.5, off + 0.5))},
        },
        feature_dim=2, seed=seed,
    )
    return generate_source(spec, "P", n), generate_source(spec, "Q", n)


class TestFitDomainClassifier:
    def test_identical_datasets_near_half(self):
        spec = two_source_spec(seed=41)
        p = generate_source(spec, "A", 2000)
        dc = fit_domain_classifier(p, p, seed=2)
        assert abs(holdout_membership_accuracy(dc) - 0.5) <= 0.05

    def test_separated_supports_high_accuracy(self):
        p, q = separated_pair(8.0)
        dc = fit_domain_classifier(p, q, seed=2)
        assert holdout_membership_accuracy(dc) >= 0.95

    def test_deterministic(self):
        spec = two_source_spec(seed=42)
        p = generate_source(spec, "A", 400)
        q = generate_source(spec, "B", 400)
        m1 = fit_domain_classifier(p, q, seed=5).model
        m2 = fit_domain_classifier(p, q, seed=5).model
        assert np.array_equal(m1.weights, m2.weights)
        assert m1.intercept == m2.intercept

    def test_empty_rejected(self):
        from fairadd.data_model import DataSet

        p = make_dataset([0, 1], "aa")
        with pytest.raises(DomainError):
            fit_domain_classifier(p, DataSet.empty(1), seed=0)


class TestScoreXY:
    def test_twins_near_half(self):
        spec = two_source_spec(seed=43)
        p = generate_source(spec, "A", 2000)
        q = generate_source(spec, "B", 2000)
        dc = fit_domain_classifier(p, q, seed=1)
        assert abs(score_xy(dc, dc.p_holdout) - 0.5) <= 0.05

    def test_separated_near_one(self):
        p, q = separated_pair(6.0)
        dc = fit_domain_classifier(p, q, seed=1)
        assert score_xy(dc, dc.p_holdout) >= 0.9

    def test_constant_half_classifier(self):
        spec = two_source_spec(seed=44)
        p = generate_source(spec, "A", 100)
        dc = fit_domain_classifier(p, p, seed=0)
        object.__setattr__(dc, "model", ConstantClassifier(0.5))
        assert score_xy(dc, p) == 0.5

    def test_mixture_linearity(self):
        spec = two_source_spec(seed=45)
        p = generate_source(spec, "A", 600)
        q = generate_source(spec, "B", 600)
        dc = fit_domain_classifier(p, q, seed=3)
        p1 = generate_source(spec, "A", 200)
        p2 = generate_source(spec, "B", 300)
        both = concat([p1, p2])
        expected = (200 * score_xy(dc, p1) + 300 * score_xy(dc, p2)) / 500
        assert score_xy(dc, both) == pytest.approx(expected, abs=1e-12)

    def test_role_swap_symmetry_on_twins(self):
        spec = two_source_spec(seed=46)
        p = generate_source(spec, "A", 2000)
        q = generate_source(spec, "B", 2000)
        d1 = fit_domain_classifier(p, q, seed=7)
        d2 = fit_domain_classifier(q, p, seed=7)
        assert abs(score_xy(d1, d1.p_holdout) - 0.5) <= 0.05
        assert abs(score_xy(d2, d2.p_holdout) - 0.5) <= 0.05


class TestSubgroupScoreXY:
    def test_single_subgroup_equals_overall(self):
        spec = SyntheticSpec(
            sources={"A": {"only": SubgroupSpec(1.0, 0.5, (0.0,), (1.0,))},
                     "B": {"only": SubgroupSpec(1.0, 0.5, (0.5,), (1.5,))}},
            feature_dim=1, seed=47,
        )
        p = generate_source(spec, "A", 600)
        q = generate_source(spec, "B", 600)
        dc = fit_domain_classifier(p, q, seed=1)
        assert subgroup_score_xy(dc, dc.p_holdout, "only") == score_xy(dc, dc.p_holdout)

    def test_aligned_subgroup_scores_below_overall(self):
        # "stable" is identical across sources; each source's "shifted"
        # subgroup occupies its own region, so P's shifted slice is easy to
        # tell apart from Q and inflates the overall score
        def spec_for(offset):
            return {
                "stable": SubgroupSpec(0.5, 0.5, (0.0, 0.0), (1.0, 1.0)),
                "shifted": SubgroupSpec(0.5, 0.5, (offset, offset),
                                        (offset + 1.0, offset + 1.0)),
            }
        spec = SyntheticSpec(
            sources={"P": spec_for(-4.0), "Q": spec_for(4.0)}, feature_dim=2, seed=48
        )
        p = generate_source(spec, "P", 3000)
        q = generate_source(spec, "Q", 3000)
        dc = fit_domain_classifier(p, q, seed=2)
        stable = subgroup_score_xy(dc, dc.p_holdout, "stable")
        overall = score_xy(dc, dc.p_holdout)
        assert stable < overall

    def test_constant_classifier_half_everywhere(self):
        spec = two_source_spec(seed=49)
        p = generate_source(spec, "A", 200)
        dc = fit_domain_classifier(p, p, seed=0)
        object.__setattr__(dc, "model", ConstantClassifier(0.5))
        for token in ("maj", "min"):
            assert subgroup_score_xy(dc, p, token) == 0.5

    def test_missing_subgroup_rejected(self):
        spec = two_source_spec(seed=50)
        p = generate_source(spec, "A", 200)
        dc = fit_domain_classifier(p, p, seed=0)
        with pytest.raises(DomainError):
            subgroup_score_xy(dc, dc.p_holdout, "ghost")
