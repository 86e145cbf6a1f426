import numpy as np
import pytest

from fairadd.data_model import subgroup_ratio
from fairadd.errors import DomainError
from fairadd.ingest import registry_summary
from fairadd.similarity import fit_domain_classifier, score_xy
from fairadd.synthgen import SubgroupSpec, SyntheticSpec, generate_registry, generate_source

from conftest import two_source_spec


class TestSpecs:
    def test_weights_must_sum_to_one(self):
        with pytest.raises(DomainError):
            SyntheticSpec(
                sources={"A": {
                    "a": SubgroupSpec(0.5, 0.5, (0.0,), (1.0,)),
                    "b": SubgroupSpec(0.6, 0.5, (0.0,), (1.0,)),
                }},
                feature_dim=1, seed=0,
            )

    def test_mean_dim_must_match(self):
        with pytest.raises(DomainError):
            SyntheticSpec(
                sources={"A": {"a": SubgroupSpec(1.0, 0.5, (0.0, 0.0), (1.0, 1.0))}},
                feature_dim=3, seed=0,
            )


class TestGenerateSource:
    def test_deterministic(self):
        spec = two_source_spec()
        assert generate_source(spec, "A", 500) == generate_source(spec, "A", 500)

    def test_label_mean_within_binomial_band(self):
        spec = two_source_spec(rate_a=0.3, rate_b=0.3)
        d = generate_source(spec, "A", 10000)
        mask = d.subgroups == "min"
        assert 0.28 <= d.labels[mask].mean() <= 0.32

    def test_twin_sources_indistinguishable(self):
        spec = two_source_spec(seed=23)
        p = generate_source(spec, "A", 2000)
        q = generate_source(spec, "B", 2000)
        dc = fit_domain_classifier(p, q, seed=3)
        score = score_xy(dc, dc.p_holdout)
        assert 0.45 <= score <= 0.55

    def test_unknown_source_rejected(self):
        with pytest.raises(DomainError):
            generate_source(two_source_spec(), "Z", 10)

    def test_subgroup_ratio_tracks_weight(self):
        spec = two_source_spec()
        for n in (400, 2000, 8000):
            d = generate_source(spec, "A", n)
            band = 3 * np.sqrt(0.3 * 0.7 / n)
            assert abs(subgroup_ratio(d, "min") - 0.3) <= band

    def test_mean_shift_leaves_labels_unchanged(self):
        base = two_source_spec(seed=31, shift=0.0)
        shifted = two_source_spec(seed=31, shift=5.0)
        d0 = generate_source(base, "A", 3000)
        d1 = generate_source(shifted, "A", 3000)
        assert np.array_equal(d0.labels, d1.labels)
        assert np.array_equal(d0.subgroups, d1.subgroups)


class TestGenerateRegistry:
    def test_zero_size_rejected(self):
        with pytest.raises(DomainError):
            generate_registry(two_source_spec(), {"A": 0})

    def test_multi_hospital_scale(self):
        subs = {"a": SubgroupSpec(0.8, 0.4, (0.0,), (1.0,)),
                "b": SubgroupSpec(0.2, 0.6, (0.0,), (1.0,))}
        spec = SyntheticSpec(
            sources={f"H{i}": subs for i in range(12)}, feature_dim=1, seed=5
        )
        reg = generate_registry(spec, {f"H{i}": 2100 for i in range(12)})
        assert len(reg) == 12
        assert all(len(reg.get(t)) >= 2000 for t in reg.ordering)

    def test_summary_totals_hold(self, small_registry):
        rows = registry_summary(small_registry)
        for token in small_registry.ordering:
            subtotal = sum(r["count"] for r in rows
                           if r["source"] == token and r["subgroup"] is not None)
            assert subtotal == len(small_registry.get(token))
