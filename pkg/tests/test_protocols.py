import hashlib

import numpy as np
import pytest

from fairadd.data_model import subgroup_ratio
from fairadd.errors import DomainError
from fairadd.model import Hyper
from fairadd.protocols import (
    ExperimentConfig,
    bmw_table,
    fold_plans,
    make_trainer,
    pareto_frontier,
    run_baseline,
    run_calibration_comparison,
    run_grid,
    run_subgroup_level,
    run_whole_source,
)
from fairadd.seeding import derive_rng
from fairadd.synthgen import SubgroupSpec, SyntheticSpec, generate_registry

from conftest import two_source_spec

CFG = ExperimentConfig(
    n_train=200, n_test=150, n_added=200, subgroup_cap=120,
    n_validation=80, k_folds=3, seed=9,
)
HYPER = Hyper(learning_rate=0.5, max_iters=1200)


@pytest.fixture(scope="module")
def trainer():
    return make_trainer(HYPER, threshold=0.5)


@pytest.fixture(scope="module")
def registry():
    return generate_registry(two_source_spec(seed=71, rate_a=0.5, rate_b=0.2),
                             {"A": 900, "B": 900})


def separable_registry():
    spec = SyntheticSpec(
        sources={"S": {"a": SubgroupSpec(1.0, 0.5, (-4.0,), (4.0,))}},
        feature_dim=1, seed=72,
    )
    return generate_registry(spec, {"S": 700})


class TestRunBaseline:
    def test_separable_source_high_accuracy(self, trainer):
        reg = separable_registry()
        rec = run_baseline("S", reg, CFG, trainer)
        assert rec.overall.accuracy.mean >= 0.99
        assert rec.mode == "baseline" and rec.added is None

    def test_deterministic(self, registry, trainer):
        r1 = run_baseline("A", registry, CFG, trainer)
        r2 = run_baseline("A", registry, CFG, trainer)
        assert r1 == r2

    def test_fold_draws_disjoint_within_fold(self, registry):
        data = registry.get("A")
        for plan in fold_plans(data, CFG, "A"):
            assert not set(plan.train_idx) & set(plan.test_idx)
            assert len(plan.train_idx) == CFG.n_train
            assert len(plan.test_idx) == CFG.n_test

    def test_undersized_source_names_shortfall(self, trainer):
        reg = separable_registry()
        big = ExperimentConfig(n_train=650, n_test=100, k_folds=2, seed=1)
        with pytest.raises(DomainError, match="short 50"):
            run_baseline("S", reg, big, trainer)


class TestRunWholeSource:
    def test_twin_addition_does_not_hurt(self, trainer):
        spec = two_source_spec(seed=73)
        reg = generate_registry(spec, {"A": 2400, "B": 2400})
        cfg = ExperimentConfig(n_train=300, n_test=1200, n_added=300,
                               k_folds=3, seed=5)
        rec = run_whole_source("A", "B", reg, cfg, trainer)
        assert rec.overall.delta_accuracy.mean >= -0.01

    def test_none_sentinel_gives_zero_deltas(self, registry, trainer):
        rec = run_whole_source("A", None, registry, CFG, trainer)
        assert rec.overall.delta_accuracy.mean == 0.0
        assert rec.overall.delta_disc.mean == 0.0
        assert rec.overall.samples_added.mean == 0.0

    def test_label_flipped_source_hurts_somewhere(self, trainer):
        def subs(flip):
            lo, hi = ((1.0, 0.0) if flip else (0.0, 1.0))
            return {"a": SubgroupSpec(0.5, 0.5, (lo,), (hi,)),
                    "b": SubgroupSpec(0.5, 0.5, (lo,), (hi,))}
        spec = SyntheticSpec(sources={"T": subs(False), "F": subs(True)},
                             feature_dim=1, seed=74)
        reg = generate_registry(spec, {"T": 900, "F": 900})
        rec = run_whole_source("T", "F", reg, CFG, trainer)
        assert any(sm.delta_accuracy.mean < 0 for sm in rec.subgroups.values())

    def test_control_diagonal_mode(self, registry, trainer):
        rec = run_whole_source("A", "A", registry, CFG, trainer)
        assert rec.mode == "control"
        assert rec.overall.samples_added.mean == CFG.n_train

    def test_paired_test_folds_shared_with_baseline(self, registry):
        data = registry.get("A")
        plans = fold_plans(data, CFG, "A")
        again = fold_plans(data, CFG, "A")
        for p1, p2 in zip(plans, again):
            h1 = hashlib.sha256(data.take(p1.test_idx).features.tobytes()).hexdigest()
            h2 = hashlib.sha256(data.take(p2.test_idx).features.tobytes()).hexdigest()
            assert h1 == h2

    def test_delta_ratio_matches_direct_computation(self, registry, trainer):
        rec = run_whole_source("A", "B", registry, CFG, trainer)
        assert "min" in rec.subgroups
        # B's min rate differs from A's, so the ratio moves and folds vary
        assert rec.subgroups["min"].delta_ratio.n_folds == CFG.k_folds


class TestRunSubgroupLevel:
    def test_samples_added_capped(self, registry, trainer):
        rec = run_subgroup_level("A", "B", "min", registry, CFG, trainer)
        n_min = int(np.sum(registry.get("B").subgroups == "min"))
        expected = min(n_min, CFG.subgroup_cap)
        assert rec.overall.samples_added.mean == expected
        assert rec.subgroup_filter == "min"

    def test_label_degenerate_slice_still_trains(self, trainer):
        def subs(rate_min):
            return {"maj": SubgroupSpec(0.8, 0.5, (0.0,), (1.0,)),
                    "min": SubgroupSpec(0.2, rate_min, (0.0,), (1.0,))}
        spec = SyntheticSpec(sources={"T": subs(0.5), "D": subs(1.0)},
                             feature_dim=1, seed=75)
        reg = generate_registry(spec, {"T": 900, "D": 900})
        rec = run_subgroup_level("T", "D", "min", reg, CFG, trainer)
        assert rec.overall.delta_accuracy is not None

    def test_missing_subgroup_rejected(self, registry, trainer):
        with pytest.raises(DomainError):
            run_subgroup_level("A", "B", "ghost", registry, CFG, trainer)

    def test_spillover_deltas_reported_for_all_subgroups(self, registry, trainer):
        rec = run_subgroup_level("A", "B", "min", registry, CFG, trainer)
        assert set(rec.subgroups) == {"maj", "min"}


class TestCalibrationComparison:
    def test_table_shape_and_order(self, registry, trainer):
        records, table = run_calibration_comparison("A", registry, CFG, trainer)
        assert {r.added for r in records} == {"A", "B"}
        for block in table["subgroups"].values():
            for arm in ("without_calibration", "with_calibration"):
                best = block[arm]["best"]["mean"]
                med = block[arm]["median"]["mean"]
                worst = block[arm]["worst"]["mean"]
                assert best >= med >= worst

    def test_single_added_source_collapses(self, trainer):
        spec = two_source_spec(seed=76)
        reg = generate_registry(spec, {"A": 900})
        records, table = run_calibration_comparison("A", reg, CFG, trainer)
        block = table["subgroups"]["maj"]["without_calibration"]
        assert block["best"]["mean"] == block["median"]["mean"] == block["worst"]["mean"]

    def test_figure_statistic_present(self, registry, trainer):
        _, table = run_calibration_comparison("A", registry, CFG, trainer)
        for block in table["subgroups"].values():
            expected = (block["without_calibration"]["best"]["mean"]
                        - block["with_calibration"]["worst"]["mean"])
            assert block["best_nocal_minus_worst_cal"] == expected


class TestParetoFrontier:
    def test_dominance_enumeration(self):
        points = [(1.0, 1.0), (0.0, 2.0), (2.0, 0.0), (0.0, 0.0)]
        assert set(pareto_frontier(points)) == {(1.0, 1.0), (0.0, 2.0), (2.0, 0.0)}

    def test_single_point(self):
        assert pareto_frontier([(0.5, -0.5)]) == [(0.5, -0.5)]

    def test_every_excluded_point_dominated(self):
        rng = derive_rng(16, "pareto")
        points = [tuple(p) for p in rng.random((100, 2))]
        frontier = set(pareto_frontier(points))
        for q in points:
            if q in frontier:
                continue
            assert any(
                p[0] >= q[0] and p[1] >= q[1] and (p[0] > q[0] or p[1] > q[1])
                for p in frontier
            )

    def test_duplicates_both_kept(self):
        points = [(1.0, 1.0), (1.0, 1.0), (0.5, 0.5)]
        assert pareto_frontier(points) == [(1.0, 1.0), (1.0, 1.0)]


class TestRunGrid:
    def test_parallel_schedule_identical(self, registry):
        serial = run_grid("whole_source", ["A", "B"], registry, CFG, hyper=HYPER, jobs=1)
        parallel = run_grid("whole_source", ["A", "B"], registry, CFG, hyper=HYPER, jobs=4)
        assert serial == parallel

    def test_grid_shape(self, registry):
        records = run_grid("whole_source", ["A", "B"], registry, CFG, hyper=HYPER)
        assert len(records) == 4
        modes = {(r.target, r.added): r.mode for r in records}
        assert modes[("A", "A")] == "control" and modes[("A", "B")] == "whole_source"

    def test_bound_propagates_to_all_records(self, registry):
        records = run_grid("baseline", ["A", "B"], registry, CFG, hyper=HYPER)
        for rec in records:
            for sm in [rec.overall] + list(rec.subgroups.values()):
                assert sm.mean_discrepancy.mean <= 1 - sm.accuracy.mean + 1e-9
