"""Experiment protocols: baseline, whole-source, subgroup-level, calibration.

Every protocol draws k seeded (train, test) folds from the target source and
measures metric changes against the baseline model of the same fold, on the
identical test draw. Added-source draws are re-seeded per fold so fold
spread reflects sampling variance of the addition as well.

The fold plan for a target depends only on (config seed, target, fold index),
never on the added source, which is what makes baseline/intervention pairs
comparable cell by cell across the whole grid.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .calibration import calibrate_classifier
from .data_model import (
    DataSet,
    SourceRegistry,
    concat,
    delta_ratio,
    draw_fixed,
    draw_indices,
    subgroup_subset,
)
from .errors import DomainError
from .metrics import MetricRecord, evaluate
from .model import Hyper, fit_logistic
from .seeding import subseed
from .selection import Trainer

PROTOCOLS = ("baseline", "whole_source", "subgroup_level", "calibration")
MODES = ("baseline", "whole_source", "control", "subgroup_level", "calibration")


@dataclass(frozen=True)
class ExperimentConfig:
    n_train: int = 1000
    n_test: int = 400
    n_added: int = 1000
    subgroup_cap: int = 1000
    n_validation: int = 200
    k_folds: int = 5
    threshold: float = 0.5
    seed: int = 0
    stratify_draws: bool = False

    def __post_init__(self):
        counts = (self.n_train, self.n_test, self.n_added,
                  self.subgroup_cap, self.n_validation)
        if any(c < 1 for c in counts):
            raise DomainError("all sample counts must be positive")
        if self.k_folds < 2:
            raise DomainError("k_folds must be >= 2")
        if not 0.0 < self.threshold < 1.0:
            raise DomainError("threshold must lie in (0, 1)")

    def to_dict(self) -> dict:
        return {
            "n_train": self.n_train, "n_test": self.n_test,
            "n_added": self.n_added, "subgroup_cap": self.subgroup_cap,
            "n_validation": self.n_validation, "k_folds": self.k_folds,
            "threshold": self.threshold, "seed": self.seed,
            "stratify_draws": self.stratify_draws,
        }


@dataclass(frozen=True)
class FoldStat:
    """Mean and spread of a metric across folds (std uses ddof=1)."""

    mean: float
    std: float
    n_folds: int


def fold_stat(values: list[float]) -> FoldStat | None:
    vals = [v for v in values if v is not None]
    if not vals:
        return None
    arr = np.asarray(vals, dtype=np.float64)
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return FoldStat(mean=float(arr.mean()), std=std, n_folds=arr.size)


@dataclass(frozen=True)
class SliceMetrics:
    """Fold-aggregated metrics for one slice (overall or one subgroup).

    Absolute fields are populated in baseline mode; delta fields in
    intervention modes; delta_accuracy_cal only in calibration mode.
    """

    accuracy: FoldStat | None = None
    auc: FoldStat | None = None
    mean_discrepancy: FoldStat | None = None
    delta_accuracy: FoldStat | None = None
    delta_auc: FoldStat | None = None
    delta_disc: FoldStat | None = None
    delta_ratio: FoldStat | None = None
    samples_added: FoldStat | None = None
    delta_accuracy_cal: FoldStat | None = None


@dataclass(frozen=True)
class DeltaRecord:
    target: str
    added: str | None
    mode: str
    subgroup_filter: str | None
    overall: SliceMetrics
    subgroups: dict[str, SliceMetrics] = field(default_factory=dict)

    def key(self) -> tuple:
        return (self.target, self.added, self.mode, self.subgroup_filter)


@dataclass(frozen=True)
class FoldPlan:
    """Index sets for one fold: disjoint test/train (and spare pool) rows."""

    train_idx: np.ndarray
    test_idx: np.ndarray
    spare_idx: np.ndarray


def fold_plans(
    target_data: DataSet, cfg: ExperimentConfig, target: str
) -> list[FoldPlan]:
    """The k seeded fold plans for a target; independent of any added source."""
    n = len(target_data)
    need = cfg.n_train + cfg.n_test
    if n < need:
        raise DomainError(
            f"source {target!r} has {n} samples; baseline needs "
            f"{need} (short {need - n})"
        )
    plans = []
    for fold in range(cfg.k_folds):
        test_idx = draw_indices(
            target_data, cfg.n_test,
            subseed(cfg.seed, "fold-test", target, fold), cfg.stratify_draws,
        )
        rest = np.setdiff1d(np.arange(n, dtype=np.int64), test_idx)
        train_rel = draw_indices(
            target_data.take(rest), cfg.n_train,
            subseed(cfg.seed, "fold-train", target, fold), cfg.stratify_draws,
        )
        train_idx = rest[train_rel]
        spare_idx = np.setdiff1d(rest, train_idx)
        plans.append(FoldPlan(train_idx=train_idx, test_idx=test_idx, spare_idx=spare_idx))
    return plans


def _added_part(
    registry: SourceRegistry,
    target_data: DataSet,
    plan: FoldPlan,
    target: str,
    added: str,
    cfg: ExperimentConfig,
    fold: int,
) -> DataSet:
    """The fold's addition: n_added from the source, or, on the control
    diagonal, n_train more target samples disjoint from train and test."""
    if added == target:
        if len(plan.spare_idx) < cfg.n_train:
            need = cfg.n_train * 2 + cfg.n_test
            raise DomainError(
                f"source {target!r} has {len(target_data)} samples; the control "
                f"diagonal needs {need} (short {need - len(target_data)})"
            )
        spare = target_data.take(plan.spare_idx)
        return draw_fixed(
            spare, cfg.n_train,
            subseed(cfg.seed, "added", target, added, fold), cfg.stratify_draws,
        )
    source = registry.get(added)
    if len(source) < cfg.n_added:
        raise DomainError(
            f"source {added!r} has {len(source)} samples; whole-source addition "
            f"needs {cfg.n_added} (short {cfg.n_added - len(source)})"
        )
    return draw_fixed(
        source, cfg.n_added,
        subseed(cfg.seed, "added", target, added, fold), cfg.stratify_draws,
    )


def _slice_tokens(records: list[MetricRecord]) -> list[str]:
    tokens: set[str] = set()
    for rec in records:
        tokens.update(rec.subgroups)
    return sorted(tokens)


def _aggregate_absolute(per_fold: list[MetricRecord]) -> tuple[SliceMetrics, dict]:
    def agg(entries) -> SliceMetrics:
        return SliceMetrics(
            accuracy=fold_stat([e.accuracy for e in entries]),
            auc=fold_stat([e.auc for e in entries]),
            mean_discrepancy=fold_stat([e.mean_discrepancy for e in entries]),
        )

    overall = agg([rec.overall for rec in per_fold])
    subs = {}
    for token in _slice_tokens(per_fold):
        entries = [rec.subgroups[token] for rec in per_fold if token in rec.subgroups]
        subs[token] = agg(entries)
    return overall, subs


def _aggregate_deltas(
    base: list[MetricRecord],
    aug: list[MetricRecord],
    ratio_deltas: list[dict[str, float]],
    added_counts: list[dict[str, int]],
    cal: list[MetricRecord] | None = None,
) -> tuple[SliceMetrics, dict[str, SliceMetrics]]:
    """Per-slice fold aggregation of (intervention - baseline) deltas.

    A subgroup absent from a fold's test draw simply contributes no value for
    that fold; a subgroup absent from every fold is omitted entirely.
    """
    def delta_series(pick) -> dict[str, list]:
        out = {"acc": [], "auc": [], "disc": [], "acc_cal": []}
        for k in range(len(base)):
            b, g = pick(base[k]), pick(aug[k])
            c = pick(cal[k]) if cal is not None else None
            if b is None or g is None:
                out["acc"].append(None); out["auc"].append(None)
                out["disc"].append(None); out["acc_cal"].append(None)
                continue
            out["acc"].append(g.accuracy - b.accuracy)
            out["auc"].append(
                g.auc - b.auc if (g.auc is not None and b.auc is not None) else None
            )
            out["disc"].append(g.mean_discrepancy - b.mean_discrepancy)
            out["acc_cal"].append(c.accuracy - b.accuracy if c is not None else None)
        return out

    def build(series, ratios, counts) -> SliceMetrics:
        return SliceMetrics(
            delta_accuracy=fold_stat(series["acc"]),
            delta_auc=fold_stat(series["auc"]),
            delta_disc=fold_stat(series["disc"]),
            delta_ratio=fold_stat(ratios),
            samples_added=fold_stat(counts),
            delta_accuracy_cal=fold_stat(series["acc_cal"]) if cal is not None else None,
        )

    # The overall ratio is |D|/|D|, so its change is identically zero.
    overall = build(
        delta_series(lambda rec: rec.overall),
        [0.0] * len(base),
        [float(sum(c.values())) for c in added_counts],
    )
    subs = {}
    for token in _slice_tokens(base):
        series = delta_series(
            lambda rec, t=token: rec.subgroups.get(t)
        )
        ratios = [rd.get(token) for rd in ratio_deltas]
        counts = [float(c.get(token, 0)) for c in added_counts]
        built = build(series, ratios, counts)
        if built.delta_accuracy is not None:
            subs[token] = built
    return overall, subs


def make_trainer(hyper: Hyper | None = None, threshold: float = 0.5) -> Trainer:
    """Default trainer used by the protocols and the CLI."""
    h = hyper or Hyper()

    def train(d: DataSet):
        return fit_logistic(d, h, threshold=threshold)

    return train


def run_baseline(
    target: str, registry: SourceRegistry, cfg: ExperimentConfig, trainer: Trainer
) -> DeltaRecord:
    """Fold-averaged absolute metrics of the n_train-sample baseline model."""
    data = registry.get(target)
    per_fold = []
    for plan in fold_plans(data, cfg, target):
        model = trainer(data.take(plan.train_idx))
        per_fold.append(evaluate(model, data.take(plan.test_idx)))
    overall, subs = _aggregate_absolute(per_fold)
    return DeltaRecord(
        target=target, added=None, mode="baseline", subgroup_filter=None,
        overall=overall, subgroups=subs,
    )


def _fold_ratio_and_counts(
    train_fold: DataSet, added_part: DataSet
) -> tuple[dict[str, float], dict[str, int]]:
    tokens = sorted(set(train_fold.subgroup_tokens()) | set(added_part.subgroup_tokens()))
    ratios = {a: delta_ratio(train_fold, added_part, a) for a in tokens}
    counts = {
        a: int(np.count_nonzero(added_part.subgroups == a)) for a in tokens
    }
    return ratios, counts


def run_whole_source(
    target: str,
    added: str | None,
    registry: SourceRegistry,
    cfg: ExperimentConfig,
    trainer: Trainer,
) -> DeltaRecord:
    """Delta record for adding n_added samples of one source to the target.

    ``added == target`` is the control diagonal (train on 2 * n_train target
    samples); ``added is None`` is the no-op sentinel and yields zero deltas.
    """
    data = registry.get(target)
    base_records, aug_records = [], []
    ratio_deltas, added_counts = [], []
    for fold, plan in enumerate(fold_plans(data, cfg, target)):
        train_fold = data.take(plan.train_idx)
        test_fold = data.take(plan.test_idx)
        base_model = trainer(train_fold)
        base_rec = evaluate(base_model, test_fold)
        base_records.append(base_rec)
        if added is None:
            aug_records.append(base_rec)
            ratio_deltas.append({a: 0.0 for a in train_fold.subgroup_tokens()})
            added_counts.append({})
            continue
        part = _added_part(registry, data, plan, target, added, cfg, fold)
        aug_model = trainer(concat([train_fold, part]))
        aug_records.append(evaluate(aug_model, test_fold))
        ratios, counts = _fold_ratio_and_counts(train_fold, part)
        ratio_deltas.append(ratios)
        added_counts.append(counts)
    overall, subs = _aggregate_deltas(base_records, aug_records, ratio_deltas, added_counts)
    mode = "control" if added == target else "whole_source"
    return DeltaRecord(
        target=target, added=added, mode=mode, subgroup_filter=None,
        overall=overall, subgroups=subs,
    )


def run_subgroup_level(
    target: str,
    added: str,
    a: str,
    registry: SourceRegistry,
    cfg: ExperimentConfig,
    trainer: Trainer,
) -> DeltaRecord:
    """Delta record for adding only the a-slice of a source, capped."""
    data = registry.get(target)
    source_slice = subgroup_subset(registry.get(added), a)
    if len(source_slice) == 0:
        raise DomainError(f"source {added!r} has no samples with subgroup {a!r}")
    base_records, aug_records = [], []
    ratio_deltas, added_counts = [], []
    for fold, plan in enumerate(fold_plans(data, cfg, target)):
        train_fold = data.take(plan.train_idx)
        test_fold = data.take(plan.test_idx)
        base_model = trainer(train_fold)
        base_records.append(evaluate(base_model, test_fold))
        part = source_slice
        if len(part) > cfg.subgroup_cap:
            part = draw_fixed(
                part, cfg.subgroup_cap,
                subseed(cfg.seed, "subgroup-added", target, added, a, fold),
            )
        aug_model = trainer(concat([train_fold, part]))
        aug_records.append(evaluate(aug_model, test_fold))
        ratios, counts = _fold_ratio_and_counts(train_fold, part)
        ratio_deltas.append(ratios)
        added_counts.append(counts)
    overall, subs = _aggregate_deltas(base_records, aug_records, ratio_deltas, added_counts)
    return DeltaRecord(
        target=target, added=added, mode="subgroup_level", subgroup_filter=a,
        overall=overall, subgroups=subs,
    )


def run_calibration_arm(
    target: str,
    added: str,
    registry: SourceRegistry,
    cfg: ExperimentConfig,
    trainer: Trainer,
) -> DeltaRecord:
    """Whole-source addition with and without isotonic calibration.

    Per fold, a validation holdout of n_validation samples is drawn from the
    composed training mixture before fitting and excluded from training; the
    calibrated arm maps the trained model through an isotonic fit on that
    holdout. Both arms are measured against the plain baseline model on the
    shared test fold.
    """
    data = registry.get(target)
    base_records, aug_records, cal_records = [], [], []
    ratio_deltas, added_counts = [], []
    for fold, plan in enumerate(fold_plans(data, cfg, target)):
        train_fold = data.take(plan.train_idx)
        test_fold = data.take(plan.test_idx)
        base_model = trainer(train_fold)
        base_records.append(evaluate(base_model, test_fold))

        part = _added_part(registry, data, plan, target, added, cfg, fold)
        mixture = concat([train_fold, part])
        if len(mixture) <= cfg.n_validation:
            raise DomainError(
                f"training mixture of {len(mixture)} cannot spare "
                f"{cfg.n_validation} validation samples"
            )
        val_idx = draw_indices(
            mixture, cfg.n_validation,
            subseed(cfg.seed, "validation", target, added, fold), False,
        )
        rest_idx = np.setdiff1d(np.arange(len(mixture), dtype=np.int64), val_idx)
        model = trainer(mixture.take(rest_idx))
        calibrated = calibrate_classifier(model, mixture.take(val_idx))
        aug_records.append(evaluate(model, test_fold))
        cal_records.append(evaluate(calibrated, test_fold))
        ratios, counts = _fold_ratio_and_counts(train_fold, part)
        ratio_deltas.append(ratios)
        added_counts.append(counts)
    overall, subs = _aggregate_deltas(
        base_records, aug_records, ratio_deltas, added_counts, cal=cal_records
    )
    return DeltaRecord(
        target=target, added=added, mode="calibration", subgroup_filter=None,
        overall=overall, subgroups=subs,
    )


def bmw_table(records: list[DeltaRecord], target: str) -> dict:
    """Best/median/worst-per-subgroup summary of calibration records.

    Median of an even count is the lower median. The ± value is the fold
    standard deviation of the source occupying the rank.
    """
    cal_records = [r for r in records if r.mode == "calibration" and r.target == target]
    if not cal_records:
        raise DomainError(f"no calibration records for target {target!r}")

    def rank(slices: list[tuple[str, FoldStat]]) -> dict:
        ordered = sorted(slices, key=lambda item: item[1].mean)
        lo_median = ordered[(len(ordered) - 1) // 2]
        picks = {"best": ordered[-1], "median": lo_median, "worst": ordered[0]}
        return {
            name: {
                "added": token,
                "mean": stat.mean,
                "std": stat.std,
                "label": f"{stat.mean * 100:+.1f}% ± {stat.std * 100:.1f}",
            }
            for name, (token, stat) in picks.items()
        }

    tokens = sorted({t for r in cal_records for t in r.subgroups})
    table: dict = {
        "kind": "bmw",
        "target": target,
        "median_convention": "lower median for even counts",
        "plus_minus": "fold standard deviation (ddof=1)",
        "subgroups": {},
        "overall": None,
    }
    for token in tokens:
        uncal, cal = [], []
        for rec in cal_records:
            sm = rec.subgroups.get(token)
            if sm is None or sm.delta_accuracy is None:
                continue
            uncal.append((rec.added, sm.delta_accuracy))
            if sm.delta_accuracy_cal is not None:
                cal.append((rec.added, sm.delta_accuracy_cal))
        if not uncal or not cal:
            continue
        without = rank(uncal)
        withcal = rank(cal)
        table["subgroups"][token] = {
            "without_calibration": without,
            "with_calibration": withcal,
            "best_nocal_minus_worst_cal":
                without["best"]["mean"] - withcal["worst"]["mean"],
        }
    uncal = [(r.added, r.overall.delta_accuracy) for r in cal_records
             if r.overall.delta_accuracy is not None]
    cal = [(r.added, r.overall.delta_accuracy_cal) for r in cal_records
           if r.overall.delta_accuracy_cal is not None]
    if uncal and cal:
        without = rank(uncal)
        withcal = rank(cal)
        table["overall"] = {
            "without_calibration": without,
            "with_calibration": withcal,
            "best_nocal_minus_worst_cal":
                without["best"]["mean"] - withcal["worst"]["mean"],
        }
    return table


def run_calibration_comparison(
    target: str, registry: SourceRegistry, cfg: ExperimentConfig, trainer: Trainer
) -> tuple[list[DeltaRecord], dict]:
    """Calibration arms for every added source plus the summary table."""
    records = [
        run_calibration_arm(target, added, registry, cfg, trainer)
        for added in registry.ordering
    ]
    return records, bmw_table(records, target)


def bmw_table_averaged(records: list[DeltaRecord]) -> dict:
    """Per-target best/median/worst averaged across all targets.

    The mean of each rank cell is the average of the per-target rank means;
    the ± value is the spread of those per-target means (ddof=1). The `added`
    field is null because the ranked source differs per target.
    """
    targets = sorted({r.target for r in records if r.mode == "calibration"})
    if not targets:
        raise DomainError("no calibration records")
    per_target = [bmw_table(records, t) for t in targets]

    def average(blocks: list[dict]) -> dict:
        out: dict = {}
        for arm in ("without_calibration", "with_calibration"):
            out[arm] = {}
            for rank in ("best", "median", "worst"):
                means = [b[arm][rank]["mean"] for b in blocks]
                stat = fold_stat(means)
                out[arm][rank] = {
                    "added": None,
                    "mean": stat.mean,
                    "std": stat.std,
                    "label": f"{stat.mean * 100:+.1f}% ± {stat.std * 100:.1f}",
                }
        out["best_nocal_minus_worst_cal"] = (
            out["without_calibration"]["best"]["mean"]
            - out["with_calibration"]["worst"]["mean"]
        )
        return out

    tokens = sorted(
        set.intersection(*(set(t["subgroups"]) for t in per_target))
        if per_target else set()
    )
    table: dict = {
        "kind": "bmw",
        "target": None,
        "targets_averaged": targets,
        "median_convention": "lower median for even counts",
        "plus_minus": "spread of per-target rank means (ddof=1)",
        "subgroups": {
            token: average([t["subgroups"][token] for t in per_target])
            for token in tokens
        },
        "overall": average([t["overall"] for t in per_target])
        if all(t["overall"] for t in per_target) else None,
    }
    return table


def pareto_frontier(points: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Maximal points under component-wise dominance.

    p dominates q iff p >= q in both coordinates and p > q in at least one.
    Sort-sweep implementation: scan x descending and keep the points whose y
    strictly exceeds everything seen at larger x (within an x-group, only the
    group maximum can survive; exact duplicates never dominate each other).
    """
    if not points:
        raise DomainError("pareto_frontier needs at least one point")
    indexed = sorted(range(len(points)), key=lambda i: (-points[i][0], -points[i][1]))
    frontier: list[tuple[float, float]] = []
    best_y = -np.inf
    i = 0
    while i < len(indexed):
        j = i
        x = points[indexed[i]][0]
        group = []
        while j < len(indexed) and points[indexed[j]][0] == x:
            group.append(indexed[j])
            j += 1
        group_max = points[group[0]][1]
        for idx in group:
            y = points[idx][1]
            if y == group_max and y > best_y:
                frontier.append(points[idx])
        best_y = max(best_y, group_max)
        i = j
    return frontier


# --- grid fan-out -----------------------------------------------------------

_WORKER_STATE: dict = {}


def _init_worker(registry: SourceRegistry, cfg: ExperimentConfig, hyper: Hyper) -> None:
    _WORKER_STATE["registry"] = registry
    _WORKER_STATE["cfg"] = cfg
    _WORKER_STATE["trainer"] = make_trainer(hyper, cfg.threshold)


def _run_task(task: tuple) -> DeltaRecord:
    registry = _WORKER_STATE["registry"]
    cfg = _WORKER_STATE["cfg"]
    trainer = _WORKER_STATE["trainer"]
    kind, target, added, a = task
    if kind == "baseline":
        return run_baseline(target, registry, cfg, trainer)
    if kind == "whole_source":
        return run_whole_source(target, added, registry, cfg, trainer)
    if kind == "subgroup_level":
        return run_subgroup_level(target, added, a, registry, cfg, trainer)
    if kind == "calibration":
        return run_calibration_arm(target, added, registry, cfg, trainer)
    raise DomainError(f"unknown task kind {kind!r}")


def grid_tasks(
    protocol: str,
    targets: list[str],
    registry: SourceRegistry,
    subgroups: list[str] | None = None,
) -> list[tuple]:
    """Deterministic task list for one protocol over the registry."""
    tasks: list[tuple] = []
    if protocol == "baseline":
        for target in targets:
            tasks.append(("baseline", target, None, None))
    elif protocol == "whole_source":
        for target in targets:
            for added in registry.ordering:
                tasks.append(("whole_source", target, added, None))
    elif protocol == "subgroup_level":
        if subgroups is None:
            raise DomainError("subgroup_level needs subgroup tokens")
        for target in targets:
            for added in registry.ordering:
                for a in subgroups:
                    if np.count_nonzero(registry.get(added).subgroups == a) > 0:
                        tasks.append(("subgroup_level", target, added, a))
    elif protocol == "calibration":
        for target in targets:
            for added in registry.ordering:
                tasks.append(("calibration", target, added, None))
    else:
        raise DomainError(f"unknown protocol {protocol!r}")
    return tasks


def run_grid(
    protocol: str,
    targets: list[str],
    registry: SourceRegistry,
    cfg: ExperimentConfig,
    hyper: Hyper | None = None,
    subgroups: list[str] | None = None,
    jobs: int = 1,
) -> list[DeltaRecord]:
    """Run one protocol over its full task grid, optionally in parallel.

    Results are assembled in task order, so the output is identical for any
    worker count.
    """
    hyper = hyper or Hyper()
    tasks = grid_tasks(protocol, targets, registry, subgroups)
    if jobs <= 1:
        _init_worker(registry, cfg, hyper)
        return [_run_task(t) for t in tasks]
    with ProcessPoolExecutor(
        max_workers=jobs, initializer=_init_worker, initargs=(registry, cfg, hyper)
    ) as pool:
        return list(pool.map(_run_task, tasks))
