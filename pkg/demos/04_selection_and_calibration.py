"""Compare the data-selection heuristics, then stack calibration on top.

None of the heuristics is guaranteed to pick the best source; this demo
shows how their choices diverge on the same registry, and how isotonic
calibration interacts with a good (and a bad) addition.

    python demos/04_selection_and_calibration.py
"""

from fairadd.data_model import subgroup_subset
from fairadd.model import Hyper
from fairadd.protocols import ExperimentConfig, make_trainer, run_calibration_comparison
from fairadd.selection import (
    greedy_accuracy_step,
    select_max_count,
    select_max_ratio,
    select_min_disc_delta,
    select_most_similar,
)
from fairadd.synthgen import SubgroupSpec, SyntheticSpec, generate_registry, generate_source


def hospital(min_rate, min_weight=0.3):
    return {
        "maj": SubgroupSpec(1 - min_weight, 0.35, (0, 0, 0), (0, 1.0, 1.0)),
        "min": SubgroupSpec(min_weight, min_rate, (3, 0, 0), (3, 0.4, 0.4)),
    }


spec = SyntheticSpec(
    sources={
        "target": hospital(0.70),
        "big_but_skewed": hospital(0.25, min_weight=0.5),
        "aligned_small": hospital(0.70, min_weight=0.15),
    },
    feature_dim=3,
    seed=17,
)
registry = generate_registry(
    spec, {"big_but_skewed": 2400, "aligned_small": 2400}
)
train = generate_source(spec, "target", 800)
test = generate_source(
    SyntheticSpec(sources=spec.sources, feature_dim=3, seed=18), "target", 1600
)
test_min = subgroup_subset(test, "min")
trainer = make_trainer(Hyper(learning_rate=0.5, max_iters=2500))

print("candidates: big_but_skewed (lots of minority data, wrong base rate)")
print("            aligned_small  (little minority data, right distribution)\n")

for name, outcome in [
    ("max-count     ", select_max_count(registry, "min")),
    ("max-ratio     ", select_max_ratio(registry, "min")),
    ("max-similarity", select_most_similar(test_min, registry, "min", seed=4)),
    ("min-disc-delta", select_min_disc_delta(train, registry, test_min, trainer,
                                             cap=800, seed=4)),
    ("greedy-acc    ", greedy_accuracy_step(train, registry, test_min, trainer,
                                            cap=800, seed=4)),
]:
    scores = {k: round(v, 4) for k, v in outcome.scores.items()}
    print(f"{name} -> {outcome.chosen:<15} scores: {scores}")

print("\ncalibration comparison over every added source (fold-averaged):")
cfg = ExperimentConfig(n_train=600, n_test=600, n_added=600, subgroup_cap=600,
                       n_validation=200, k_folds=3, seed=5)
reg_all = generate_registry(
    spec, {"target": 2600, "big_but_skewed": 2600, "aligned_small": 2600}
)
_, table = run_calibration_comparison("target", reg_all, cfg, trainer)
block = table["subgroups"]["min"]
for arm in ("without_calibration", "with_calibration"):
    cells = block[arm]
    print(f"  {arm}: " + ", ".join(
        f"{rank}={cells[rank]['label']} (via {cells[rank]['added']})"
        for rank in ("best", "median", "worst")
    ))
print(f"  best(no-cal) - worst(cal) = {block['best_nocal_minus_worst_cal']:+.4f}")
