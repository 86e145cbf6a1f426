"""Walk through the core objects: build synthetic hospitals, inspect ratios.

Run from the repo root:

    python demos/01_build_and_audit_sources.py
"""

import numpy as np

from fairadd import (
    SubgroupSpec,
    SyntheticSpec,
    delta_ratio,
    draw_fixed,
    generate_registry,
    registry_summary,
    stratified_kfold,
    subgroup_ratio,
    subgroup_subset,
)
from fairadd.ingest import format_summary

# Three synthetic "hospitals". They share feature geometry but the minority
# subgroup's outcome rate differs per hospital, which is exactly the kind of
# shift the audit protocols measure.
spec = SyntheticSpec(
    sources={
        "north": {
            "maj": SubgroupSpec(0.7, 0.35, (0, 0, 0), (0, 1.0, 1.0)),
            "min": SubgroupSpec(0.3, 0.70, (3, 0, 0), (3, 0.4, 0.4)),
        },
        "south": {
            "maj": SubgroupSpec(0.7, 0.35, (0, 0, 0), (0, 1.0, 1.0)),
            "min": SubgroupSpec(0.3, 0.45, (3, 0, 0), (3, 0.4, 0.4)),
        },
        "east": {
            "maj": SubgroupSpec(0.8, 0.35, (0, 0, 0), (0, 1.0, 1.0)),
            "min": SubgroupSpec(0.2, 0.80, (3, 0, 0), (3, 0.4, 0.4)),
        },
    },
    feature_dim=3,
    seed=2024,
)
registry = generate_registry(spec, {"north": 3000, "south": 3000, "east": 2500})

print("== registry summary ==")
print(format_summary(registry_summary(registry)))

north = registry.get("north")
south = registry.get("south")

print("\n== subgroup views ==")
minority = subgroup_subset(north, "min")
print(f"north minority slice: {len(minority)} samples, "
      f"base rate {minority.labels.mean():.3f}")
print(f"north minority ratio: {subgroup_ratio(north, 'min'):.3f}")

print("\n== what adding south to north does to the minority ratio ==")
added = draw_fixed(south, 1000, seed=1)
print(f"delta ratio: {delta_ratio(north, added, 'min'):+.4f}")

print("\n== stratified folds preserve composition ==")
for k, (train, test) in enumerate(stratified_kfold(north, 5, seed=7)):
    print(f"fold {k}: train {len(train)}, test {len(test)}, "
          f"test minority ratio {subgroup_ratio(test, 'min'):.3f}")
