"""Train the reference logistic model and read the per-subgroup metrics.

The key quantity is mean discrepancy: how far the model's mean hard
prediction sits from the slice's true label mean. It caps accuracy from
above (Disc <= 1 - Acc), so a slice with a big discrepancy cannot be
accurate no matter how the errors are arranged.

    python demos/02_metrics_and_model.py
"""

from fairadd.metrics import evaluate, mean_discrepancy, subgroup_accuracy, subgroup_auc
from fairadd.model import Hyper, fit_logistic
from fairadd.synthgen import SubgroupSpec, SyntheticSpec, generate_source

spec = SyntheticSpec(
    sources={
        "clinic": {
            "maj": SubgroupSpec(0.7, 0.35, (0, 0, 0), (0, 1.0, 1.0)),
            "min": SubgroupSpec(0.3, 0.70, (3, 0, 0), (3, 0.4, 0.4)),
        },
    },
    feature_dim=3,
    seed=5,
)
train = generate_source(spec, "clinic", 1500)
spec_test = SyntheticSpec(sources=spec.sources, feature_dim=3, seed=6)
test = generate_source(spec_test, "clinic", 2000)

model = fit_logistic(train, Hyper(learning_rate=0.5, max_iters=3000), threshold=0.5)
print(f"weights: {model.weights.round(3)}  intercept: {model.intercept:.3f}")

record = evaluate(model, test)
print("\nslice      acc     auc     disc    n     n_pos")
entries = {"overall": record.overall, **record.subgroups}
for name, e in entries.items():
    auc = f"{e.auc:.3f}" if e.auc is not None else "  -  "
    print(f"{name:<9} {e.accuracy:.3f}  {auc}  {e.mean_discrepancy:.3f}  {e.n:<5} {e.n_pos}")

print("\nthe bound in action: Disc <= 1 - Acc on every slice")
for name, e in entries.items():
    print(f"  {name}: {e.mean_discrepancy:.3f} <= {1 - e.accuracy:.3f}")

print("\nsingle-slice helpers agree with the record:")
print(f"  subgroup_accuracy(min) = {subgroup_accuracy(model, test, 'min'):.3f}")
print(f"  subgroup_auc(min)      = {subgroup_auc(model, test, 'min'):.3f}")
print(f"  mean_discrepancy(all)  = {mean_discrepancy(model, test):.3f}")
