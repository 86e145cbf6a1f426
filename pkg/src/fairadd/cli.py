"""Batch command-line entry point.

Commands: ingest, synth, run, select, report. Configuration is a JSON file;
flags override config fields. Exit codes: 0 success, 2 input or data error,
64 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from .data_model import SourceRegistry, subgroup_subset
from .errors import DomainError, SchemaError
from .ingest import (
    TableSchema,
    export_csv,
    format_summary,
    load_csv,
    merge_registries,
    registry_summary,
)
from .model import Hyper
from .protocols import (
    PROTOCOLS,
    ExperimentConfig,
    fold_plans,
    make_trainer,
    run_grid,
)
from .reporting import (
    bmw_csv,
    emit_heatmap,
    emit_pareto,
    emit_scatter,
    heatmap_csv,
    load_resultset,
    make_resultset,
    pareto_csv,
    save_document,
    save_resultset,
    scatter_csv,
    summarize_bmw,
)
from .selection import (
    SelectionOutcome,
    greedy_accuracy_step,
    select_max_count,
    select_max_ratio,
    select_min_disc_delta,
    select_most_similar,
)
from .synthgen import SubgroupSpec, SyntheticSpec, generate_registry

EXIT_OK = 0
EXIT_DATA = 2
EXIT_USAGE = 64

CRITERION_FLAGS = ("max-ratio", "max-count", "max-similarity", "min-disc-delta", "greedy-acc")


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that exits 64 on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    input_mode: str
    csv_paths: list[str]
    schema: TableSchema | None
    synth_spec: SyntheticSpec | None
    synth_sizes: dict[str, int]
    experiment: ExperimentConfig
    hyper: Hyper
    protocols: list[str]
    targets: list[str] | None
    subgroups: list[str] | None
    output_dir: str


def _parse_schema(doc: dict) -> TableSchema:
    try:
        return TableSchema(
            feature_columns=tuple(doc["feature_columns"]),
            label_column=doc["label_column"],
            subgroup_column=doc["subgroup_column"],
            source_column=doc["source_column"],
        )
    except KeyError as exc:
        raise SchemaError(f"input.schema is missing key {exc.args[0]!r}") from None


def _parse_synth(doc: dict) -> tuple[SyntheticSpec, dict[str, int]]:
    try:
        sources = {}
        sizes = {}
        for token, body in doc["sources"].items():
            subs = {
                name: SubgroupSpec(
                    weight=sub["weight"],
                    base_rate=sub["base_rate"],
                    mean_0=tuple(sub["mean_0"]),
                    mean_1=tuple(sub["mean_1"]),
                    scale=sub.get("scale", 1.0),
                )
                for name, sub in body["subgroups"].items()
            }
            sources[token] = subs
            sizes[token] = int(body["size"])
        spec = SyntheticSpec(
            sources=sources, feature_dim=int(doc["feature_dim"]), seed=int(doc["seed"])
        )
        return spec, sizes
    except KeyError as exc:
        raise SchemaError(f"input.spec is missing key {exc.args[0]!r}") from None


def parse_config(path: str | Path) -> RunConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"config {path}: invalid JSON ({exc})") from None

    if "input" not in doc:
        raise SchemaError("config is missing 'input'")
    inp = doc["input"]
    mode = inp.get("mode")
    if mode not in ("csv", "synthetic"):
        raise SchemaError(f"input.mode must be 'csv' or 'synthetic', got {mode!r}")
    if mode == "csv":
        if "spec" in inp:
            raise SchemaError("exactly one input mode: csv config must not carry a spec")
        if not inp.get("paths"):
            raise SchemaError("csv input needs a non-empty 'paths' list")
        schema = _parse_schema(inp.get("schema") or {})
        spec, sizes = None, {}
        paths = list(inp["paths"])
    else:
        if "paths" in inp or "schema" in inp:
            raise SchemaError("exactly one input mode: synthetic config must not carry csv keys")
        spec, sizes = _parse_synth(inp.get("spec") or {})
        schema, paths = None, []

    exp_doc = dict(doc.get("experiment") or {})
    try:
        experiment = ExperimentConfig(**exp_doc)
    except TypeError as exc:
        raise SchemaError(f"experiment config: {exc}") from None
    try:
        hyper = Hyper(**dict(doc.get("model") or {}))
    except TypeError as exc:
        raise SchemaError(f"model config: {exc}") from None

    protocols = list(doc.get("protocols") or [])
    for proto in protocols:
        if proto not in PROTOCOLS:
            raise SchemaError(f"unknown protocol {proto!r}; expected one of {PROTOCOLS}")

    return RunConfig(
        input_mode=mode,
        csv_paths=paths,
        schema=schema,
        synth_spec=spec,
        synth_sizes=sizes,
        experiment=experiment,
        hyper=hyper,
        protocols=protocols,
        targets=doc.get("targets"),
        subgroups=doc.get("subgroups"),
        output_dir=doc.get("output_dir", "out"),
    )


def load_registry(config: RunConfig) -> SourceRegistry:
    if config.input_mode == "csv":
        parts = [load_csv(p, config.schema) for p in config.csv_paths]
        return parts[0] if len(parts) == 1 else merge_registries(parts)
    return generate_registry(config.synth_spec, config.synth_sizes)


def default_schema(feature_dim: int) -> TableSchema:
    return TableSchema(
        feature_columns=tuple(f"x{i}" for i in range(feature_dim)),
        label_column="label",
        subgroup_column="subgroup",
        source_column="source",
    )


def _out_dir(args, config: RunConfig) -> Path:
    out = Path(args.out if args.out else config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _apply_overrides(args, config: RunConfig) -> RunConfig:
    if getattr(args, "seed", None) is not None:
        config.experiment = replace(config.experiment, seed=args.seed)
    return config


def cmd_ingest(args) -> int:
    config = _apply_overrides(args, parse_config(args.config))
    registry = load_registry(config)
    print(format_summary(registry_summary(registry)))
    out = _out_dir(args, config)
    schema = config.schema or default_schema(registry.feature_dim)
    export_csv(registry, out / "registry.csv", schema)
    return EXIT_OK


def cmd_synth(args) -> int:
    config = _apply_overrides(args, parse_config(args.config))
    if config.input_mode != "synthetic":
        raise DomainError("synth requires a config with input.mode = 'synthetic'")
    registry = load_registry(config)
    print(format_summary(registry_summary(registry)))
    out = _out_dir(args, config)
    export_csv(registry, out / "synthetic.csv", default_schema(registry.feature_dim))
    return EXIT_OK


def cmd_run(args) -> int:
    config = _apply_overrides(args, parse_config(args.config))
    if not config.protocols:
        raise DomainError("config lists no protocols to run")
    registry = load_registry(config)
    targets = config.targets or list(registry.ordering)
    for t in targets:
        if t not in registry:
            raise DomainError(f"unknown target source {t!r}")
    subgroups = config.subgroups
    if subgroups is None:
        subgroups = sorted({
            tok for t in registry.ordering for tok in registry.get(t).subgroup_tokens()
        })
    out = _out_dir(args, config)
    extra = {"source_order": list(registry.ordering), "targets": targets}
    for protocol in config.protocols:
        records = run_grid(
            protocol, targets, registry, config.experiment,
            hyper=config.hyper, subgroups=subgroups, jobs=args.jobs,
        )
        rs = make_resultset(protocol, config.experiment, records, extra_config=extra)
        path = out / f"resultset_{protocol}.json"
        save_resultset(rs, path)
        print(f"wrote {path}")
    return EXIT_OK


def _outcome_doc(outcome: SelectionOutcome, subgroup: str, target: str | None) -> dict:
    return {
        "criterion": outcome.criterion,
        "subgroup": subgroup,
        "target": target,
        "chosen": outcome.chosen,
        "scores": outcome.scores,
        "notes": list(outcome.notes),
    }


def cmd_select(args) -> int:
    config = _apply_overrides(args, parse_config(args.config))
    registry = load_registry(config)
    cfg = config.experiment
    a = args.subgroup
    target = args.target

    candidates = registry
    if target is not None:
        if target not in registry:
            raise DomainError(f"unknown target source {target!r}")
        others = {t: registry.get(t) for t in registry.ordering if t != target}
        candidates = SourceRegistry(sources=others, ordering=tuple(others))

    if args.criterion == "max-ratio":
        outcome = select_max_ratio(candidates, a)
    elif args.criterion == "max-count":
        outcome = select_max_count(candidates, a)
    else:
        if target is None:
            raise DomainError(f"criterion {args.criterion} requires --target")
        data = registry.get(target)
        plan = fold_plans(data, cfg, target)[0]
        train = data.take(plan.train_idx)
        test_slice = subgroup_subset(data.take(plan.test_idx), a)
        if len(test_slice) == 0:
            raise DomainError(f"test draw has no samples with subgroup {a!r}")
        trainer = make_trainer(config.hyper, cfg.threshold)
        if args.criterion == "max-similarity":
            outcome = select_most_similar(test_slice, candidates, a, seed=cfg.seed)
        elif args.criterion == "min-disc-delta":
            outcome = select_min_disc_delta(
                train, candidates, test_slice, trainer,
                cap=cfg.n_added, seed=cfg.seed,
            )
        else:
            outcome = greedy_accuracy_step(
                train, candidates, test_slice, trainer,
                cap=cfg.n_added, seed=cfg.seed,
            )

    doc = _outcome_doc(outcome, a, target)
    print(json.dumps(doc, indent=2))
    if args.out:
        out = _out_dir(args, config)
        save_document(doc, out / f"selection_{outcome.criterion}_{a}.json")
    return EXIT_OK


def cmd_report(args) -> int:
    if not (args.heatmap or args.scatter or args.summary or args.pareto):
        raise DomainError("no report requested: pass --heatmap, --scatter, --summary or --pareto")
    out = Path(args.out or "out")
    out.mkdir(parents=True, exist_ok=True)
    for path in args.resultsets:
        rs = load_resultset(path)
        stem = Path(path).stem
        if args.heatmap:
            doc = emit_heatmap(rs, args.heatmap, args.subgroup or "overall")
            base = out / f"{stem}_heatmap_{args.heatmap}_{doc['subgroup']}"
            save_document(doc, base.with_suffix(".json"))
            heatmap_csv(doc, base.with_suffix(".csv"))
            print(f"wrote {base}.json")
        if args.scatter:
            doc = emit_scatter(rs, args.scatter[0], args.scatter[1])
            base = out / f"{stem}_scatter_{args.scatter[0]}_{args.scatter[1]}"
            save_document(doc, base.with_suffix(".json"))
            scatter_csv(doc, base.with_suffix(".csv"))
            print(f"wrote {base}.json")
        if args.summary:
            doc = summarize_bmw(rs, target=args.target)
            base = out / f"{stem}_summary_bmw"
            save_document(doc, base.with_suffix(".json"))
            bmw_csv(doc, base.with_suffix(".csv"))
            print(f"wrote {base}.json")
        if args.pareto:
            doc = emit_pareto(rs, args.pareto)
            base = out / f"{stem}_pareto_{args.pareto}"
            save_document(doc, base.with_suffix(".json"))
            pareto_csv(doc, base.with_suffix(".csv"))
            print(f"wrote {base}.json")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="fairadd", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="path to the JSON run config")
        p.add_argument("--out", help="output directory (overrides config output_dir)")
        p.add_argument("--seed", type=int, help="override the experiment seed")

    p_ingest = sub.add_parser("ingest", help="load sources and print a registry summary")
    common(p_ingest)
    p_ingest.set_defaults(func=cmd_ingest)

    p_synth = sub.add_parser("synth", help="generate a synthetic registry and export CSV")
    common(p_synth)
    p_synth.set_defaults(func=cmd_synth)

    p_run = sub.add_parser("run", help="run the configured experiment protocols")
    common(p_run)
    p_run.add_argument("--jobs", type=int, default=1, help="parallel worker count")
    p_run.set_defaults(func=cmd_run)

    p_select = sub.add_parser("select", help="score sources under a selection criterion")
    common(p_select)
    p_select.add_argument("--criterion", required=True, choices=CRITERION_FLAGS)
    p_select.add_argument("--subgroup", required=True, help="target subgroup token")
    p_select.add_argument("--target", help="target source (candidates exclude it)")
    p_select.set_defaults(func=cmd_select)

    p_report = sub.add_parser("report", help="emit documents from result sets")
    p_report.add_argument("resultsets", nargs="+", help="ResultSet JSON paths")
    p_report.add_argument("--out", help="output directory")
    p_report.add_argument("--heatmap", metavar="METRIC",
                          choices=("accuracy", "auc", "disc"))
    p_report.add_argument("--subgroup", help="subgroup for --heatmap (default overall)")
    p_report.add_argument("--scatter", nargs=2, metavar=("X", "Y"))
    p_report.add_argument("--summary", choices=("bmw",))
    p_report.add_argument("--pareto", metavar="SUBGROUP")
    p_report.add_argument("--target", help="target source for --summary")
    p_report.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, OSError, json.JSONDecodeError) as exc:
        print(f"fairadd: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
