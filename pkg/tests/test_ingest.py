import numpy as np
import pytest

from fairadd.data_model import SourceRegistry
from fairadd.errors import DomainError, ParseError, SchemaError
from fairadd.ingest import (
    TableSchema,
    export_csv,
    load_csv,
    merge_registries,
    registry_summary,
)
from fairadd.synthgen import SubgroupSpec, SyntheticSpec, generate_registry

from conftest import make_dataset

SCHEMA = TableSchema(
    feature_columns=("x0", "x1"),
    label_column="label",
    subgroup_column="subgroup",
    source_column="source",
)


def write_csv(tmp_path, rows, header="x0,x1,label,subgroup,source"):
    path = tmp_path / "data.csv"
    path.write_text("\n".join([header] + rows) + "\n")
    return path


class TestLoadCsv:
    def test_sources_split_and_sized(self, tmp_path):
        path = write_csv(tmp_path, [
            "0.5,1.0,1,W,A",
            "0.25,2.0,0,B,A",
            "1.5,3.0,1,W,B",
        ])
        reg = load_csv(path, SCHEMA)
        assert reg.ordering == ("A", "B")
        assert len(reg.get("A")) == 2 and len(reg.get("B")) == 1

    def test_nonbinary_label_names_row(self, tmp_path):
        path = write_csv(tmp_path, ["0.5,1.0,2,W,A"])
        with pytest.raises(ParseError, match="row 2"):
            load_csv(path, SCHEMA)

    def test_missing_column_named(self, tmp_path):
        path = write_csv(tmp_path, ["0.5,1,W,A"], header="x0,label,subgroup,source")
        with pytest.raises(SchemaError, match="x1"):
            load_csv(path, SCHEMA)

    def test_non_numeric_feature_rejected(self, tmp_path):
        path = write_csv(tmp_path, ["0.5,1.0,1,W,A", "oops,2.0,0,B,A"])
        with pytest.raises(ParseError, match="row 3"):
            load_csv(path, SCHEMA)

    def test_non_finite_feature_rejected(self, tmp_path):
        path = write_csv(tmp_path, ["inf,1.0,1,W,A"])
        with pytest.raises(ParseError, match="row 2"):
            load_csv(path, SCHEMA)

    def test_deterministic(self, tmp_path):
        path = write_csv(tmp_path, ["0.5,1.0,1,W,A", "0.25,2.0,0,B,B"])
        assert load_csv(path, SCHEMA) == load_csv(path, SCHEMA)


class TestRoundTrip:
    def test_synthetic_registry_roundtrips(self, tmp_path):
        spec = SyntheticSpec(
            sources={
                "A": {"a": SubgroupSpec(0.6, 0.3, (0.0, 0.0), (1.0, 1.0)),
                      "b": SubgroupSpec(0.4, 0.7, (0.5, -0.5), (2.0, 0.25))},
                "B": {"a": SubgroupSpec(1.0, 0.5, (0.1, 0.2), (0.3, 0.4))},
            },
            feature_dim=2, seed=13,
        )
        reg = generate_registry(spec, {"A": 200, "B": 100})
        path = tmp_path / "roundtrip.csv"
        export_csv(reg, path, SCHEMA)
        back = load_csv(path, SCHEMA)
        assert back == reg


class TestMerge:
    def test_duplicate_tokens_rejected(self, tmp_path):
        path = write_csv(tmp_path, ["0.5,1.0,1,W,A"])
        reg = load_csv(path, SCHEMA)
        with pytest.raises(DomainError):
            merge_registries([reg, reg])

    def test_merge_keeps_order(self, tmp_path):
        p1 = write_csv(tmp_path, ["0.5,1.0,1,W,A"])
        reg1 = load_csv(p1, SCHEMA)
        p2 = tmp_path / "second.csv"
        p2.write_text("x0,x1,label,subgroup,source\n1.0,2.0,0,B,B\n")
        reg2 = load_csv(p2, SCHEMA)
        merged = merge_registries([reg1, reg2])
        assert merged.ordering == ("A", "B")


class TestSummary:
    def test_eicu_shaped_row(self):
        # Hospital 443 shape: Black count 1352 of 2580 encounters
        subgroups = ["Black"] * 1352 + ["White"] * 1119 + ["Other"] * 83 + ["Asian"] * 26
        labels = [i % 2 for i in range(len(subgroups))]
        reg = SourceRegistry(sources={"443": make_dataset(labels, subgroups, source="443")})
        rows = registry_summary(reg)
        black = next(r for r in rows if r["subgroup"] == "Black")
        assert black["count"] == 1352
        assert black["ratio"] == pytest.approx(1352 / 2580, abs=1e-12)
        assert round(black["ratio"], 3) == 0.524

    def test_counts_sum_to_total(self, small_registry):
        rows = registry_summary(small_registry)
        for token in small_registry.ordering:
            per_sub = [r["count"] for r in rows
                       if r["source"] == token and r["subgroup"] is not None]
            total = next(r["count"] for r in rows
                         if r["source"] == token and r["subgroup"] is None)
            assert sum(per_sub) == total == len(small_registry.get(token))

    def test_single_source_single_subgroup(self):
        reg = SourceRegistry(sources={"S": make_dataset([0, 1], ["a", "a"], source="S")})
        rows = registry_summary(reg)
        assert rows[0]["ratio"] == 1.0 and rows[0]["count"] == 2
