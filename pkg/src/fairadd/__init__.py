"""fairadd: audit how multi-source data addition shifts subgroup performance."""

__version__ = "0.1.0"

from .data_model import (
    AdditionVector,
    DataSet,
    LabeledSample,
    SourceRegistry,
    compose,
    concat,
    delta_ratio,
    draw_fixed,
    draw_indices,
    stratified_kfold,
    subgroup_ratio,
    subgroup_subset,
)
from .errors import DomainError, ParseError, SchemaError
from .ingest import TableSchema, export_csv, load_csv, merge_registries, registry_summary
from .synthgen import SubgroupSpec, SyntheticSpec, generate_registry, generate_source

__all__ = [
    "AdditionVector", "DataSet", "LabeledSample", "SourceRegistry",
    "compose", "concat", "delta_ratio", "draw_fixed", "draw_indices",
    "stratified_kfold", "subgroup_ratio", "subgroup_subset",
    "DomainError", "ParseError", "SchemaError",
    "TableSchema", "export_csv", "load_csv", "merge_registries", "registry_summary",
    "SubgroupSpec", "SyntheticSpec", "generate_registry", "generate_source",
    "__version__",
]
