"""Pin-level circuit graphs, GNN surrogates and conditional flow heads."""

from pinflow._core import (
    Circuit,
    Component,
    ComponentKind,
    CounterRng,
    FeatureSchema,
    Flow,
    GraphStore,
    PinGraph,
    PinflowError,
    TrainedModel,
    circuit_to_graph,
    crc64,
    emit_netlist,
    generate_synthetic_corpus,
    ingest,
    load_model,
    load_schema,
    load_store,
    metrics,
    parse_netlist,
    parse_si_number,
    save_store,
    train,
    validate,
)

__all__ = [
    "Circuit",
    "Component",
    "ComponentKind",
    "CounterRng",
    "FeatureSchema",
    "Flow",
    "GraphStore",
    "PinGraph",
    "PinflowError",
    "TrainedModel",
    "circuit_to_graph",
    "crc64",
    "emit_netlist",
    "generate_synthetic_corpus",
    "ingest",
    "load_model",
    "load_schema",
    "load_store",
    "metrics",
    "parse_netlist",
    "parse_si_number",
    "save_store",
    "train",
    "validate",
]
