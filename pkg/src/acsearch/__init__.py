"""Attributed community search: modularity-guided candidate extraction plus
a trainable consistency-aware scorer."""

from .extraction import ExtractionConfig, Query, extract
from .graph import (
    AttributedGraph,
    BipartiteGraph,
    CandidateSubgraph,
    Community,
    build_bipartite,
    induced_subgraph,
    ingest,
    k_hop_frontier,
)
from .modularity import (
    ModularityParams,
    bipartite_modularity,
    classical_modularity,
    density_modularity,
    density_sketch_modularity,
)

__all__ = [
    "AttributedGraph",
    "BipartiteGraph",
    "CandidateSubgraph",
    "Community",
    "ExtractionConfig",
    "ModularityParams",
    "Query",
    "bipartite_modularity",
    "build_bipartite",
    "classical_modularity",
    "density_modularity",
    "density_sketch_modularity",
    "extract",
    "induced_subgraph",
    "ingest",
    "k_hop_frontier",
]
