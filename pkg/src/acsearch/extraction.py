"""Adaptive candidate subgraph extraction.

Expands hop by hop from the query nodes, keeping every hop ball that improves
the density sketch modularity, and runs the analogous expansion on the
node-attribute bipartite graph scored by bipartite modularity. The union of
both branches (plus the query nodes) induces the candidate subgraph.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

from .graph import Community, induced_subgraph
from .modularity import (
    ModularityParams,
    bipartite_modularity,
    density_sketch_modularity,
)


@dataclass(frozen=True)
class Query:
    nodes: tuple
    attrs: tuple = ()
    mode: str = ""

    def __init__(self, nodes, attrs=(), mode=""):
        object.__setattr__(self, "nodes", tuple(sorted(set(nodes))))
        object.__setattr__(self, "attrs", tuple(sorted(set(attrs))))
        object.__setattr__(self, "mode", mode)


@dataclass(frozen=True)
class ExtractionConfig:
    tau: float = 0.8
    max_hops: int | None = None

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be > 0")
        if self.max_hops is not None and self.max_hops < 1:
            raise ValueError("max_hops must be >= 1")


@dataclass(frozen=True)
class ExtractionResult:
    candidate: object
    structure_nodes: frozenset
    attribute_nodes: frozenset
    best_struct_hop: int
    best_attr_hop: int
    structure_trace: tuple
    attribute_trace: tuple


def structure_prune(g, query_nodes, cfg=ExtractionConfig()):
    """Hop-by-hop expansion from the query nodes scored by sketch modularity.

    Returns the union of all improving hop balls plus the query nodes, the
    best hop index, and the (hop, modularity) trace.
    """
    query_nodes = set(query_nodes)
    if not query_nodes:
        raise ValueError("query nodes required")
    for v in query_nodes:
        if not 0 <= v < g.node_count:
            raise ValueError(f"query node {v} not in graph")

    params = ModularityParams(cfg.tau)
    selected = set(query_nodes)
    ball = set(query_nodes)
    best = float("-inf")
    best_hop = 0
    trace = []
    hop = 0
    while len(ball) < g.node_count:
        if cfg.max_hops is not None and hop >= cfg.max_hops:
            break
        grown = set(ball)
        for v in ball:
            grown.update(g.neighbors(v))
        if grown == ball:
            break  # frontier fixpoint on a disconnected graph
        ball = grown
        hop += 1
        mod = density_sketch_modularity(g, Community(ball), params)
        trace.append((hop, mod))
        if mod > best:
            best = mod
            best_hop = hop
            selected |= ball
    return selected, best_hop, tuple(trace)


def attribute_prune(g, bg, query_attrs, cfg=ExtractionConfig()):
    """Bipartite hop expansion from the query attribute nodes.

    Only U-side (graph node) members of improving hop balls are returned;
    query attributes absent from the vocabulary are skipped with a warning.
    """
    seeds = set()
    for a in query_attrs:
        if 0 <= a < bg.l_count:
            seeds.add(a)
        else:
            warnings.warn(f"query attribute {a} not in vocabulary, skipped")
    if not seeds:
        return set(), 0, ()

    selected = set()
    u_ball = set()
    l_ball = set(seeds)
    best = float("-inf")
    best_hop = 0
    trace = []
    hop = 0
    total = bg.u_count + bg.l_count
    while len(u_ball) + len(l_ball) < total:
        if cfg.max_hops is not None and hop >= cfg.max_hops:
            break
        new_u = set(u_ball)
        for l in l_ball:
            new_u.update(bg.l_adj[l])
        new_l = set(l_ball)
        for u in u_ball:
            new_l.update(bg.u_adj[u])
        if new_u == u_ball and new_l == l_ball:
            break
        u_ball, l_ball = new_u, new_l
        hop += 1
        mod = bipartite_modularity(bg, u_ball, l_ball)
        trace.append((hop, mod))
        if mod > best:
            best = mod
            best_hop = hop
            selected |= u_ball
    return selected, best_hop, tuple(trace)


def extract(g, query, cfg=ExtractionConfig(), bg=None):
    """Run both pruning branches and induce the candidate subgraph."""
    struct_nodes, s_hop, s_trace = structure_prune(g, query.nodes, cfg)
    if query.attrs:
        if bg is None:
            from .graph import build_bipartite

            bg = build_bipartite(g)
        attr_nodes, a_hop, a_trace = attribute_prune(g, bg, query.attrs, cfg)
    else:
        attr_nodes, a_hop, a_trace = set(), 0, ()
    v_sub = set(query.nodes) | struct_nodes | attr_nodes
    candidate = induced_subgraph(g, v_sub)
    return ExtractionResult(
        candidate=candidate,
        structure_nodes=frozenset(struct_nodes),
        attribute_nodes=frozenset(attr_nodes),
        best_struct_hop=s_hop,
        best_attr_hop=a_hop,
        structure_trace=s_trace,
        attribute_trace=a_trace,
    )
