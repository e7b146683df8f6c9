"""Modularity measures for candidate subgraph scoring.

Four variants are provided: the classical normalization by edge count, the
density variant normalized by community size, a sketch family with a
granularity exponent tau interpolating between the two, and a bipartite
variant for node-attribute incidence graphs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .graph import Community


@dataclass(frozen=True)
class ModularityParams:
    tau: float = 0.8

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError("tau must be > 0")


def _counts(g, c):
    if g.edge_count == 0:
        raise ValueError("graph has no edges")
    if not c.members:
        raise ValueError("empty community")
    return c.internal_edges(g), c.degree_sum(g)


def classical_modularity(g, c):
    e_c, d_c = _counts(g, c)
    m = g.edge_count
    return (2.0 * e_c - d_c * d_c / (2.0 * m)) / (2.0 * m)


def density_modularity(g, c):
    e_c, d_c = _counts(g, c)
    m = g.edge_count
    return (2.0 * e_c - d_c * d_c / (2.0 * m)) / (2.0 * len(c.members))


def density_sketch_modularity(g, c, params=ModularityParams()):
    e_c, d_c = _counts(g, c)
    m = g.edge_count
    return (2.0 * e_c - d_c * d_c / (2.0 * m)) / (2.0 * len(c.members) ** params.tau)


def bipartite_modularity(bg, u_set, l_set):
    """Modularity of a bipartite community given by its U-side and L-side sets."""
    if bg.edge_count == 0:
        raise ValueError("bipartite graph has no edges")
    if not u_set and not l_set:
        raise ValueError("empty bipartite community")
    m = bg.edge_count
    l_set = set(l_set)
    e_c = sum(1 for u in u_set for l in bg.u_adj[u] if l in l_set)
    d_u = sum(len(bg.u_adj[u]) for u in u_set)
    d_l = sum(len(bg.l_adj[l]) for l in l_set)
    return (2.0 * e_c - d_u * d_l / m) / m


def _connected(g, nodes):
    nodes = set(nodes)
    if not nodes:
        return False
    start = next(iter(nodes))
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for u in g.neighbors(v):
            if u in nodes and u not in seen:
                seen.add(u)
                stack.append(u)
    return seen == nodes


def _connected_subsets(g):
    nodes = range(g.node_count)
    for r in range(1, g.node_count + 1):
        for combo in itertools.combinations(nodes, r):
            if _connected(g, combo):
                yield frozenset(combo)


def check_free_rider_implication(g, tau):
    """Exhaustively test that a sketch-modularity free-rider case implies a
    classical-modularity free-rider case on the same community pair.

    Enumerates pairs (C, C*) of connected communities where the identified
    community C has nonnegative sketch modularity (an identified community is
    at least as cohesive as random; with a negative baseline the implication
    provably fails on small dense graphs).
    """
    if g.node_count > 10:
        raise ValueError("graph too large for exhaustive enumeration")
    params = ModularityParams(tau)
    subsets = list(_connected_subsets(g))
    dsm = {s: density_sketch_modularity(g, Community(s), params) for s in subsets}
    for c in subsets:
        if dsm[c] < 0:
            continue
        for c_star in subsets:
            union = Community(c | c_star)
            if density_sketch_modularity(g, union, params) >= dsm[c]:
                if classical_modularity(g, union) < classical_modularity(g, Community(c)) - 1e-12:
                    return False
    return True


def check_resolution_limit_implication(g, tau):
    """Resolution-limit analogue of check_free_rider_implication.

    Pairs are disjoint connected communities C, C' whose union induces a
    connected subgraph (the community constraint is connectedness); C is
    again restricted to nonnegative sketch modularity.
    """
    if g.node_count > 10:
        raise ValueError("graph too large for exhaustive enumeration")
    params = ModularityParams(tau)
    subsets = list(_connected_subsets(g))
    dsm = {s: density_sketch_modularity(g, Community(s), params) for s in subsets}
    for c in subsets:
        if dsm[c] < 0:
            continue
        for c_other in subsets:
            if c & c_other:
                continue
            union = c | c_other
            if not _connected(g, union):
                continue
            if density_sketch_modularity(g, Community(union), params) >= dsm[c]:
                if classical_modularity(g, Community(union)) < classical_modularity(g, Community(c)) - 1e-12:
                    return False
    return True
