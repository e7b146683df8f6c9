"""Attributed graph storage, neighborhood queries and bipartite construction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class GraphParseError(ValueError):
    """Raised when an input line cannot be parsed."""

    def __init__(self, line_no, message):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class AttributedGraph:
    """Immutable undirected graph with per-node attribute sets.

    Nodes carry dense integer ids assigned in first-appearance order.
    Self-loops and duplicate edges are dropped during ingestion so the
    modularity formulas operate on a simple graph.
    """

    def __init__(self, adj, attrs, attr_vocab, node_labels, node_tokens):
        self.adj = tuple(tuple(sorted(ns)) for ns in adj)
        self.attrs = tuple(frozenset(a) for a in attrs)
        self.attr_vocab = dict(attr_vocab)
        self.node_labels = dict(node_labels)
        self.node_tokens = tuple(node_tokens)
        self.edge_count = sum(len(ns) for ns in self.adj) // 2

    @property
    def node_count(self):
        return len(self.adj)

    def neighbors(self, v):
        return self.adj[v]

    def degree(self, v):
        return len(self.adj[v])

    def edges(self):
        for u, ns in enumerate(self.adj):
            for v in ns:
                if u < v:
                    yield u, v


def _parse_edge_lines(edge_lines):
    for line_no, raw in enumerate(edge_lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphParseError(line_no, f"expected two node tokens, got {len(parts)}")
        yield parts[0], parts[1]


def _parse_attr_lines(attr_lines):
    for line_no, raw in enumerate(attr_lines, start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise GraphParseError(line_no, "expected node<TAB>attr1,attr2,...")
        attrs = [a for a in parts[1].strip().split(",") if a]
        yield parts[0].strip(), attrs


def ingest(edge_lines, attr_lines=()):
    """Build an AttributedGraph from edge and attribute line sequences.

    Dense node ids follow first appearance across the edge lines, then the
    attribute lines (a node seen only there becomes an isolated node).
    """
    node_labels = {}
    node_tokens = []

    def node_id(token):
        if token not in node_labels:
            node_labels[token] = len(node_tokens)
            node_tokens.append(token)
        return node_labels[token]

    edge_set = set()
    for a, b in _parse_edge_lines(edge_lines):
        u, v = node_id(a), node_id(b)
        if u == v:
            continue
        edge_set.add((min(u, v), max(u, v)))

    attr_vocab = {}
    node_attrs = {}
    for token, attrs in _parse_attr_lines(attr_lines):
        v = node_id(token)
        ids = node_attrs.setdefault(v, set())
        for a in attrs:
            if a not in attr_vocab:
                attr_vocab[a] = len(attr_vocab)
            ids.add(attr_vocab[a])

    n = len(node_tokens)
    adj = [[] for _ in range(n)]
    for u, v in edge_set:
        adj[u].append(v)
        adj[v].append(u)
    attrs = [node_attrs.get(v, set()) for v in range(n)]
    return AttributedGraph(adj, attrs, attr_vocab, node_labels, node_tokens)


class BipartiteGraph:
    """Node-attribute incidence graph: graph nodes (U side) vs attributes (L side)."""

    def __init__(self, u_adj, l_adj):
        self.u_adj = tuple(tuple(sorted(ns)) for ns in u_adj)
        self.l_adj = tuple(tuple(sorted(ns)) for ns in l_adj)
        self.edge_count = sum(len(ns) for ns in self.u_adj)

    @property
    def u_count(self):
        return len(self.u_adj)

    @property
    def l_count(self):
        return len(self.l_adj)


def build_bipartite(g):
    """Construct the node-attribute bipartite graph of g."""
    l_adj = [[] for _ in range(len(g.attr_vocab))]
    u_adj = []
    for v in range(g.node_count):
        links = sorted(g.attrs[v])
        u_adj.append(links)
        for a in links:
            l_adj[a].append(v)
    return BipartiteGraph(u_adj, l_adj)


@dataclass(frozen=True)
class Community:
    """A node set over a host graph, with derived edge/degree counts."""

    members: frozenset

    def __init__(self, members):
        object.__setattr__(self, "members", frozenset(members))

    def internal_edges(self, g):
        total = 0
        for v in self.members:
            for u in g.neighbors(v):
                if u in self.members:
                    total += 1
        return total // 2

    def degree_sum(self, g):
        return sum(g.degree(v) for v in self.members)


def k_hop_frontier(g, seeds, k):
    """All nodes at hop-distance <= k from any seed (seeds included)."""
    seeds = set(seeds)
    for s in seeds:
        if not 0 <= s < g.node_count:
            raise ValueError(f"unknown seed id {s}")
    if k < 0:
        raise ValueError("k must be >= 0")
    seen = set(seeds)
    frontier = set(seeds)
    for _ in range(k):
        nxt = set()
        for v in frontier:
            for u in g.neighbors(v):
                if u not in seen:
                    nxt.add(u)
        if not nxt:
            break
        seen |= nxt
        frontier = nxt
    return seen


@dataclass(frozen=True)
class CandidateSubgraph:
    """Induced subgraph with local<->global id maps and restricted attributes."""

    adj: tuple
    attrs: tuple
    local_to_global: tuple
    global_to_local: dict = field(hash=False)

    @property
    def node_count(self):
        return len(self.adj)

    def neighbors(self, v):
        return self.adj[v]

    def degree(self, v):
        return len(self.adj[v])

    @property
    def edge_count(self):
        return sum(len(ns) for ns in self.adj) // 2

    def adjacency_matrix(self):
        n = self.node_count
        a = np.zeros((n, n))
        for u, ns in enumerate(self.adj):
            for v in ns:
                a[u, v] = 1.0
        return a

    def local_attr_index(self):
        """Candidate-local attribute vocabulary: global attr id -> dense column."""
        seen = sorted(set().union(*self.attrs)) if self.attrs else []
        return {a: i for i, a in enumerate(seen)}


def induced_subgraph(g, nodes):
    """Induced subgraph of g over the given node set."""
    if not nodes:
        raise ValueError("empty node set")
    ordered = sorted(nodes)
    g2l = {v: i for i, v in enumerate(ordered)}
    adj = []
    attrs = []
    for v in ordered:
        adj.append(tuple(sorted(g2l[u] for u in g.neighbors(v) if u in g2l)))
        attrs.append(g.attrs[v])
    return CandidateSubgraph(tuple(adj), tuple(attrs), tuple(ordered), g2l)
