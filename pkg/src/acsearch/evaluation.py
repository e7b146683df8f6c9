"""Query generation, community splitting and quality metrics."""

from __future__ import annotations

import warnings
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .extraction import Query


@dataclass(frozen=True)
class QuerySet:
    pairs: tuple  # (Query, frozenset of truth node ids)
    tag: str = ""


def split_communities(communities, rng, ratios=(5, 1, 4)):
    """Disjoint train/val/test partition by community, ~5:1:4.

    Datasets with fewer than 10 communities are not split: all three groups
    share every community (with a warning).
    """
    communities = list(communities)
    if not communities:
        raise ValueError("no communities to split")
    if len(communities) < 10:
        warnings.warn(
            f"only {len(communities)} communities; train/val/test share all")
        return list(communities), list(communities), list(communities)
    order = list(rng.permutation(len(communities)))
    total = len(communities)
    ratio_sum = sum(ratios)
    # largest-remainder rounding, preserving the total
    raw = [total * r / ratio_sum for r in ratios]
    sizes = [int(x) for x in raw]
    rem = total - sum(sizes)
    for i in sorted(range(3), key=lambda i: raw[i] - sizes[i], reverse=True)[:rem]:
        sizes[i] += 1
    out = []
    start = 0
    for s in sizes:
        out.append([communities[i] for i in order[start:start + s]])
        start += s
    return out[0], out[1], out[2]


def _afc_pool(g, community):
    counts = Counter()
    for v in community:
        for a in g.attrs[v]:
            counts[a] += 1
    # top 5 by frequency, ties by attribute id for determinism
    return [a for a, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:5]]


def gen_queries(communities, n, mode, rng, g):
    """Sample n (query, truth community) pairs.

    Query nodes: 1-3 members sampled uniformly from a uniformly chosen
    community. Attributes: EmA -> empty; AFC -> one of the community's 5 most
    frequent attributes; AFN -> the query nodes' own attributes (union,
    capped at 3 by uniform sampling).
    """
    communities = [sorted(c) for c in communities]
    if not communities:
        raise ValueError("no communities")
    if mode not in ("EmA", "AFC", "AFN"):
        raise ValueError(f"unknown query mode {mode!r}")
    pairs = []
    for _ in range(n):
        comm = communities[rng.integers(len(communities))]
        k = int(rng.integers(1, min(3, len(comm)) + 1))
        nodes = [comm[i] for i in rng.choice(len(comm), size=k, replace=False)]
        attrs = ()
        tag = mode
        if mode == "AFC":
            pool = _afc_pool(g, comm)
            if pool:
                attrs = (pool[rng.integers(len(pool))],)
            else:
                warnings.warn("attribute-free community; AFC query falls back to EmA")
                tag = "EmA"
        elif mode == "AFN":
            union = sorted(set().union(*(g.attrs[v] for v in nodes)))
            if len(union) > 3:
                union = [union[i] for i in rng.choice(len(union), size=3, replace=False)]
            attrs = tuple(union)
        pairs.append((Query(nodes, attrs, tag), frozenset(comm)))
    return QuerySet(tuple(pairs), mode)


def f1_suite(truths, predictions):
    """Micro-averaged precision/recall/F1 over node-set sequences."""
    if len(truths) != len(predictions):
        raise ValueError("truth/prediction length mismatch")
    inter = sum(len(set(t) & set(p)) for t, p in zip(truths, predictions))
    pred_total = sum(len(p) for p in predictions)
    truth_total = sum(len(t) for t in truths)
    pre = inter / pred_total if pred_total else 0.0
    rec = inter / truth_total if truth_total else 0.0
    f1 = 2 * pre * rec / (pre + rec) if pre + rec else 0.0
    return pre, rec, f1


def avg_degree(predictions, g):
    """Mean over communities of the mean member degree inside the community."""
    if not predictions:
        raise ValueError("no predictions")
    vals = []
    for comm in predictions:
        comm = set(comm)
        if not comm:
            warnings.warn("empty predicted community contributes 0 to Avg.d")
            vals.append(0.0)
            continue
        deg = sum(sum(1 for u in g.neighbors(v) if u in comm) for v in comm)
        vals.append(deg / len(comm))
    return float(np.mean(vals))


def cpj(predictions, g):
    """Mean pairwise attribute Jaccard within each community (all ordered
    pairs including u = v, divided by |C|^2); empty-vs-empty counts 0."""
    if not predictions:
        raise ValueError("no predictions")
    vals = []
    for comm in predictions:
        comm = list(comm)
        if not comm:
            vals.append(0.0)
            continue
        total = 0.0
        for u in comm:
            for v in comm:
                fu, fv = g.attrs[u], g.attrs[v]
                union = len(fu | fv)
                if union:
                    total += len(fu & fv) / union
        vals.append(total / len(comm) ** 2)
    return float(np.mean(vals))
