"""Community materialization from per-node scores."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ThresholdPolicy:
    grid: tuple = tuple(round(0.05 * i, 2) for i in range(1, 20))

    def __post_init__(self):
        if not self.grid:
            raise ValueError("threshold grid must be nonempty")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError("threshold grid must be strictly ascending")


def constrained_bfs(sub, scores, query_nodes, threshold):
    """Above-threshold nodes reachable from the query through above-threshold
    paths. Query nodes anchor the community regardless of their own score."""
    query_nodes = set(query_nodes)
    allowed = {i for i in range(sub.node_count) if scores[i] > threshold}
    allowed |= query_nodes
    seen = set(query_nodes)
    stack = list(query_nodes)
    while stack:
        v = stack.pop()
        for u in sub.neighbors(v):
            if u in allowed and u not in seen:
                seen.add(u)
                stack.append(u)
    return seen


def select_threshold(scored_items, policy=ThresholdPolicy()):
    """Grid threshold maximizing micro-averaged F1 over validation items.

    scored_items: sequence of (sub, scores, query_local_ids, truth_global_set).
    Ties break toward the lowest threshold.
    """
    from .evaluation import f1_suite

    if not scored_items:
        raise ValueError("empty validation set")
    best_t = policy.grid[0]
    best_f1 = -1.0
    for t in policy.grid:
        truths, preds = [], []
        for sub, scores, query_local, truth in scored_items:
            members = constrained_bfs(sub, scores, query_local, t)
            preds.append({sub.local_to_global[i] for i in members})
            truths.append(set(truth))
        _, _, f1 = f1_suite(truths, preds)
        if f1 > best_f1:
            best_f1 = f1
            best_t = t
    return best_t
