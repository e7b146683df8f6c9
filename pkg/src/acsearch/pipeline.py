"""End-to-end glue: dataset preparation, prediction and evaluation."""

from __future__ import annotations

import numpy as np

from .evaluation import avg_degree, cpj, f1_suite
from .extraction import ExtractionConfig, extract
from .graph import build_bipartite
from .model import CommunityModel, forward
from .search import ThresholdPolicy, constrained_bfs, select_threshold
from .training import make_item, train


def extract_pairs(g, bg, pairs, tau):
    """Run candidate extraction for each (query, truth) pair."""
    cfg = ExtractionConfig(tau=tau)
    return [(extract(g, q, cfg, bg=bg).candidate, q, truth) for q, truth in pairs]


def build_model_and_items(g, extracted_train, extracted_val, latent_dim,
                          layers, dropout_rate, clip, rng):
    """Size the model from the extracted candidates and prepare train items."""
    all_subs = [sub for sub, _, _ in extracted_train + extracted_val]
    struct_dim = max(sub.node_count for sub in all_subs)
    model = CommunityModel(struct_dim, len(g.attr_vocab), latent_dim, layers,
                           dropout_rate, clip, rng)
    items = [make_item(sub, q, truth, model) for sub, q, truth in extracted_train]
    val_items = [make_item(sub, q, truth, model) for sub, q, truth in extracted_val]
    return model, items, val_items


def score_items(model, items):
    """Eval-mode scores for threshold selection."""
    scored = []
    for item in items:
        scores, _, _, _ = forward(model, item.sub, item.query, "eval",
                                  features=item.features)
        query_local = [item.sub.global_to_local[v] for v in item.query.nodes]
        scored.append((item.sub, scores.values[:, 0], query_local,
                       item.truth_global))
    return scored


def fit(g, train_pairs, val_pairs, *, tau=0.8, latent_dim=128, layers=2,
        dropout_rate=0.45, weights=None, epochs=300, lr=1e-3, lr_decay=0.5,
        lr_interval=100, patience=30, seed=0, policy=ThresholdPolicy()):
    """Train a model on (query, truth) pairs and pick the score threshold.

    Returns (model, train_result, threshold).
    """
    from .model import LossWeights

    if weights is None:
        weights = LossWeights()
    bg = build_bipartite(g)
    extracted_train = extract_pairs(g, bg, train_pairs, tau)
    extracted_val = extract_pairs(g, bg, val_pairs, tau)
    rng = np.random.default_rng(seed)
    model, items, val_items = build_model_and_items(
        g, extracted_train, extracted_val, latent_dim, layers, dropout_rate,
        weights.clip, rng)
    result = train(model, items, weights, epochs=epochs, lr=lr,
                   lr_decay=lr_decay, lr_interval=lr_interval,
                   patience=patience, rng=rng, val_items=val_items)
    threshold = select_threshold(score_items(model, val_items), policy)
    return model, result, threshold


def predict(model, g, query, tau, threshold, bg=None):
    """Extract, score and materialize the community for one query.

    Returns (member node-id set, {node id: score}, ExtractionResult).
    """
    cfg = ExtractionConfig(tau=tau)
    res = extract(g, query, cfg, bg=bg)
    sub = res.candidate
    scores, _, _, _ = forward(model, sub, query, "eval")
    vals = scores.values[:, 0]
    query_local = [sub.global_to_local[v] for v in query.nodes]
    members = constrained_bfs(sub, vals, query_local, threshold)
    community = {sub.local_to_global[i] for i in members}
    score_map = {sub.local_to_global[i]: float(vals[i]) for i in range(sub.node_count)}
    return community, score_map, res


def evaluate(model, g, pairs, tau, threshold, bg=None):
    """Metrics over (query, truth) pairs; returns (report dict, per-query rows)."""
    if bg is None:
        bg = build_bipartite(g)
    truths, preds, rows = [], [], []
    for idx, (query, truth) in enumerate(pairs):
        community, _, _ = predict(model, g, query, tau, threshold, bg=bg)
        truths.append(set(truth))
        preds.append(community)
        p, r, f1 = f1_suite([set(truth)], [community])
        rows.append({
            "query_index": idx,
            "query_nodes": " ".join(g.node_tokens[v] for v in query.nodes),
            "truth_size": len(truth),
            "pred_size": len(community),
            "precision": p,
            "recall": r,
            "f1": f1,
        })
    pre, rec, f1 = f1_suite(truths, preds)
    report = {
        "precision": pre,
        "recall": rec,
        "f1": f1,
        "avg_degree": avg_degree(preds, g),
        "cpj": cpj(preds, g),
    }
    return report, rows
