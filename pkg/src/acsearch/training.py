"""Training loop: alternating critic / encoder updates with early stopping."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .model import LossWeights, composite_loss, forward, init_features


@dataclass
class TrainItem:
    """A prepared (candidate, query, target) training example."""

    sub: object
    query: object
    truth_local: np.ndarray
    truth_global: frozenset
    features: tuple


def make_item(sub, query, truth_members, model):
    """Target vector over the candidate; truth outside the candidate is
    dropped from the target (it is still charged against recall at eval)."""
    truth_local = np.zeros(sub.node_count)
    for v in truth_members:
        i = sub.global_to_local.get(v)
        if i is not None:
            truth_local[i] = 1.0
    features = init_features(sub, query, model.struct_dim, model.attr_dim)
    return TrainItem(sub, query, truth_local, frozenset(truth_members), features)


@dataclass
class TrainResult:
    loss_trace: list = field(default_factory=list)
    val_f1_trace: list = field(default_factory=list)
    best_epoch: int = 0
    stopped_epoch: int = 0


def _validation_f1(model, val_items, threshold):
    from .evaluation import f1_suite
    from .search import constrained_bfs

    truths, preds = [], []
    for item in val_items:
        scores, _, _, _ = forward(model, item.sub, item.query, "eval",
                                  features=item.features)
        members = constrained_bfs(
            item.sub, scores.values[:, 0],
            [item.sub.global_to_local[v] for v in item.query.nodes], threshold)
        preds.append({item.sub.local_to_global[i] for i in members})
        truths.append(item.truth_global)
    _, _, f1 = f1_suite(truths, preds)
    return f1


def train(model, items, weights=LossWeights(), epochs=300, lr=1e-3,
          lr_decay=0.5, lr_interval=100, patience=30, rng=None,
          val_items=None, val_threshold=0.5):
    """Optimize the model over prepared items.

    Each step first improves the critic on the embedding gap (gradient ascent
    followed by weight clipping), then descends the composite loss through
    the encoder only. Returns the per-epoch mean loss trace.
    """
    if not items:
        raise ValueError("empty training dataset")
    if rng is None:
        rng = np.random.default_rng(0)
    encoder_params = model.encoder_params()
    critic_params = model.critic_params()
    enc_adam = ad.AdamState(encoder_params, lr=lr, decay=lr_decay,
                            decay_interval=lr_interval)
    crit_adam = ad.AdamState(critic_params, lr=lr, decay=lr_decay,
                             decay_interval=lr_interval)
    result = TrainResult()
    best_f1 = -1.0
    best_snapshot = None
    stale = 0
    for epoch in range(1, epochs + 1):
        losses = []
        for item in items:
            total, l_b, l_w, l_m, _ = composite_loss(
                model, item.sub, item.query, item.truth_local, weights,
                mode="train", rng=rng, features=item.features)
            ad.zero_grads(model.all_params())
            ad.backward(l_w)
            for p in critic_params:
                if p.grad is not None:
                    p.grad = -p.grad  # ascend the critic's discrimination
            crit_adam.step()
            ad.clip_weights(critic_params, weights.clip)
            ad.zero_grads(model.all_params())
            ad.backward(total)
            ad.zero_grads(critic_params)
            enc_adam.step()
            losses.append(total.values[0, 0])
        result.loss_trace.append(float(np.mean(losses)))
        if val_items:
            f1 = _validation_f1(model, val_items, val_threshold)
            result.val_f1_trace.append(f1)
            if f1 > best_f1:
                best_f1 = f1
                result.best_epoch = epoch
                best_snapshot = {n: p.values.copy() for n, p in model.params.items()}
                stale = 0
            else:
                stale += 1
                if stale >= patience:
                    break
        result.stopped_epoch = epoch
    if best_snapshot is not None:
        for n, p in model.params.items():
            p.values[...] = best_snapshot[n]
    return result
