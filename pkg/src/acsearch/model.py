"""Consistency-aware community scorer.

Two branches (structure / attribute) each run a cross-attention step for the
query row and a GIN step for the graph nodes, per layer. Branch outputs are
concatenated with broadcast query rows and scored per node by a final MLP
with a sigmoid. Training combines binary cross entropy with a clipped-critic
Wasserstein gap between the branch embeddings and a Frobenius penalty tying
the score-feature Gram matrix to the adjacency matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor


@dataclass(frozen=True)
class LossWeights:
    alpha: float = 0.1
    beta: float = 0.1
    clip: float = 0.01

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or self.clip <= 0:
            raise ValueError("loss weights must be nonnegative, clip positive")


def _glorot(rng, rows, cols):
    limit = math.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))


class CommunityModel:
    """All learnable tensors for the K-layer dual-branch encoder and critic."""

    def __init__(self, struct_dim, attr_dim, latent_dim=128, layers=2,
                 dropout_rate=0.45, clip=0.01, rng=None):
        if rng is None:
            rng = np.random.default_rng(0)
        self.struct_dim = struct_dim
        self.attr_dim = max(1, attr_dim)
        self.latent_dim = latent_dim
        self.layers = layers
        self.dropout_rate = dropout_rate
        self.clip = clip
        self.params = {}
        d = latent_dim

        def param(name, rows, cols):
            self.params[name] = Tensor(_glorot(rng, rows, cols),
                                       requires_grad=True, name=name)

        for k in range(layers):
            q_in = struct_dim if k == 0 else d
            for branch, g_in0 in (("s", struct_dim), ("a", self.attr_dim)):
                g_in = g_in0 if k == 0 else d
                param(f"wq_{branch}_{k}", q_in, d)
                param(f"wk_{branch}_{k}", g_in, d)
                param(f"wv_{branch}_{k}", g_in, d)
                self.params[f"eps_{branch}_{k}"] = Tensor(
                    np.zeros((1, 1)), requires_grad=True, name=f"eps_{branch}_{k}")
                param(f"gin_{branch}_{k}_w1", g_in, d)
                param(f"gin_{branch}_{k}_b1", 1, d)
                param(f"gin_{branch}_{k}_w2", d, d)
                param(f"gin_{branch}_{k}_b2", 1, d)
            for head in ("vq", "fq"):
                param(f"pass_{head}_{k}_w1", 4 * d, d)
                param(f"pass_{head}_{k}_b1", 1, d)
                param(f"pass_{head}_{k}_w2", d, d)
                param(f"pass_{head}_{k}_b2", 1, d)
        param("out_w1", 4 * d, d)
        param("out_b1", 1, d)
        param("out_w2", d, 1)
        param("out_b2", 1, 1)
        param("critic_w1", 2 * d, 2 * d)
        param("critic_b1", 1, 2 * d)
        param("critic_w2", 2 * d, 1)
        param("critic_b2", 1, 1)
        ad.clip_weights(self.critic_params(), clip)

    def encoder_params(self):
        return [p for n, p in self.params.items() if not n.startswith("critic_")]

    def critic_params(self):
        return [p for n, p in self.params.items() if n.startswith("critic_")]

    def all_params(self):
        return list(self.params.values())


def init_features(sub, query, struct_dim=None, attr_index=None):
    """Initial feature matrices for a candidate subgraph and query.

    Returns (H_vq0 1 x w, H_fq0 1 x w, Hs0 n x w, Ha0 n x w_a) where the
    defaults give w = n (per-node one-hot / identity) and a candidate-local
    attribute vocabulary. A fixed-size model passes its own widths; local
    node ids and attribute columns then wrap modulo the width.
    """
    n = sub.node_count
    w = struct_dim if struct_dim is not None else n
    local_query = []
    for v in query.nodes:
        if v not in sub.global_to_local:
            raise ValueError(f"query node {v} outside candidate subgraph")
        local_query.append(sub.global_to_local[v])

    h_vq = np.zeros((1, w))
    for i in local_query:
        h_vq[0, i % w] = 1.0

    qattrs = set(query.attrs)
    h_fq = np.zeros((1, w))
    for i in range(n):
        if sub.attrs[i] & qattrs:
            h_fq[0, i % w] = 1.0

    hs = np.zeros((n, w))
    for i in range(n):
        hs[i, i % w] = 1.0

    if attr_index is None:
        attr_index = sub.local_attr_index()
        w_a = max(1, len(attr_index))
        ha = np.zeros((n, w_a))
        for i in range(n):
            for a in sub.attrs[i]:
                ha[i, attr_index[a]] = 1.0
    else:
        w_a = max(1, attr_index)
        ha = np.zeros((n, w_a))
        for i in range(n):
            for a in sub.attrs[i]:
                ha[i, a % w_a] = 1.0
    return h_vq, h_fq, hs, ha


def cross_attention(h_q, h_g, w_q, w_k, w_v):
    """Scaled dot-product attention of a query row over graph-node rows."""
    x_q = ad.matmul(h_q, w_q)
    x_k = ad.matmul(h_g, w_k)
    x_v = ad.matmul(h_g, w_v)
    d_out = w_q.shape[1]
    logits = ad.scale(ad.matmul(x_q, ad.transpose(x_k)), 1.0 / math.sqrt(d_out))
    attn = ad.softmax_rows(logits)
    return ad.matmul(attn, x_v), attn


def _mlp2(x, w1, b1, w2, b2):
    return ad.add(ad.matmul(ad.relu(ad.add(ad.matmul(x, w1), b1)), w2), b2)


def gin_layer(a_t, h, eps, w1, b1, w2, b2):
    """(1 + eps) * h_v + neighbor sum, fed through a 2-layer perceptron."""
    agg = ad.add(ad.matmul(a_t, h), ad.scalar_mul(eps, h))
    agg = ad.add(agg, h)  # (1 + eps) self term
    return _mlp2(agg, w1, b1, w2, b2)


def forward(model, sub, query, mode="eval", rng=None, features=None):
    """Run the K-layer encoder; returns (scores, H, H_s, H_a) tensors.

    scores is n x 1 in (0, 1); H is the n x 4d concatenation fed to the
    scorer; H_s / H_a are the n x 2d per-branch concatenations.
    """
    training = mode == "train"
    if features is None:
        features = init_features(sub, query, model.struct_dim, model.attr_dim)
    h_vq0, h_fq0, hs0, ha0 = features
    n = sub.node_count
    a_t = Tensor(sub.adjacency_matrix())
    h_vq = Tensor(h_vq0)
    h_fq = Tensor(h_fq0)
    hs = Tensor(hs0)
    ha = Tensor(ha0)
    p = model.params
    h_both = None
    hs_cat = ha_cat = None
    for k in range(model.layers):
        hvq_att, _ = cross_attention(h_vq, hs, p[f"wq_s_{k}"], p[f"wk_s_{k}"], p[f"wv_s_{k}"])
        hs = gin_layer(a_t, hs, p[f"eps_s_{k}"], p[f"gin_s_{k}_w1"],
                       p[f"gin_s_{k}_b1"], p[f"gin_s_{k}_w2"], p[f"gin_s_{k}_b2"])
        hfq_att, _ = cross_attention(h_fq, ha, p[f"wq_a_{k}"], p[f"wk_a_{k}"], p[f"wv_a_{k}"])
        ha = gin_layer(a_t, ha, p[f"eps_a_{k}"], p[f"gin_a_{k}_w1"],
                       p[f"gin_a_{k}_b1"], p[f"gin_a_{k}_w2"], p[f"gin_a_{k}_b2"])
        if training and model.dropout_rate > 0:
            hs = ad.dropout(hs, model.dropout_rate, True, rng)
            ha = ad.dropout(ha, model.dropout_rate, True, rng)
        hs_cat = ad.concat_cols(ad.broadcast_rows(hvq_att, n), hs)
        ha_cat = ad.concat_cols(ad.broadcast_rows(hfq_att, n), ha)
        h_both = ad.concat_cols(hs_cat, ha_cat)
        pooled = ad.mean_rows(h_both)
        h_vq = _mlp2(pooled, p[f"pass_vq_{k}_w1"], p[f"pass_vq_{k}_b1"],
                     p[f"pass_vq_{k}_w2"], p[f"pass_vq_{k}_b2"])
        h_fq = _mlp2(pooled, p[f"pass_fq_{k}_w1"], p[f"pass_fq_{k}_b1"],
                     p[f"pass_fq_{k}_w2"], p[f"pass_fq_{k}_b2"])
    scores = ad.sigmoid(_mlp2(h_both, p["out_w1"], p["out_b1"],
                              p["out_w2"], p["out_b2"]))
    return scores, h_both, hs_cat, ha_cat


def loss_bce(scores, truth):
    """Summed binary cross entropy; scores are clamped away from {0, 1}."""
    t = Tensor(np.asarray(truth, dtype=np.float64).reshape(-1, 1))
    s = ad.clamp(scores, 1e-12, 1.0 - 1e-12)
    ones = Tensor(np.ones(t.shape))
    pos = ad.mul(t, ad.log(s))
    neg = ad.mul(ad.sub(ones, t), ad.log(ad.sub(ones, s)))
    return ad.scale(ad.tsum(ad.add(pos, neg)), -1.0)


def loss_local(h, a_t):
    """Frobenius distance between the adjacency matrix and H H^T."""
    return ad.frobenius_norm(ad.sub(a_t, ad.matmul(h, ad.transpose(h))))


def critic_apply(model, h):
    p = model.params
    return _mlp2(h, p["critic_w1"], p["critic_b1"], p["critic_w2"], p["critic_b2"])


def loss_wasserstein(model, h_s, h_a):
    """Critic-estimated gap between attribute and structure embeddings."""
    return ad.sub(ad.tsum(critic_apply(model, h_a)),
                  ad.tsum(critic_apply(model, h_s)))


def composite_loss(model, sub, query, truth, weights, mode="eval", rng=None,
                   features=None):
    scores, h_both, hs_cat, ha_cat = forward(model, sub, query, mode, rng, features)
    a_t = Tensor(sub.adjacency_matrix())
    l_b = loss_bce(scores, truth)
    l_w = loss_wasserstein(model, hs_cat, ha_cat)
    l_m = loss_local(h_both, a_t)
    total = ad.add(l_b, ad.add(ad.scale(l_w, weights.alpha),
                               ad.scale(l_m, weights.beta)))
    return total, l_b, l_w, l_m, scores
