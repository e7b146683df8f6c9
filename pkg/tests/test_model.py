"""Encoder, losses and the training loop."""

import numpy as np
import pytest

from acsearch import autodiff as ad
from acsearch.autodiff import Tensor
from acsearch.extraction import Query
from acsearch.graph import induced_subgraph, ingest
from acsearch.model import (
    CommunityModel,
    LossWeights,
    composite_loss,
    critic_apply,
    cross_attention,
    forward,
    gin_layer,
    init_features,
    loss_bce,
    loss_local,
    loss_wasserstein,
)
from acsearch.training import make_item, train
from conftest import node_ids


def whole_candidate(g):
    return induced_subgraph(g, range(g.node_count))


@pytest.fixture(scope="module")
def fixture_candidate(fixture_graph):
    return whole_candidate(fixture_graph)


def ordered_citation_graph():
    """The citation fixture re-ingested so dense ids follow token order 1..10."""
    from acsearch.fixtures import CITATION_ATTRS

    edges = ["1 2", "2 3", "2 4", "5 6", "6 7", "1 8", "5 9", "7 10",
             "2 6", "4 6", "1 3", "5 7", "3 8", "7 9"]
    g = ingest(edges, CITATION_ATTRS)
    assert [g.node_tokens[i] for i in range(10)] == [str(i) for i in range(1, 11)]
    return g


class TestInitFeatures:
    def test_query_node_one_hot(self):
        g = ordered_citation_graph()
        sub = whole_candidate(g)
        q = Query([g.node_labels["2"]])
        h_vq, _, _, _ = init_features(sub, q)
        assert list(h_vq[0]) == [0, 1, 0, 0, 0, 0, 0, 0, 0, 0]

    def test_db_attribute_indicator(self):
        g = ordered_citation_graph()
        sub = whole_candidate(g)
        q = Query([g.node_labels["4"]], [g.attr_vocab["DB"]])
        _, h_fq, _, _ = init_features(sub, q)
        assert list(h_fq[0]) == [0, 1, 0, 1, 0, 1, 0, 0, 0, 0]

    def test_empty_attribute_query_all_zero(self, fixture_graph, fixture_candidate):
        q = Query([fixture_graph.node_labels["4"]])
        _, h_fq, _, _ = init_features(fixture_candidate, q)
        assert not h_fq.any()

    def test_structure_features_identity(self, fixture_graph, fixture_candidate):
        q = Query([fixture_graph.node_labels["4"]])
        _, _, hs, _ = init_features(fixture_candidate, q)
        assert np.array_equal(hs, np.eye(10))

    def test_attribute_multi_hot(self, fixture_graph, fixture_candidate):
        g = fixture_graph
        q = Query([g.node_labels["4"]])
        _, _, _, ha = init_features(fixture_candidate, q)
        index = fixture_candidate.local_attr_index()
        v4 = fixture_candidate.global_to_local[g.node_labels["4"]]
        hot = {i for i in range(ha.shape[1]) if ha[v4, i]}
        assert hot == {index[g.attr_vocab["AI"]], index[g.attr_vocab["DB"]]}

    def test_query_outside_candidate_errors(self, fixture_graph):
        g = fixture_graph
        sub = induced_subgraph(g, node_ids(g, "2 4 6"))
        with pytest.raises(ValueError, match="outside candidate"):
            init_features(sub, Query([g.node_labels["8"]]))

    def test_fixed_width_wraps_ids(self, fixture_graph, fixture_candidate):
        q = Query([fixture_graph.node_labels["4"]])
        h_vq, _, hs, _ = init_features(fixture_candidate, q, struct_dim=4)
        assert h_vq.shape == (1, 4)
        assert hs.shape == (10, 4)


class TestCrossAttention:
    def test_single_node_passthrough(self):
        rng = np.random.default_rng(0)
        d = 3
        hq = Tensor(rng.normal(size=(1, d)))
        hg = Tensor(rng.normal(size=(1, d)))
        wq, wk, wv = (Tensor(rng.normal(size=(d, d))) for _ in range(3))
        out, attn = cross_attention(hq, hg, wq, wk, wv)
        assert np.allclose(attn.values, [[1.0]])
        assert np.allclose(out.values, hg.values @ wv.values)

    def test_equal_logits_average_values(self):
        d = 2
        hq = Tensor(np.zeros((1, d)))  # zero query -> all logits equal
        rng = np.random.default_rng(1)
        hg = Tensor(rng.normal(size=(5, d)))
        wq, wk, wv = (Tensor(rng.normal(size=(d, d))) for _ in range(3))
        out, attn = cross_attention(hq, hg, wq, wk, wv)
        assert np.allclose(attn.values, 0.2)
        assert np.allclose(out.values, (hg.values @ wv.values).mean(axis=0))

    def test_attention_rows_sum_to_one(self):
        rng = np.random.default_rng(2)
        hq = Tensor(rng.normal(size=(1, 4)))
        hg = Tensor(rng.normal(size=(7, 4)))
        wq, wk, wv = (Tensor(rng.normal(size=(4, 4))) for _ in range(3))
        _, attn = cross_attention(hq, hg, wq, wk, wv)
        assert abs(attn.values.sum() - 1.0) < 1e-12


def identity_mlp(d):
    return (Tensor(np.eye(d)), Tensor(np.zeros((1, d))),
            Tensor(np.eye(d)), Tensor(np.zeros((1, d))))


class TestGinLayer:
    def test_edgeless_identity(self):
        g = ingest([], ["a\tx", "b\tx", "c\tx"])
        sub = whole_candidate(g)
        h = Tensor(np.abs(np.random.default_rng(3).normal(size=(3, 2))))
        out = gin_layer(Tensor(sub.adjacency_matrix()), h, Tensor([[0.0]]),
                        *identity_mlp(2))
        assert np.allclose(out.values, h.values)

    def test_single_edge_neighbor_sum(self):
        g = ingest(["a b"])
        sub = whole_candidate(g)
        h = Tensor(np.array([[1.0, 2.0], [3.0, 4.0]]))
        out = gin_layer(Tensor(sub.adjacency_matrix()), h, Tensor([[0.0]]),
                        *identity_mlp(2))
        assert np.allclose(out.values[0], [4.0, 6.0])
        assert np.allclose(out.values[1], [4.0, 6.0])

    def test_epsilon_scales_self_term(self):
        g = ingest([], ["a\tx"])
        sub = whole_candidate(g)
        h = Tensor(np.array([[2.0]]))
        out = gin_layer(Tensor(sub.adjacency_matrix()), h, Tensor([[0.5]]),
                        *identity_mlp(1))
        assert out.values[0, 0] == pytest.approx(3.0)


def path_p4():
    return whole_candidate(ingest(["a b", "b c", "c d"]))


def star_k13():
    return whole_candidate(ingest(["a b", "a c", "a d"]))


class TestOneWL:
    def test_p4_vs_k13_distinguished(self):
        p4, k13 = path_p4(), star_k13()
        rng = np.random.default_rng(17)
        model = CommunityModel(4, 1, latent_dim=6, layers=2, dropout_rate=0.0,
                               rng=rng)
        q = Query([0])
        _, h_p4, _, _ = forward(model, p4, q)
        _, h_k13, _, _ = forward(model, k13, q)
        a = np.array(sorted(map(tuple, h_p4.values)))
        b = np.array(sorted(map(tuple, h_k13.values)))
        assert np.abs(a - b).max() > 1e-9


class TestForward:
    def test_zero_final_mlp_scores_half(self, fixture_graph, fixture_candidate):
        rng = np.random.default_rng(4)
        model = CommunityModel(10, 6, latent_dim=4, rng=rng)
        for name in ("out_w1", "out_b1", "out_w2", "out_b2"):
            model.params[name].values[...] = 0.0
        scores, _, _, _ = forward(model, fixture_candidate,
                                  Query([fixture_graph.node_labels["4"]]))
        assert np.allclose(scores.values, 0.5)

    def test_scores_in_open_interval(self, fixture_graph, fixture_candidate):
        model = CommunityModel(10, 6, latent_dim=4, rng=np.random.default_rng(5))
        scores, _, _, _ = forward(model, fixture_candidate,
                                  Query([fixture_graph.node_labels["4"]]))
        assert ((scores.values > 0) & (scores.values < 1)).all()

    def test_eval_mode_deterministic(self, fixture_graph, fixture_candidate):
        model = CommunityModel(10, 6, latent_dim=4, rng=np.random.default_rng(6))
        q = Query([fixture_graph.node_labels["4"]])
        a, _, _, _ = forward(model, fixture_candidate, q)
        b, _, _, _ = forward(model, fixture_candidate, q)
        assert np.array_equal(a.values, b.values)

    def test_output_shapes(self, fixture_graph, fixture_candidate):
        d = 4
        model = CommunityModel(10, 6, latent_dim=d, rng=np.random.default_rng(7))
        scores, h, hs, ha = forward(model, fixture_candidate,
                                    Query([fixture_graph.node_labels["4"]]))
        assert scores.shape == (10, 1)
        assert h.shape == (10, 4 * d)
        assert hs.shape == (10, 2 * d)
        assert ha.shape == (10, 2 * d)


class TestLosses:
    def test_bce_all_half(self):
        scores = Tensor(np.full((6, 1), 0.5))
        val = loss_bce(scores, np.array([1, 0, 1, 0, 1, 1])).values[0, 0]
        assert val == pytest.approx(6 * np.log(2))

    def test_bce_perfect_scores_near_zero(self):
        truth = np.array([1.0, 0.0, 1.0])
        scores = Tensor(truth.reshape(-1, 1))
        assert loss_bce(scores, truth).values[0, 0] == pytest.approx(0.0, abs=1e-9)

    def test_bce_scalar_oracle(self):
        rng = np.random.default_rng(8)
        s = rng.uniform(0.05, 0.95, size=4)
        t = np.array([1.0, 0.0, 0.0, 1.0])
        expected = -sum(ti * np.log(si) + (1 - ti) * np.log(1 - si)
                        for si, ti in zip(s, t))
        got = loss_bce(Tensor(s.reshape(-1, 1)), t).values[0, 0]
        assert got == pytest.approx(expected, abs=1e-12)

    def test_local_zero_cases(self):
        assert loss_local(Tensor(np.zeros((3, 2))),
                          Tensor(np.zeros((3, 3)))).values[0, 0] == 0.0
        h = Tensor(np.array([[1.0, 0.0], [0.0, 1.0]]))
        a = Tensor(h.values @ h.values.T)
        assert loss_local(h, a).values[0, 0] == pytest.approx(0.0)

    def test_local_hand_value(self):
        a = Tensor(np.array([[0.0, 1.0], [1.0, 0.0]]))
        h = Tensor(np.eye(2))
        assert loss_local(h, a).values[0, 0] == pytest.approx(2.0)

    def test_wasserstein_identical_embeddings(self):
        model = CommunityModel(4, 2, latent_dim=3, rng=np.random.default_rng(9))
        h = Tensor(np.random.default_rng(10).normal(size=(5, 6)))
        assert loss_wasserstein(model, h, h).values[0, 0] == pytest.approx(0.0)

    def test_wasserstein_constant_critic(self):
        model = CommunityModel(4, 2, latent_dim=3, rng=np.random.default_rng(11))
        model.params["critic_w1"].values[...] = 0.0
        model.params["critic_w2"].values[...] = 0.0
        model.params["critic_b2"].values[...] = 0.004
        rng = np.random.default_rng(12)
        hs = Tensor(rng.normal(size=(5, 6)))
        ha = Tensor(rng.normal(size=(5, 6)))
        assert loss_wasserstein(model, hs, ha).values[0, 0] == pytest.approx(0.0)

    def test_adversarial_gap_shrinks(self):
        """Alternating critic/encoder steps on two fixed point clouds drive
        the critic-estimated gap toward zero."""
        d = 4
        rng = np.random.default_rng(13)
        model = CommunityModel(4, 2, latent_dim=d // 2, rng=rng)
        hs = Tensor(rng.normal(loc=0.0, size=(20, d)))
        ha = Tensor(rng.normal(loc=1.0, size=(20, d)), requires_grad=True)
        critic = model.critic_params()
        crit_opt = ad.AdamState(critic, lr=1e-3)
        enc_opt = ad.AdamState([ha], lr=1e-2)
        gaps = []
        for _ in range(200):
            gap = loss_wasserstein(model, hs, ha)
            ad.zero_grads(critic + [ha])
            ad.backward(gap)
            for p in critic:
                if p.grad is not None:
                    p.grad = -p.grad
            ha.grad = None
            crit_opt.step()
            ad.clip_weights(critic, 0.01)
            gap = loss_wasserstein(model, hs, ha)
            ad.zero_grads(critic + [ha])
            ad.backward(gap)
            ad.zero_grads(critic)
            enc_opt.step()
            gaps.append(abs(gap.values[0, 0]))
        assert np.mean(gaps[-20:]) < np.mean(gaps[:20])


class TestCompositeGradient:
    def test_matches_finite_differences(self):
        from conftest import finite_difference

        g = ingest(["a b", "b c", "c d", "d a", "a c", "d e", "e f"])
        sub = whole_candidate(g)
        assert sub.node_count == 6
        model = CommunityModel(6, 1, latent_dim=4, layers=2, dropout_rate=0.0,
                               rng=np.random.default_rng(14))
        q = Query([0, 1])
        truth = np.array([1.0, 1.0, 1.0, 1.0, 0.0, 0.0])
        weights = LossWeights()

        def total():
            val, *_ = composite_loss(model, sub, q, truth, weights)
            return val

        loss = total()
        ad.zero_grads(model.all_params())
        ad.backward(loss)
        worst = 0.0
        for p in model.all_params():
            analytic = p.grad if p.grad is not None else np.zeros_like(p.values)
            numeric = finite_difference(lambda: total().values[0, 0], p)
            scale = max(1.0, np.abs(numeric).max())
            worst = max(worst, np.abs(analytic - numeric).max() / scale)
        assert worst < 1e-4


class TestTrain:
    def toy_items(self, model, g):
        sub = whole_candidate(g)
        q = Query([0])
        truth = set(range(3))
        return [make_item(sub, q, truth, model)]

    def toy_graph(self):
        return ingest(["a b", "b c", "a c", "c d", "d e", "e f", "d f"])

    def test_pure_bce_loss_decreases(self):
        g = self.toy_graph()
        model = CommunityModel(6, 1, latent_dim=4, dropout_rate=0.0,
                               rng=np.random.default_rng(15))
        items = self.toy_items(model, g)
        weights = LossWeights(alpha=0.0, beta=0.0)
        result = train(model, items, weights, epochs=20,
                       rng=np.random.default_rng(0))
        assert result.loss_trace[-1] < result.loss_trace[0]
        diffs = np.diff(result.loss_trace)
        assert (diffs < 0).all()

    def test_deterministic_traces(self):
        def run():
            g = self.toy_graph()
            model = CommunityModel(6, 1, latent_dim=4,
                                   rng=np.random.default_rng(16))
            items = self.toy_items(model, g)
            return train(model, items, LossWeights(), epochs=5,
                         rng=np.random.default_rng(0)).loss_trace

        assert run() == run()

    def test_critic_stays_clipped(self):
        g = self.toy_graph()
        model = CommunityModel(6, 1, latent_dim=4, rng=np.random.default_rng(17))
        items = self.toy_items(model, g)
        train(model, items, LossWeights(), epochs=5, rng=np.random.default_rng(0))
        for p in model.critic_params():
            assert np.abs(p.values).max() <= 0.01 + 1e-15

    def test_empty_dataset_errors(self):
        model = CommunityModel(3, 1, latent_dim=2, rng=np.random.default_rng(18))
        with pytest.raises(ValueError):
            train(model, [], LossWeights())

    def test_early_stopping_restores_best(self):
        g = self.toy_graph()
        model = CommunityModel(6, 1, latent_dim=4, dropout_rate=0.0,
                               rng=np.random.default_rng(19))
        items = self.toy_items(model, g)
        result = train(model, items, LossWeights(alpha=0.0, beta=0.0),
                       epochs=50, patience=3, rng=np.random.default_rng(0),
                       val_items=items)
        assert result.stopped_epoch <= 50
        assert result.best_epoch <= result.stopped_epoch
