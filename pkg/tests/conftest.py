"""Shared fixtures and oracle helpers for the test suite."""

import numpy as np
import pytest

from acsearch.fixtures import citation_graph
from acsearch.graph import ingest


@pytest.fixture(scope="session")
def fixture_graph():
    return citation_graph()


def node_ids(g, tokens):
    return {g.node_labels[t] for t in tokens.split()}


def random_graph(rng, n, p=0.4, with_attrs=False, attr_pool=4):
    """Random simple graph as an AttributedGraph (edge-line construction)."""
    lines = []
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < p:
                lines.append(f"v{u} v{v}")
    attr_lines = []
    if with_attrs:
        for u in range(n):
            k = int(rng.integers(0, 3))
            if k:
                attrs = ",".join(
                    f"t{int(a)}" for a in rng.choice(attr_pool, size=k, replace=False))
                attr_lines.append(f"v{u}\t{attrs}")
    # make sure every node exists even if isolated
    attr_lines += [f"v{u}\tpad" for u in range(n)]
    return ingest(lines, attr_lines)


def oracle_modularity_counts(g, members):
    """Independent recount of |E_C| and d_C straight from the edge iterator."""
    members = set(members)
    e_c = sum(1 for u, v in g.edges() if u in members and v in members)
    d_c = sum(1 for u, v in g.edges() for w in (u, v) if w in members)
    return e_c, d_c


def finite_difference(loss_fn, param, step=1e-5):
    """Central finite differences of a scalar-valued closure wrt one tensor."""
    grad = np.zeros_like(param.values)
    it = np.nditer(param.values, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        orig = param.values[idx]
        param.values[idx] = orig + step
        hi = loss_fn()
        param.values[idx] = orig - step
        lo = loss_fn()
        param.values[idx] = orig
        grad[idx] = (hi - lo) / (2 * step)
        it.iternext()
    return grad
