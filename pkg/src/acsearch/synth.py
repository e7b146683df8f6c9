"""Planted-partition benchmark generator with signature attributes.

Nodes are split into m equal communities; intra-community edges appear with
probability p_in, inter-community edges with p_out. Each community owns two
signature attributes carried by 90% of its members; every node additionally
draws one noise attribute from its community's slice of the noise pool.

The pool is sliced per community on purpose: a noise attribute shared across
communities would bridge their node-attribute bipartite components, and the
attribute pruning branch would then sweep the whole graph into every
candidate (the full bipartite graph trivially maximizes bipartite
modularity). Community-local noise keeps candidates informative while still
adding attribute diversity for the consistency metrics.
"""

from __future__ import annotations

import numpy as np


def planted_partition_lines(n=400, m=8, p_in=0.2, p_out=0.01, noise_pool=50,
                            signature_coverage=0.9, seed=0):
    """Emit (edge_lines, attr_lines, community_lines) for the benchmark."""
    if not (0.0 <= p_in <= 1.0 and 0.0 <= p_out <= 1.0):
        raise ValueError("edge probabilities must be in [0, 1]")
    if n < m or m < 1:
        raise ValueError("need at least one node per community")
    rng = np.random.default_rng(seed)
    member_of = [min(i * m // n, m - 1) for i in range(n)]
    communities = [[] for _ in range(m)]
    for i, c in enumerate(member_of):
        communities[c].append(i)

    edge_lines = []
    for u in range(n):
        for v in range(u + 1, n):
            p = p_in if member_of[u] == member_of[v] else p_out
            if rng.random() < p:
                edge_lines.append(f"n{u} n{v}")

    node_attrs = [[] for _ in range(n)]
    for c, members in enumerate(communities):
        take = int(round(signature_coverage * len(members)))
        for sig in (f"sig{c}a", f"sig{c}b"):
            chosen = rng.choice(len(members), size=take, replace=False)
            for idx in chosen:
                node_attrs[members[idx]].append(sig)
    slice_size = max(1, noise_pool // m)
    for i in range(n):
        j = member_of[i] * slice_size + int(rng.integers(slice_size))
        node_attrs[i].append(f"noise{j}")

    attr_lines = [f"n{i}\t{','.join(node_attrs[i])}" for i in range(n)]
    community_lines = [" ".join(f"n{i}" for i in members) for members in communities]
    return edge_lines, attr_lines, community_lines
