"""Canonical citation-graph fixture used across tests and the README demo.

10 nodes, 14 edges. From node "4": the 1-hop ball is {2,4,6} (3 internal
edges, host degree sum 10), the 2-hop ball has 7 nodes (9 internal edges,
degree sum 23), the 3-hop ball is the whole graph. Attributes: 6 distinct
labels; node 4 carries AI and DB; DB sits on nodes 2, 4 and 6.
"""

from .graph import ingest

CITATION_EDGES = [
    "2 4",
    "4 6",
    "2 6",
    "1 2",
    "2 3",
    "5 6",
    "6 7",
    "1 3",
    "5 7",
    "1 8",
    "3 8",
    "5 9",
    "7 9",
    "7 10",
]

CITATION_ATTRS = [
    "1\tML",
    "2\tDB,DM",
    "3\tML,IR",
    "4\tAI,DB",
    "5\tIR",
    "6\tDB,AI",
    "7\tAI",
    "8\tSE",
    "9\tDM",
    "10\tSE",
]


def citation_graph():
    return ingest(CITATION_EDGES, CITATION_ATTRS)
