"""Dual hypergraph transformation, its inverse, and the line-graph baseline."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .autodiff import Tensor, gather_rows
from .graph import DualHypergraph, Graph


def dht(g):
    """Swap the roles of nodes and edges of ``g``.

    Edge ``i = (u, v)`` becomes dual node ``i`` incident to hyperedges
    ``u`` and ``v``; node and edge features trade places unchanged.
    Linear in the number of edges.
    """
    return DualHypergraph(
        g.num_edges,
        g.edge_features,
        kernels.hyperedge_list(g.edges),
        g.num_nodes,
        g.node_features,
        label=g.label,
    )


def dht_inverse(h, validate=False):
    """Recover the graph whose DHT is ``h``; a pure reshape of the incidence list."""
    h.check_structure()
    return Graph(
        h.num_hyperedges,
        h.hyperedge_features,
        h.hyperedges[:, 1].reshape(-1, 2),
        h.dual_node_features,
        label=h.label,
        validate=validate,
    )


def select_dual_nodes(h, index, features=None):
    """Keep dual nodes ``index`` (in the given order), renumbering them ``0..k-1``.

    Hyperedges are untouched, so every source node survives.
    """
    index = np.asarray(index, dtype=np.int64)
    k = index.shape[0]
    rows = np.stack([2 * index, 2 * index + 1], axis=1).reshape(-1)
    pairs = np.empty((2 * k, 2), dtype=np.int64)
    pairs[:, 0] = np.repeat(np.arange(k, dtype=np.int64), 2)
    pairs[:, 1] = h.hyperedges[rows, 1]
    if features is None:
        features = gather_rows(h.dual_node_features, index)
    return DualHypergraph(k, features, pairs, h.num_hyperedges, h.hyperedge_features, label=h.label)


@dataclass
class LineGraph:
    num_nodes: int
    edges: np.ndarray
    node_features: Tensor

    @property
    def num_edges(self):
        return self.edges.shape[0]


def line_graph(g):
    """Exact line graph: one node per source edge, adjacent when edges share an endpoint.

    Enumerates every pair of edges at every node, so the cost is the sum of
    squared degrees.
    """
    return LineGraph(g.num_edges, kernels.line_graph_pairs(g.edges, g.num_nodes), g.edge_features)


def line_graph_edge_count(g):
    """Number of line-graph edges without building them: sum of C(deg, 2)."""
    deg = g.degrees
    return int(np.sum(deg * (deg - 1) // 2))
