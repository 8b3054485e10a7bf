"""Edge pooling: HyperCluster (soft coarsening) and HyperDrop (top-k edge drop)."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .autodiff import (
    Tensor,
    gather_rows,
    glorot,
    matmul,
    row_softmax,
    scale_rows,
    scatter_aggregate,
    tanh,
    transpose,
)
from .dht import dht, dht_inverse, select_dual_nodes
from .errors import DimensionError
from .layers import EhgnnLayer, Module


@dataclass
class ClusterAssignment:
    """Row-stochastic ``m x m_pool`` soft assignment of edges to clusters."""

    matrix: Tensor
    warning: str | None = None

    @property
    def num_clusters(self):
        return self.matrix.cols


@dataclass
class PooledGraph:
    """Result of an edge-pooling step.

    For HyperDrop ``graph`` is the reduced graph (all nodes kept) and
    ``kept_indices``/``scores`` describe the selection. For HyperCluster
    ``edge_features`` holds the pooled edge rows and ``incidence`` the soft
    ``n x m_pool`` incidence matrix.
    """

    node_features: Tensor
    edge_features: Tensor
    graph: object = None
    incidence: Tensor | None = None
    kept_indices: np.ndarray | None = None
    scores: Tensor | None = None

    @property
    def num_nodes(self):
        return self.node_features.rows


def num_pooled(m, ratio):
    """``max(1, ceil(ratio * m))``; the small slack absorbs float noise in ``ratio * m``."""
    return max(1, math.ceil(ratio * m - 1e-9))


class AssignmentLayer(Module):
    """``C = row_softmax(E' W_assign)``; optionally a fixed identity when ``m_pool == m``."""

    def __init__(self, d_in, m_pool, rng, identity=False):
        if m_pool < 1:
            raise ValueError(f"m_pool must be at least 1, got {m_pool}")
        self.d_in, self.m_pool, self.identity = d_in, m_pool, identity
        self.weight = glorot(rng, d_in, m_pool)
        if identity:
            self.weight.requires_grad = False

    def __call__(self, e_repr):
        return make_assignment(e_repr, self.m_pool, self)


def make_assignment(e_repr, m_pool, layer):
    m = e_repr.rows
    if m < 1 or m_pool < 1:
        raise ValueError(f"need at least one edge and one cluster (m={m}, m_pool={m_pool})")
    if layer.identity:
        if m_pool != m:
            raise DimensionError(f"identity assignment needs m_pool == m, got {m_pool} vs {m}")
        return ClusterAssignment(Tensor(np.eye(m)))
    if e_repr.cols != layer.weight.rows or layer.weight.cols != m_pool:
        raise DimensionError(f"assignment weights {layer.weight.shape} vs features {e_repr.shape}, m_pool={m_pool}")
    warning = None
    if m_pool > m:
        warning = f"over-complete clustering: {m_pool} clusters for {m} edges"
        warnings.warn(warning, RuntimeWarning, stacklevel=2)
    return ClusterAssignment(row_softmax(matmul(e_repr, layer.weight)), warning)


def soft_incidence(g, c):
    """``M C`` computed from the edge list: row ``v`` sums the rows of ``C`` for edges at ``v``."""
    src, _, eid = g.message_index
    return scatter_aggregate(gather_rows(c, eid), src, g.num_nodes, "sum")


def hypercluster(g, e_repr, assignment):
    """Coarsen edges: ``E_pool = C^T E'`` and ``M_pool = M C``; nodes untouched."""
    c = assignment.matrix
    if c.rows != g.num_edges or e_repr.rows != g.num_edges:
        raise DimensionError(f"assignment {c.shape} / features {e_repr.shape} for {g.num_edges} edges")
    return PooledGraph(
        node_features=g.node_features,
        edge_features=matmul(transpose(c), e_repr),
        incidence=soft_incidence(g, c),
    )


def hypercluster_unpool(g, pooled, assignment):
    """Give every edge its soft mixture of pooled rows: ``C E_pool``."""
    c = assignment.matrix
    if c.rows != g.num_edges or c.cols != pooled.edge_features.rows:
        raise DimensionError(f"assignment {c.shape} vs pooled {pooled.edge_features.shape}")
    return matmul(c, pooled.edge_features)


class ScoreLayer(Module):
    """Edge scores ``tanh(EHGNN(E'))`` with a single output channel."""

    def __init__(self, d_in, rng):
        self.layer = EhgnnLayer(d_in, 1, rng)

    def __call__(self, g, e_repr):
        return hyperdrop_score(g, e_repr, self)


def hyperdrop_score(g, e_repr, score_layer):
    if e_repr.rows != g.num_edges:
        raise DimensionError(f"{e_repr.rows} edge rows for {g.num_edges} edges")
    return tanh(score_layer.layer(g, e_repr))


def topk_select(scores, keep_ratio):
    """Indices of the ``max(1, ceil(keep_ratio*m))`` highest scores, ascending.

    Ties go to the smaller index.
    """
    if not 0.0 < keep_ratio <= 1.0:
        raise ValueError(f"keep_ratio must lie in (0, 1], got {keep_ratio}")
    z = (scores.data if isinstance(scores, Tensor) else np.asarray(scores, dtype=np.float64)).reshape(-1)
    m = z.shape[0]
    if m < 1:
        raise ValueError("top-k selection needs at least one score")
    k = num_pooled(m, keep_ratio)
    order = np.lexsort((np.arange(m), -z))
    return np.sort(order[:k])


def hyperdrop(g, e_repr, scores, keep_ratio):
    """Keep the top-scored edges and every node.

    Works on the dual hypergraph: the selected dual nodes are kept, their
    features gated by their scores, and the result is mapped back with the
    inverse transformation.
    """
    if e_repr.rows != g.num_edges or scores.shape != (g.num_edges, 1):
        raise DimensionError(f"features {e_repr.shape} / scores {scores.shape} for {g.num_edges} edges")
    idx = topk_select(scores, keep_ratio)
    kept_scores = gather_rows(scores, idx)
    gated = scale_rows(gather_rows(e_repr, idx), kept_scores)
    dual = dht(g.with_features(edge_features=e_repr))
    pooled = dht_inverse(select_dual_nodes(dual, idx, gated))
    return PooledGraph(
        node_features=pooled.node_features,
        edge_features=pooled.edge_features,
        graph=pooled,
        kept_indices=idx,
        scores=kept_scores,
    )


def gcn_with_edge_weights(layer, pooled, edge_weights=None, x=None):
    """GCN on the reduced edge set with each neighbour term scaled by its edge score."""
    w = pooled.scores if edge_weights is None else edge_weights
    return layer(pooled.graph, x, w)
