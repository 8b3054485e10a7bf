"""Sparse triplet representation of graphs and their dual hypergraphs."""
from __future__ import annotations

from functools import cached_property

import numpy as np

from .autodiff import Tensor, as_tensor
from .errors import (
    DuplicateEdgeError,
    EndpointOutOfRangeError,
    FeatureShapeError,
    SelfLoopError,
    StructureError,
)


def _edge_array(edges):
    arr = np.asarray(edges, dtype=np.int64)
    if arr.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise FeatureShapeError(f"edge list must have shape (m, 2), got {arr.shape}")
    return np.ascontiguousarray(arr)


def _features(value, rows):
    if value is None:
        return Tensor(np.zeros((rows, 0)))
    return as_tensor(value)


class Graph:
    """Undirected simple graph: node features, edge list, edge features.

    Edges are stored once as ``(u, v)`` rows; their order is the edge
    index. The structure is immutable after construction; features are
    tensors and may carry a compute graph.
    """

    def __init__(self, num_nodes, node_features, edges, edge_features=None, label=None, validate=True):
        self.num_nodes = int(num_nodes)
        self.edges = _edge_array(edges)
        self.edges.flags.writeable = False
        self.node_features = _features(node_features, self.num_nodes)
        self.edge_features = _features(edge_features, self.num_edges)
        self.label = label
        if validate:
            validate_graph(self)

    @property
    def num_edges(self):
        return self.edges.shape[0]

    def __repr__(self):
        return (
            f"Graph(n={self.num_nodes}, m={self.num_edges}, "
            f"d={self.node_features.cols}, d_edge={self.edge_features.cols})"
        )

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.num_nodes == other.num_nodes
            and self.label == other.label
            and np.array_equal(self.edges, other.edges)
            and self.node_features.shape == other.node_features.shape
            and self.edge_features.shape == other.edge_features.shape
            and np.array_equal(self.node_features.data, other.node_features.data)
            and np.array_equal(self.edge_features.data, other.edge_features.data)
        )

    __hash__ = None

    def with_features(self, node_features=None, edge_features=None):
        """Same structure, replaced features. Skips re-validation."""
        return Graph(
            self.num_nodes,
            self.node_features if node_features is None else node_features,
            self.edges,
            self.edge_features if edge_features is None else edge_features,
            label=self.label,
            validate=False,
        )

    @cached_property
    def degrees(self):
        return np.bincount(self.edges.reshape(-1), minlength=self.num_nodes).astype(np.int64)

    @cached_property
    def message_index(self):
        """Directed ``(src, dst, edge_id)`` arrays covering each edge both ways."""
        u, v = self.edges[:, 0], self.edges[:, 1]
        eid = np.arange(self.num_edges, dtype=np.int64)
        return np.concatenate([u, v]), np.concatenate([v, u]), np.concatenate([eid, eid])


def validate_graph(g):
    """Raise a specific :class:`GraphError` if ``g`` breaks an invariant."""
    n, edges = g.num_nodes, g.edges
    if n < 0:
        raise FeatureShapeError(f"negative node count {n}")
    if edges.size:
        bad = np.flatnonzero((edges < 0).any(axis=1) | (edges >= n).any(axis=1))
        if bad.size:
            i = int(bad[0])
            raise EndpointOutOfRangeError(
                f"edge {i} = {tuple(int(x) for x in edges[i])} has an endpoint outside [0, {n})"
            )
        loops = np.flatnonzero(edges[:, 0] == edges[:, 1])
        if loops.size:
            i = int(loops[0])
            raise SelfLoopError(f"edge {i} is a self-loop on node {int(edges[i, 0])}")
        lo = np.minimum(edges[:, 0], edges[:, 1])
        hi = np.maximum(edges[:, 0], edges[:, 1])
        key = lo * n + hi
        order = np.argsort(key, kind="stable")
        dup = np.flatnonzero(key[order][1:] == key[order][:-1])
        if dup.size:
            first, second = sorted((int(order[dup[0]]), int(order[dup[0] + 1])))
            raise DuplicateEdgeError(
                f"edges {first} and {second} both join nodes {int(lo[second])} and {int(hi[second])}"
            )
    if g.node_features.rows != n:
        raise FeatureShapeError(f"node_features has {g.node_features.rows} rows for {n} nodes")
    if g.edge_features.rows != g.num_edges:
        raise FeatureShapeError(
            f"edge_features has {g.edge_features.rows} rows for {g.num_edges} edges"
        )


validate = validate_graph


def to_dense_incidence(g):
    """Binary ``n x m`` matrix with ``M[v, e] = 1`` iff ``v`` is an endpoint of ``e``."""
    m = np.zeros((g.num_nodes, g.num_edges), dtype=np.int64)
    cols = np.arange(g.num_edges)
    m[g.edges[:, 0], cols] = 1
    m[g.edges[:, 1], cols] = 1
    return m


def node_degrees(g):
    return g.degrees.copy()


class DualHypergraph:
    """The DHT image of a graph.

    Dual node ``i`` is edge ``i`` of the source graph; hyperedge ``j`` is
    source node ``j``. ``hyperedges`` is a ``(2m, 2)`` array of
    ``(dual_node, hyperedge)`` pairs where rows ``2i`` and ``2i + 1``
    belong to dual node ``i``.
    """

    def __init__(self, num_dual_nodes, dual_node_features, hyperedges, num_hyperedges,
                 hyperedge_features, label=None):
        self.num_dual_nodes = int(num_dual_nodes)
        self.dual_node_features = as_tensor(dual_node_features)
        self.hyperedges = np.asarray(hyperedges, dtype=np.int64).reshape(-1, 2)
        self.num_hyperedges = int(num_hyperedges)
        self.hyperedge_features = as_tensor(hyperedge_features)
        self.label = label

    def __repr__(self):
        return f"DualHypergraph(m={self.num_dual_nodes}, n={self.num_hyperedges})"

    def check_structure(self):
        """Raise :class:`StructureError` unless 2-regular in positional layout."""
        m, pairs = self.num_dual_nodes, self.hyperedges
        if pairs.shape[0] != 2 * m:
            counts = np.bincount(pairs[:, 0], minlength=m) if pairs.size else np.zeros(m, int)
            off = np.flatnonzero(counts != 2)
            where = f"; dual node {int(off[0])} has {int(counts[off[0]])} incidences" if off.size else ""
            raise StructureError(f"expected {2 * m} incidences for {m} dual nodes, got {pairs.shape[0]}{where}")
        if m:
            expected = np.repeat(np.arange(m, dtype=np.int64), 2)
            bad = np.flatnonzero(pairs[:, 0] != expected)
            if bad.size:
                r = int(bad[0])
                raise StructureError(
                    f"incidence row {r} belongs to dual node {int(pairs[r, 0])}, expected {int(expected[r])}"
                )
            h = pairs[:, 1]
            bad = np.flatnonzero((h < 0) | (h >= self.num_hyperedges))
            if bad.size:
                r = int(bad[0])
                raise StructureError(
                    f"incidence row {r} names hyperedge {int(h[r])} outside [0, {self.num_hyperedges})"
                )
            same = np.flatnonzero(h[0::2] == h[1::2])
            if same.size:
                i = int(same[0])
                raise StructureError(f"dual node {i} lies twice in hyperedge {int(h[2 * i])}")
        if self.dual_node_features.rows != m:
            raise StructureError(f"{self.dual_node_features.rows} dual-node feature rows for {m} dual nodes")
        if self.hyperedge_features.rows != self.num_hyperedges:
            raise StructureError(
                f"{self.hyperedge_features.rows} hyperedge feature rows for {self.num_hyperedges} hyperedges"
            )

    def to_dense_incidence(self):
        """Binary ``m x n`` matrix: dual node ``i`` lies in hyperedge ``j``."""
        inc = np.zeros((self.num_dual_nodes, self.num_hyperedges), dtype=np.int64)
        if self.hyperedges.size:
            inc[self.hyperedges[:, 0], self.hyperedges[:, 1]] = 1
        return inc
