"""Autoencoders for reconstruction and the HyperDrop graph classifier."""
from __future__ import annotations

import numpy as np

from .autodiff import Tensor, add, column_mean, concat_cols, glorot, matmul, relu, tanh, transpose
from .layers import EhgnnLayer, GcnLayer, Module, endpoint_mean, make_baseline
from .pooling import (
    AssignmentLayer,
    ClusterAssignment,
    PooledGraph,
    ScoreLayer,
    hypercluster,
    hypercluster_unpool,
    hyperdrop,
    num_pooled,
)


def _hard(assignment):
    c = assignment.matrix.data
    hard = np.zeros_like(c)
    hard[np.arange(c.shape[0]), c.argmax(axis=1)] = 1.0
    return ClusterAssignment(Tensor(hard))


ACTIVATIONS = {"relu": relu, "tanh": tanh}


def _stack(layers, g, h, call, activation):
    act = ACTIVATIONS[activation]
    for i, layer in enumerate(layers):
        h = call(layer, g, h)
        if i < len(layers) - 1:
            h = act(h)
    return h


def _unpool_scale(rows, clusters):
    """Pooled rows are sums over about ``rows / clusters`` members; rescale to a mean."""
    return clusters / rows


class NodeAutoencoder(Module):
    """GCN, GCN, soft node clustering, unpool, GCN x3.

    ``pool_dim`` is the width of the pooled rows (the stored code).
    """

    def __init__(self, d, hidden, n_pool, rng, pool_dim=None, identity=False, activation="tanh"):
        self.activation = activation
        pool_dim = pool_dim or hidden
        self.d, self.n_pool = d, n_pool
        self.encoder = [GcnLayer(d, hidden, rng), GcnLayer(hidden, pool_dim, rng)]
        self.assign = AssignmentLayer(pool_dim, n_pool, rng, identity=identity)
        self.decoder = [GcnLayer(pool_dim, hidden, rng), GcnLayer(hidden, hidden, rng), GcnLayer(hidden, d, rng)]

    def encode(self, g):
        h = _stack(self.encoder, g, g.node_features, lambda l, g, h: l(g, h), self.activation)
        c = self.assign(h)
        return PooledGraph(node_features=matmul(transpose(c.matrix), h), edge_features=g.edge_features), c

    def decode(self, g, pooled, c):
        h = matmul(c.matrix, pooled.node_features) * _unpool_scale(g.num_nodes, c.num_clusters)
        return _stack(self.decoder, g, h, lambda l, g, h: l(g, h), self.activation)

    def __call__(self, g, hard=False):
        pooled, c = self.encode(g)
        return self.decode(g, pooled, _hard(c) if hard else c)


class EdgeAutoencoder(Module):
    """EHGNN x2, HyperCluster, unpool, EHGNN x3."""

    kind = "ehgnn"

    def __init__(self, d_edge, hidden, m_pool, rng, pool_dim=None, identity=False, activation="tanh"):
        self.activation = activation
        pool_dim = pool_dim or hidden
        self.d_edge, self.m_pool = d_edge, m_pool
        self.encoder = [EhgnnLayer(d_edge, hidden, rng), EhgnnLayer(hidden, pool_dim, rng)]
        self.assign = AssignmentLayer(pool_dim, m_pool, rng, identity=identity)
        self.decoder = [
            EhgnnLayer(pool_dim, hidden, rng),
            EhgnnLayer(hidden, hidden, rng),
            EhgnnLayer(hidden, d_edge, rng),
        ]

    def encode(self, g):
        e = _stack(self.encoder, g, g.edge_features, lambda l, g, h: l(g, h), self.activation)
        c = self.assign(e)
        return hypercluster(g, e, c), c

    def decode(self, g, pooled, c):
        e = hypercluster_unpool(g, pooled, c) * _unpool_scale(g.num_edges, c.num_clusters)
        return _stack(self.decoder, g, e, lambda l, g, h: l(g, h), self.activation)

    def __call__(self, g, hard=False):
        pooled, c = self.encode(g)
        return self.decode(g, pooled, _hard(c) if hard else c)


class BaselineEdgeAutoencoder(Module):
    """Edge-aware node GNN x2, node clustering, unpool, GCN x3, endpoint mean.

    The encoder reads edge features as auxiliary input; the decoder never
    sees them, and each edge is read out as the mean of its endpoints.
    """

    def __init__(self, variant, d_node, d_edge, hidden, n_pool, rng, pool_dim=None, activation="tanh"):
        self.activation = activation
        pool_dim = pool_dim or hidden
        self.kind = variant.upper()
        self.d_edge, self.n_pool = d_edge, n_pool
        self.encoder = [
            make_baseline(variant, d_node, hidden, d_edge, rng),
            make_baseline(variant, hidden, pool_dim, d_edge, rng),
        ]
        self.assign = AssignmentLayer(pool_dim, n_pool, rng)
        self.decoder = [GcnLayer(pool_dim, hidden, rng), GcnLayer(hidden, hidden, rng), GcnLayer(hidden, d_edge, rng)]

    def encode(self, g):
        h = _stack(self.encoder, g, g.node_features, lambda l, g, h: l(g, h, g.edge_features), self.activation)
        c = self.assign(h)
        return PooledGraph(node_features=matmul(transpose(c.matrix), h), edge_features=g.edge_features), c

    def decode(self, g, pooled, c):
        h = matmul(c.matrix, pooled.node_features) * _unpool_scale(g.num_nodes, c.num_clusters)
        return endpoint_mean(g, _stack(self.decoder, g, h, lambda l, g, h: l(g, h), self.activation))

    def __call__(self, g, hard=False):
        pooled, c = self.encode(g)
        return self.decode(g, pooled, _hard(c) if hard else c)


class ReconstructionModel(Module):
    """Separate node and edge autoencoders sharing one input graph.

    Either part may be ``None``. ``categorical_nodes`` / ``categorical_edges``
    select cross-entropy (targets are one-hot rows) over MSE.
    """

    def __init__(self, node_ae, edge_ae, categorical_nodes=False, categorical_edges=False):
        self.node_ae = node_ae
        self.edge_ae = edge_ae
        self.categorical_nodes = categorical_nodes
        self.categorical_edges = categorical_edges

    def __call__(self, g, hard=False):
        x = self.node_ae(g, hard) if self.node_ae is not None else None
        e = self.edge_ae(g, hard) if self.edge_ae is not None and g.num_edges else None
        return x, e


def build_reconstruction_model(
    sample,
    hidden=16,
    node_ratio=None,
    edge_ratio=0.25,
    edge_model="ehgnn",
    categorical=False,
    seed=0,
    pool_dim=None,
    identity=False,
):
    """Size a :class:`ReconstructionModel` from a representative graph.

    ``node_ratio=None`` leaves out the node autoencoder; ``edge_model`` is
    ``"ehgnn"`` or a baseline name (EGCN, MPNN, RGCN, EGNN). For baselines
    the node clustering keeps ``edge_ratio`` of the nodes.
    """
    rng = np.random.default_rng(seed)
    n, m = sample.num_nodes, sample.num_edges
    d, d_edge = sample.node_features.cols, sample.edge_features.cols
    node_ae = None
    if node_ratio is not None:
        node_pool_dim = d if pool_dim == "input" else pool_dim
        node_ae = NodeAutoencoder(d, hidden, num_pooled(n, node_ratio), rng, node_pool_dim, identity and node_ratio >= 1)
    edge_pool_dim = d_edge if pool_dim == "input" else pool_dim
    if edge_model.lower() == "ehgnn":
        edge_ae = EdgeAutoencoder(d_edge, hidden, num_pooled(m, edge_ratio), rng, edge_pool_dim, identity and edge_ratio >= 1)
    else:
        edge_ae = BaselineEdgeAutoencoder(edge_model, d, d_edge, hidden, num_pooled(n, edge_ratio), rng, edge_pool_dim)
    return ReconstructionModel(node_ae, edge_ae, categorical_nodes=categorical, categorical_edges=categorical)


class ClassificationModel(Module):
    """Interleaved GCN / EHGNN stacks with HyperDrop after every edge layer.

    Readout per layer is ``[mean nodes | mean edges]``, summed over layers,
    then a linear classifier.
    """

    def __init__(self, d_node, d_edge, hidden, num_classes, keep_ratio, rng, num_layers=3):
        if num_classes < 2:
            raise ValueError(f"need at least two classes, got {num_classes}")
        self.hidden, self.num_classes, self.keep_ratio = hidden, num_classes, keep_ratio
        self.node_layers = [GcnLayer(d_node if i == 0 else hidden, hidden, rng) for i in range(num_layers)]
        self.edge_layers = [EhgnnLayer(d_edge if i == 0 else hidden, hidden, rng) for i in range(num_layers)]
        self.scorers = [ScoreLayer(hidden, rng) for _ in range(num_layers)]
        self.classifier = glorot(rng, 2 * hidden, num_classes)
        self.classifier_bias = Tensor(np.zeros((1, num_classes)), requires_grad=True)

    def __call__(self, g, keep_ratio=None):
        keep = self.keep_ratio if keep_ratio is None else keep_ratio
        cur, x, e, w = g, g.node_features, g.edge_features, None
        readout = None
        for gcn, ehgnn, scorer in zip(self.node_layers, self.edge_layers, self.scorers):
            x = relu(gcn(cur, x, w))
            if cur.num_edges:
                e = relu(ehgnn(cur, e))
                pooled = hyperdrop(cur, e, scorer(cur, e), keep)
                cur, e, w = pooled.graph, pooled.edge_features, pooled.scores
            else:
                e = Tensor(np.zeros((0, self.hidden)))
            r = concat_cols(column_mean(x), column_mean(e))
            readout = r if readout is None else add(readout, r)
        return add(matmul(readout, self.classifier), self.classifier_bias)
