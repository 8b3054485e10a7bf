"""Message-passing layers.

``GcnLayer`` passes messages between nodes; ``EhgnnLayer`` passes them
between edges by running node message passing on the dual hypergraph.
The four edge-aware baselines update nodes only and read edge features
as auxiliary input.

Every layer returns the pre-activation output; callers apply any
nonlinearity.
"""
from __future__ import annotations

import numpy as np

from .autodiff import (
    Tensor,
    add,
    gather_rows,
    glorot,
    matmul,
    mul,
    scale_rows,
    scatter_aggregate,
    tanh,
)
from .dht import dht
from .errors import DimensionError, EncodingError


class Module:
    """Collects trainable tensors from attributes, in definition order."""

    def parameters(self):
        params = []
        for value in vars(self).values():
            params.extend(_params_of(value))
        return params


def _params_of(value):
    if isinstance(value, Tensor):
        return [value] if value.requires_grad else []
    if isinstance(value, Module):
        return value.parameters()
    if isinstance(value, (list, tuple)):
        return [p for item in value for p in _params_of(item)]
    return []


def _bias(cols):
    return Tensor(np.zeros((1, cols)), requires_grad=True)


def _check_cols(x, expected, what):
    if x.cols != expected:
        raise DimensionError(f"{what} has {x.cols} columns, layer expects {expected}")


def gcn_normalizer(g):
    """``1 / sqrt(deg + 1)`` per node: the self-loop augmented GCN scale."""
    return 1.0 / np.sqrt(g.degrees + 1.0)


class GcnLayer(Module):
    def __init__(self, d_in, d_out, rng):
        self.d_in, self.d_out = d_in, d_out
        self.weight = glorot(rng, d_in, d_out)
        self.bias = _bias(d_out)

    def __call__(self, g, x=None, edge_weight=None):
        """``W . sum_{u in N(v) + v} n_uv x_u + b`` with ``n_uv = 1/sqrt((deg_u+1)(deg_v+1))``.

        ``edge_weight`` (``m x 1``) scales each neighbour term; the
        normalisation itself always uses unweighted degrees.
        """
        x = g.node_features if x is None else x
        _check_cols(x, self.d_in, "node features")
        norm = gcn_normalizer(g)
        src, dst, eid = g.message_index
        msgs = scale_rows(gather_rows(x, src), norm[src] * norm[dst])
        if edge_weight is not None:
            if edge_weight.shape != (g.num_edges, 1):
                raise DimensionError(f"edge weights {edge_weight.shape} for {g.num_edges} edges")
            msgs = scale_rows(msgs, gather_rows(edge_weight, eid))
        agg = add(scatter_aggregate(msgs, dst, g.num_nodes, "sum"), scale_rows(x, norm * norm))
        return add(matmul(agg, self.weight), self.bias)


def gcn_forward(layer, g, x=None, edge_weight=None):
    return layer(g, x, edge_weight)


def hypergraph_mean_pass(h, e):
    """Node -> hyperedge -> node mean aggregation over a dual hypergraph.

    Stage one averages each hyperedge's dual-node features (hyperedges
    with no members get zero); stage two averages, for every dual node,
    the stage-one features of its two hyperedges.
    """
    dual_idx, hyper_idx = h.hyperedges[:, 0], h.hyperedges[:, 1]
    per_hyperedge = scatter_aggregate(gather_rows(e, dual_idx), hyper_idx, h.num_hyperedges, "mean")
    return scatter_aggregate(gather_rows(per_hyperedge, hyper_idx), dual_idx, h.num_dual_nodes, "mean")


class EhgnnLayer(Module):
    """Edge update ``W (E_i + mean over i's endpoints of mean incident E) + b``."""

    def __init__(self, d_in, d_out, rng):
        self.d_in, self.d_out = d_in, d_out
        self.weight = glorot(rng, d_in, d_out)
        self.bias = _bias(d_out)

    def __call__(self, g, e=None):
        e = g.edge_features if e is None else e
        _check_cols(e, self.d_in, "edge features")
        if e.rows != g.num_edges:
            raise DimensionError(f"{e.rows} edge feature rows for {g.num_edges} edges")
        h = dht(g)
        agg = add(hypergraph_mean_pass(h, e), e)
        return add(matmul(agg, self.weight), self.bias)


def ehgnn_forward(layer, g, e=None):
    return layer(g, e)


# ---------------------------------------------------------------- baselines


class EgcnLayer(Module):
    """Edge-aware GCN: neighbour terms are ``x_u + E_uv`` before normalisation.

    Edge features are mapped to the node width by a linear encoder
    ``edge_weight`` (no bias), so all-zero edges reduce to plain GCN.
    """

    variant = "EGCN"

    def __init__(self, d_in, d_out, d_edge, rng):
        self.d_in, self.d_out, self.d_edge = d_in, d_out, d_edge
        self.weight = glorot(rng, d_in, d_out)
        self.bias = _bias(d_out)
        self.edge_weight = glorot(rng, d_edge, d_in) if d_edge else None

    def __call__(self, g, x=None, e=None):
        x = g.node_features if x is None else x
        e = g.edge_features if e is None else e
        _check_cols(x, self.d_in, "node features")
        norm = gcn_normalizer(g)
        src, dst, eid = g.message_index
        msgs = gather_rows(x, src)
        if self.edge_weight is not None and e.cols:
            _check_cols(e, self.d_edge, "edge features")
            msgs = add(msgs, gather_rows(matmul(e, self.edge_weight), eid))
        msgs = scale_rows(msgs, norm[src] * norm[dst])
        agg = add(scatter_aggregate(msgs, dst, g.num_nodes, "sum"), scale_rows(x, norm * norm))
        return add(matmul(agg, self.weight), self.bias)


class MpnnLayer(Module):
    """``W x_v + W_msg sum_u x_u * tanh(E_uv W_e + b_e)``.

    The edge MLP produces a per-channel gate on the neighbour features.
    """

    variant = "MPNN"

    def __init__(self, d_in, d_out, d_edge, rng):
        self.d_in, self.d_out, self.d_edge = d_in, d_out, d_edge
        self.weight = glorot(rng, d_in, d_out)
        self.message_weight = glorot(rng, d_in, d_out)
        self.edge_mlp_weight = glorot(rng, d_edge, d_in)
        self.edge_mlp_bias = _bias(d_in)
        self.bias = _bias(d_out)

    def edge_mlp(self, e):
        return tanh(add(matmul(e, self.edge_mlp_weight), self.edge_mlp_bias))

    def __call__(self, g, x=None, e=None):
        x = g.node_features if x is None else x
        e = g.edge_features if e is None else e
        _check_cols(x, self.d_in, "node features")
        _check_cols(e, self.d_edge, "edge features")
        src, dst, eid = g.message_index
        gate = gather_rows(self.edge_mlp(e), eid)
        msgs = mul(gather_rows(x, src), gate)
        agg = scatter_aggregate(msgs, dst, g.num_nodes, "sum")
        out = add(matmul(x, self.weight), matmul(agg, self.message_weight))
        return add(out, self.bias)


def edge_types(e, num_relations):
    """Relation index per edge from one-hot rows; anything else is an error."""
    data = e.data if isinstance(e, Tensor) else np.asarray(e, dtype=np.float64)
    if data.ndim != 2 or data.shape[1] != num_relations:
        raise EncodingError(f"expected one-hot edge features with {num_relations} columns, got {data.shape}")
    if data.shape[0]:
        binary = (data == 0) | (data == 1)
        ok = binary.all(axis=1) & (data.sum(axis=1) == 1)
        if not ok.all():
            row = int(np.flatnonzero(~ok)[0])
            raise EncodingError(f"edge {row} feature {data[row].tolist()} is not one-hot")
    return data.argmax(axis=1).astype(np.int64) if data.shape[0] else np.empty(0, np.int64)


class RgcnLayer(Module):
    """``W x_v + sum_r mean_{u in N_r(v)} W_r x_u`` over categorical edge types."""

    variant = "RGCN"

    def __init__(self, d_in, d_out, num_relations, rng):
        self.d_in, self.d_out, self.num_relations = d_in, d_out, num_relations
        self.weight = glorot(rng, d_in, d_out)
        self.relation_weights = [glorot(rng, d_in, d_out) for _ in range(num_relations)]
        self.bias = _bias(d_out)

    def __call__(self, g, x=None, e=None):
        x = g.node_features if x is None else x
        e = g.edge_features if e is None else e
        _check_cols(x, self.d_in, "node features")
        rel = edge_types(e, self.num_relations)
        src, dst, eid = g.message_index
        rel = rel[eid]
        out = matmul(x, self.weight)
        for r, w_r in enumerate(self.relation_weights):
            mask = rel == r
            if not mask.any():
                continue
            agg = scatter_aggregate(gather_rows(x, src[mask]), dst[mask], g.num_nodes, "mean")
            out = add(out, matmul(agg, w_r))
        return add(out, self.bias)


class EgnnLayer(Module):
    """``W sum_{u in N(v) + v} a_uv x_u`` with scalar edge gates ``a``.

    Gates come from a one-output edge layer on the dual hypergraph passed
    through tanh; the self term has gate 1.
    """

    variant = "EGNN"

    def __init__(self, d_in, d_out, d_edge, rng):
        self.d_in, self.d_out, self.d_edge = d_in, d_out, d_edge
        self.gate = EhgnnLayer(d_edge, 1, rng)
        self.weight = glorot(rng, d_in, d_out)
        self.bias = _bias(d_out)

    def edge_gates(self, g, e):
        return tanh(self.gate(g, e))

    def __call__(self, g, x=None, e=None):
        x = g.node_features if x is None else x
        e = g.edge_features if e is None else e
        _check_cols(x, self.d_in, "node features")
        src, dst, eid = g.message_index
        msgs = gather_rows(x, src)
        if g.num_edges:
            msgs = scale_rows(msgs, gather_rows(self.edge_gates(g, e), eid))
        agg = add(scatter_aggregate(msgs, dst, g.num_nodes, "sum"), x)
        return add(matmul(agg, self.weight), self.bias)


BASELINES = {"EGCN": EgcnLayer, "MPNN": MpnnLayer, "RGCN": RgcnLayer, "EGNN": EgnnLayer}


def make_baseline(variant, d_in, d_out, d_edge, rng):
    """Build a baseline layer; for RGCN ``d_edge`` is the relation count."""
    try:
        cls = BASELINES[variant.upper()]
    except KeyError:
        raise ValueError(f"unknown baseline {variant!r}; choose from {sorted(BASELINES)}") from None
    return cls(d_in, d_out, d_edge, rng)


def baseline_forward(layer, g, x=None, e=None):
    return layer(g, x, e)


def endpoint_mean(g, x):
    """Edge representation as the mean of its two endpoint rows of ``x``."""
    u = gather_rows(x, g.edges[:, 0])
    v = gather_rows(x, g.edges[:, 1])
    return add(u, v) * 0.5
