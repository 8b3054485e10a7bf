"""Pure numpy implementations of the sparse kernels.

Used when the compiled extension is unavailable or when
``EHGNN_PURE_PYTHON=1`` is set. Every function here has an identically
behaving counterpart in ``_kernels.pyx``.
"""
import numpy as np


def scatter_sum(src, index, num_targets):
    out = np.zeros((num_targets, src.shape[1]), dtype=np.float64)
    np.add.at(out, index, src)
    return out


def hyperedge_list(edges):
    m = edges.shape[0]
    out = np.empty((2 * m, 2), dtype=np.int64)
    out[:, 0] = np.repeat(np.arange(m, dtype=np.int64), 2)
    out[:, 1] = edges.reshape(-1)
    return out


def line_graph_pairs(edges, num_nodes):
    m = edges.shape[0]
    if m == 0:
        return np.empty((0, 2), dtype=np.int64)
    nodes = edges.reshape(-1)
    edge_ids = np.repeat(np.arange(m, dtype=np.int64), 2)
    order = np.argsort(nodes, kind="stable")
    nodes, edge_ids = nodes[order], edge_ids[order]
    deg = np.bincount(nodes, minlength=num_nodes)
    starts = np.concatenate(([0], np.cumsum(deg)[:-1]))

    chunks = []
    # nodes with equal degree share one triu pattern, so each group is one gather
    for k in np.unique(deg[deg >= 2]):
        group = np.flatnonzero(deg == k)
        rows = edge_ids[starts[group][:, None] + np.arange(k)]
        ia, ib = np.triu_indices(k, 1)
        chunks.append((group, np.stack([rows[:, ia], rows[:, ib]], axis=-1)))
    if not chunks:
        return np.empty((0, 2), dtype=np.int64)

    # emit in node order to match the compiled kernel
    per_node = {}
    for group, pairs in chunks:
        for g, p in zip(group, pairs):
            per_node[g] = p
    return np.concatenate([per_node[v] for v in sorted(per_node)]).astype(np.int64)
