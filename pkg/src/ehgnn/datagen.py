"""Seeded synthetic graph families and the JSON graph format."""
from __future__ import annotations

import colorsys
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .autodiff import Tensor
from .errors import GraphFormatError
from .graph import DualHypergraph, Graph

# unordered pairs of the three node values, in category order
PAIR_CATEGORIES = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]
_PAIR_INDEX = {p: i for i, p in enumerate(PAIR_CATEGORIES)}
DEGREE_CAP = 4


def one_hot(labels, num_classes):
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros((labels.shape[0], num_classes))
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


def degree_features(num_nodes, edges):
    deg = np.bincount(np.asarray(edges, dtype=np.int64).reshape(-1), minlength=num_nodes)
    return one_hot(np.minimum(deg, DEGREE_CAP), DEGREE_CAP + 1)


def _structural_graph(num_nodes, edges, label=None):
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    return Graph(
        num_nodes,
        degree_features(num_nodes, edges),
        edges,
        np.ones((edges.shape[0], 1)),
        label=label,
    )


# ---------------------------------------------------------------- two arcs


def two_arcs(n_points, rng, noise=0.05):
    """Points on two interleaved half circles with Gaussian jitter."""
    n_upper = n_points // 2
    n_lower = n_points - n_upper
    t_up = np.sort(rng.uniform(0.0, np.pi, n_upper))
    t_low = np.sort(rng.uniform(0.0, np.pi, n_lower))
    upper = np.stack([np.cos(t_up), np.sin(t_up)], axis=1)
    lower = np.stack([1.0 - np.cos(t_low), 0.5 - np.sin(t_low)], axis=1)
    return np.vstack([upper, lower]) + rng.normal(0.0, noise, size=(n_points, 2))


def knn_edges(points, k):
    """Undirected k-nearest-neighbour edges, deduplicated, sorted ``(u < v)``."""
    diff = points[:, None, :] - points[None, :, :]
    dist = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(dist, np.inf)
    nearest = np.argsort(dist, axis=1, kind="stable")[:, :k]
    u = np.repeat(np.arange(points.shape[0]), k)
    v = nearest.reshape(-1)
    pairs = np.stack([np.minimum(u, v), np.maximum(u, v)], axis=1)
    return np.unique(pairs, axis=0)


def kmeans(points, k, rng, iters=100):
    """Lloyd's algorithm that never leaves a cluster empty. Returns labels."""
    centers = points[rng.choice(points.shape[0], size=k, replace=False)].copy()
    labels = np.full(points.shape[0], -1)
    for _ in range(iters):
        d = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new = d.argmin(axis=1)
        for c in range(k):
            if not np.any(new == c):
                # steal the point farthest from its own centre
                far = int(np.argmax(d[np.arange(len(new)), new]))
                new[far] = c
        if np.array_equal(new, labels):
            break
        labels = new
        for c in range(k):
            centers[c] = points[labels == c].mean(axis=0)
    return labels


def palette(k):
    """``k`` distinct RGB colours in ``[0, 1]^3``."""
    return np.array([colorsys.hsv_to_rgb(i / k, 0.75, 0.9) for i in range(k)])


def gen_clustered_edge_colors(n_points, k_neighbors, n_color_clusters, seed):
    """Two-arc kNN graph whose edge colours follow spatial clusters.

    Node features are the 2-D coordinates; each edge takes the colour of
    the k-means cluster its midpoint falls in.
    """
    if n_points < 4:
        raise ValueError(f"need at least 4 points, got {n_points}")
    if not 1 <= k_neighbors < n_points:
        raise ValueError(f"k_neighbors must be in [1, {n_points}), got {k_neighbors}")
    if n_color_clusters < 1:
        raise ValueError(f"need at least one colour cluster, got {n_color_clusters}")
    rng = np.random.default_rng(seed)
    points = two_arcs(n_points, rng)
    edges = knn_edges(points, k_neighbors)
    if edges.shape[0] < n_color_clusters:
        raise ValueError(f"{edges.shape[0]} edges cannot fill {n_color_clusters} colour clusters")
    mid = 0.5 * (points[edges[:, 0]] + points[edges[:, 1]])
    labels = kmeans(mid, n_color_clusters, rng)
    return Graph(n_points, points, edges, palette(n_color_clusters)[labels])


# ---------------------------------------------------------------- random graphs


def _decode_pairs(index, n):
    """Map row-major upper-triangle positions to ``(i, j)``, ``i < j``."""
    index = np.asarray(index, dtype=np.int64)
    total = n * (n - 1) // 2
    # position counted from the end falls in row i where (n-1-i)(n-i)/2 > remaining
    rem = total - 1 - index
    r = np.floor((np.sqrt(8.0 * rem + 1.0) - 1.0) / 2.0).astype(np.int64)
    # guard against sqrt rounding
    r = np.where((r + 1) * (r + 2) // 2 <= rem, r + 1, r)
    r = np.where(r * (r + 1) // 2 > rem, r - 1, r)
    i = n - 2 - r
    row_start = i * (2 * n - i - 1) // 2
    j = index - row_start + i + 1
    return np.stack([i, j], axis=1)


def random_simple_edges(n, m, rng):
    total = n * (n - 1) // 2
    if m > total:
        raise ValueError(f"m={m} exceeds the {total} possible edges on {n} nodes")
    if m < 0:
        raise ValueError(f"negative edge count {m}")
    chosen = np.sort(rng.choice(total, size=m, replace=False)) if m else np.empty(0, np.int64)
    return _decode_pairs(chosen, n)


def gen_erdos_renyi_paired(n, m, seed):
    """Uniform simple graph with exactly ``m`` edges and value-pair edge categories.

    Each node draws a value in {0, 1, 2} (one-hot node feature); each edge
    is one-hot over the six unordered pairs of its endpoint values.
    """
    if n < 2:
        raise ValueError(f"need at least 2 nodes, got {n}")
    rng = np.random.default_rng(seed)
    edges = random_simple_edges(n, m, rng)
    values = rng.integers(0, 3, size=n)
    return Graph(n, one_hot(values, 3), edges, one_hot(edge_categories(values, edges), 6))


def edge_categories(values, edges):
    a = values[edges[:, 0]]
    b = values[edges[:, 1]]
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    return np.array([_PAIR_INDEX[(int(x), int(y))] for x, y in zip(lo, hi)], dtype=np.int64)


def gen_star(n_leaves):
    if n_leaves < 1:
        raise ValueError(f"a star needs at least one leaf, got {n_leaves}")
    edges = [(0, i) for i in range(1, n_leaves + 1)]
    return _structural_graph(n_leaves + 1, edges)


def gen_scale_free(n, seed, attach=4):
    """Preferential attachment (Barabasi-Albert).

    Starts from a star on ``attach + 1`` nodes; every later node links to
    ``attach`` distinct existing nodes drawn proportionally to degree, so
    ``m = attach * (n - attach)``.
    """
    if n < 2:
        raise ValueError(f"need at least 2 nodes, got {n}")
    attach = min(attach, n - 1)
    if attach < 1:
        raise ValueError(f"attach must be positive, got {attach}")
    rng = np.random.default_rng(seed)
    edges = [(0, i) for i in range(1, attach + 1)]
    repeated = [0] * attach + list(range(1, attach + 1))
    for new in range(attach + 1, n):
        targets = set()
        while len(targets) < attach:
            targets.add(repeated[int(rng.integers(len(repeated)))])
        for t in sorted(targets):
            edges.append((t, new))
            repeated.extend((t, new))
    return _structural_graph(n, edges)


def gen_cycle_or_path(n, is_cycle):
    """Cycle or path on ``n`` nodes, labelled 1 for a cycle and 0 for a path."""
    if n < (3 if is_cycle else 2):
        raise ValueError(f"{'cycle' if is_cycle else 'path'} needs more than {n} nodes")
    edges = [(i, i + 1) for i in range(n - 1)]
    if is_cycle:
        edges.append((n - 1, 0))
    return _structural_graph(n, edges, label=int(is_cycle))


# ---------------------------------------------------------------- datasets


def cycle_path_dataset(num_graphs, n_min=6, n_max=12, seed=0):
    """Balanced cycle-vs-path graphs with sizes drawn uniformly from ``[n_min, n_max]``."""
    rng = np.random.default_rng(seed)
    sizes = rng.integers(n_min, n_max + 1, size=num_graphs)
    flags = np.arange(num_graphs) % 2 == 0
    rng.shuffle(flags)
    return [gen_cycle_or_path(int(n), bool(c)) for n, c in zip(sizes, flags)]


def erdos_renyi_paired_dataset(num_graphs, n, m, seed=0):
    seeds = np.random.SeedSequence(seed).spawn(num_graphs)
    return [gen_erdos_renyi_paired(n, m, s) for s in seeds]


@dataclass
class GeneratorSpec:
    family: str
    params: dict = field(default_factory=dict)
    seed: int = 0


FAMILIES = ("clustered_edge_colors", "erdos_renyi_paired", "star", "scale_free", "cycle_or_path")


def generate(spec):
    """Build one graph from a :class:`GeneratorSpec`."""
    p = dict(spec.params)
    if spec.family == "clustered_edge_colors":
        return gen_clustered_edge_colors(
            int(p.get("n_points", 200)), int(p.get("k_neighbors", 4)), int(p.get("n_color_clusters", 3)), spec.seed
        )
    if spec.family == "erdos_renyi_paired":
        return gen_erdos_renyi_paired(int(p.get("n", 50)), int(p.get("m", 150)), spec.seed)
    if spec.family == "star":
        return gen_star(int(p.get("leaves", p.get("n_leaves", 4))))
    if spec.family == "scale_free":
        return gen_scale_free(int(p.get("n", 100)), spec.seed, int(p.get("attach", 4)))
    if spec.family == "cycle_or_path":
        return gen_cycle_or_path(int(p.get("n", 6)), _truthy(p.get("cycle", True)))
    raise ValueError(f"unknown family {spec.family!r}; choose from {', '.join(FAMILIES)}")


def _truthy(value):
    if isinstance(value, str):
        return value.strip().lower() in ("1", "true", "yes", "on")
    return bool(value)


# ---------------------------------------------------------------- JSON


def _rows(t):
    return [[float(x) for x in row] for row in t.data]


def graph_to_dict(g):
    out = {
        "num_nodes": g.num_nodes,
        "node_features": _rows(g.node_features),
        "edges": g.edges.tolist(),
        "edge_features": _rows(g.edge_features),
    }
    # widths cannot be inferred from empty arrays
    if g.num_nodes == 0:
        out["node_feature_dim"] = g.node_features.cols
    if g.num_edges == 0:
        out["edge_feature_dim"] = g.edge_features.cols
    if g.label is not None:
        out["label"] = int(g.label)
    return out


def _matrix(rows, count, width_key, obj, what):
    width = obj.get(width_key)
    if not isinstance(rows, list) or len(rows) != count:
        got = len(rows) if isinstance(rows, list) else type(rows).__name__
        raise GraphFormatError(f"{what}: expected {count} rows, got {got}")
    if count == 0:
        return np.zeros((0, int(width or 0)))
    try:
        arr = np.array(rows, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise GraphFormatError(f"{what}: rows must be equal-length numeric arrays ({exc})") from None
    if arr.ndim != 2:
        raise GraphFormatError(f"{what}: rows must be equal-length numeric arrays")
    return arr


def graph_from_dict(obj):
    if not isinstance(obj, dict):
        raise GraphFormatError("graph JSON must be an object")
    for key in ("num_nodes", "node_features", "edges"):
        if key not in obj:
            raise GraphFormatError(f"missing required key {key!r}")
    n = obj["num_nodes"]
    if not isinstance(n, int) or n < 0:
        raise GraphFormatError(f"num_nodes must be a non-negative integer, got {n!r}")
    edges = obj["edges"]
    if not isinstance(edges, list) or any(
        not isinstance(e, list) or len(e) != 2 or not all(isinstance(v, int) for v in e) for e in edges
    ):
        raise GraphFormatError("edges must be an array of [u, v] integer pairs")
    x = _matrix(obj["node_features"], n, "node_feature_dim", obj, "node_features")
    if "edge_features" in obj:
        e = _matrix(obj["edge_features"], len(edges), "edge_feature_dim", obj, "edge_features")
    else:
        e = np.zeros((len(edges), int(obj.get("edge_feature_dim", 0))))
        if e.shape[1]:
            raise GraphFormatError("edge_features missing but edge_feature_dim is non-zero")
    return Graph(n, x, np.array(edges, dtype=np.int64).reshape(-1, 2), e, label=obj.get("label"))


def dual_to_dict(h):
    out = {
        "kind": "dual_hypergraph",
        "num_dual_nodes": h.num_dual_nodes,
        "dual_node_features": _rows(h.dual_node_features),
        "hyperedges": h.hyperedges.tolist(),
        "num_hyperedges": h.num_hyperedges,
        "hyperedge_features": _rows(h.hyperedge_features),
        "dual_node_feature_dim": h.dual_node_features.cols,
        "hyperedge_feature_dim": h.hyperedge_features.cols,
    }
    if h.label is not None:
        out["label"] = int(h.label)
    return out


def dual_from_dict(obj):
    try:
        m, n = obj["num_dual_nodes"], obj["num_hyperedges"]
        pairs = np.array(obj["hyperedges"], dtype=np.int64).reshape(-1, 2)
    except (KeyError, TypeError, ValueError) as exc:
        raise GraphFormatError(f"malformed dual hypergraph: {exc}") from None
    e = _matrix(obj.get("dual_node_features", []), m, "dual_node_feature_dim", obj, "dual_node_features")
    x = _matrix(obj.get("hyperedge_features", []), n, "hyperedge_feature_dim", obj, "hyperedge_features")
    h = DualHypergraph(m, Tensor(e), pairs, n, Tensor(x), label=obj.get("label"))
    h.check_structure()
    return h


def _load(path):
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        line = text.splitlines()[exc.lineno - 1] if exc.lineno - 1 < len(text.splitlines()) else ""
        raise GraphFormatError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}\n    {line.strip()}") from None


def _dump(obj, path):
    # float repr is the shortest string that parses back to the same double
    Path(path).write_text(json.dumps(obj) + "\n", encoding="utf-8")


def read_graph_json(path):
    return graph_from_dict(_load(path))


def write_graph_json(g, path):
    _dump(graph_to_dict(g), path)


def read_json_any(path):
    """Load either a graph or a dual hypergraph file."""
    obj = _load(path)
    if isinstance(obj, dict) and obj.get("kind") == "dual_hypergraph":
        return dual_from_dict(obj)
    return graph_from_dict(obj)


def write_dual_json(h, path):
    _dump(dual_to_dict(h), path)
