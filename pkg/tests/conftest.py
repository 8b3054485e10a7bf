import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from ehgnn.datagen import random_simple_edges
from ehgnn.graph import Graph

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_graph(rng, n, m, d=2, d_edge=2):
    """Simple graph with ``n`` nodes and ``min(m, n choose 2)`` random edges and Gaussian features."""
    m = min(m, n * (n - 1) // 2)
    edges = random_simple_edges(n, m, rng)
    # shuffle orientation so edges are not always (lo, hi)
    flip = rng.random(m) < 0.5
    edges[flip] = edges[flip][:, ::-1]
    edges = edges[rng.permutation(m)]
    return Graph(n, rng.standard_normal((n, d)), edges, rng.standard_normal((m, d_edge)))


@st.composite
def graphs(draw, max_nodes=12, max_edges=30, min_nodes=2, min_edges=0, d=2, d_edge=2):
    n = draw(st.integers(min_nodes, max_nodes))
    cap = min(max_edges, n * (n - 1) // 2)
    m = draw(st.integers(min(min_edges, cap), cap))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_graph(np.random.default_rng(seed), n, m, d, d_edge)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def path3(node_features=None, edge_features=None):
    x = np.arange(3, dtype=float).reshape(3, 1) if node_features is None else node_features
    return Graph(3, x, [(0, 1), (1, 2)], edge_features)
