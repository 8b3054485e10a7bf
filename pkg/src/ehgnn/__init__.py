"""Edge representation learning on dual hypergraphs."""
from .dht import dht, dht_inverse, line_graph, select_dual_nodes
from .graph import DualHypergraph, Graph, validate_graph
from .kernels import BACKEND
from .layers import EhgnnLayer, GcnLayer, make_baseline
from .pooling import hypercluster, hypercluster_unpool, hyperdrop, topk_select

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DualHypergraph",
    "EhgnnLayer",
    "GcnLayer",
    "Graph",
    "dht",
    "dht_inverse",
    "hypercluster",
    "hypercluster_unpool",
    "hyperdrop",
    "line_graph",
    "make_baseline",
    "select_dual_nodes",
    "topk_select",
    "validate_graph",
]
