"""Sparse kernel dispatch.

The compiled extension ``ehgnn._kernels`` is used when it was built and
``EHGNN_PURE_PYTHON`` is not set; otherwise the numpy fallback is used.
``BACKEND`` names the active implementation.
"""
import os

import numpy as np

from . import _kernels_py

try:
    if os.environ.get("EHGNN_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-python kernels requested")
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

_impl = _compiled if _compiled is not None else _kernels_py
BACKEND = "cython" if _compiled is not None else "python"


def implementations():
    """Return ``{name: module}`` for every kernel backend available here."""
    found = {"python": _kernels_py}
    if _compiled is not None:
        found["cython"] = _compiled
    else:
        try:
            from . import _kernels
        except ImportError:
            pass
        else:
            found["cython"] = _kernels
    return found


def _as_index(index):
    return np.ascontiguousarray(index, dtype=np.int64)


def scatter_sum(src, index, num_targets):
    """Sum rows of ``src`` into ``num_targets`` buckets given by ``index``."""
    src = np.ascontiguousarray(src, dtype=np.float64)
    return _impl.scatter_sum(src, _as_index(index), int(num_targets))


def hyperedge_list(edges):
    """Reshape an ``(m, 2)`` edge list into the ``(2m, 2)`` dual incidence list."""
    edges = np.ascontiguousarray(edges, dtype=np.int64).reshape(-1, 2)
    return _impl.hyperedge_list(edges)


def line_graph_pairs(edges, num_nodes):
    """All pairs ``(i, j)``, ``i < j``, of edges sharing an endpoint."""
    edges = np.ascontiguousarray(edges, dtype=np.int64).reshape(-1, 2)
    return _impl.line_graph_pairs(edges, int(num_nodes))
