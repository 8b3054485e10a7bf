# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot sparse kernels.

Signatures and results match ``ehgnn._kernels_py`` exactly; inputs are
assumed to be pre-validated by ``ehgnn.kernels``.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef cnp.int64_t idx_t


def scatter_sum(const double[:, ::1] src, const idx_t[::1] index, Py_ssize_t num_targets):
    cdef Py_ssize_t k = src.shape[0]
    cdef Py_ssize_t d = src.shape[1]
    out_arr = np.zeros((num_targets, d), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, t
    with nogil:
        for i in range(k):
            t = index[i]
            for j in range(d):
                out[t, j] += src[i, j]
    return out_arr


def hyperedge_list(const idx_t[:, ::1] edges):
    cdef Py_ssize_t m = edges.shape[0]
    out_arr = np.empty((2 * m, 2), dtype=np.int64)
    cdef idx_t[:, ::1] out = out_arr
    cdef Py_ssize_t i
    with nogil:
        for i in range(m):
            out[2 * i, 0] = i
            out[2 * i, 1] = edges[i, 0]
            out[2 * i + 1, 0] = i
            out[2 * i + 1, 1] = edges[i, 1]
    return out_arr


def line_graph_pairs(const idx_t[:, ::1] edges, Py_ssize_t num_nodes):
    cdef Py_ssize_t m = edges.shape[0]
    cdef Py_ssize_t v, i, a, b, pos, total = 0
    offsets_arr = np.zeros(num_nodes + 1, dtype=np.int64)
    cdef idx_t[::1] offsets = offsets_arr
    cdef idx_t[::1] fill
    incident_arr = np.empty(2 * m, dtype=np.int64)
    cdef idx_t[::1] incident = incident_arr

    with nogil:
        for i in range(m):
            offsets[edges[i, 0] + 1] += 1
            offsets[edges[i, 1] + 1] += 1
        for v in range(num_nodes):
            total += (offsets[v + 1] * (offsets[v + 1] - 1)) // 2
            offsets[v + 1] += offsets[v]

    fill_arr = offsets_arr[:-1].copy()
    fill = fill_arr
    out_arr = np.empty((total, 2), dtype=np.int64)
    cdef idx_t[:, ::1] out = out_arr

    with nogil:
        # edges visited in index order, so each node's incidence run is ascending
        for i in range(m):
            v = edges[i, 0]
            incident[fill[v]] = i
            fill[v] += 1
            v = edges[i, 1]
            incident[fill[v]] = i
            fill[v] += 1
        pos = 0
        for v in range(num_nodes):
            for a in range(offsets[v], offsets[v + 1]):
                for b in range(a + 1, offsets[v + 1]):
                    out[pos, 0] = incident[a]
                    out[pos, 1] = incident[b]
                    pos += 1
    return out_arr
