"""Timing harness for the transformation and message-passing comparisons.

Structural counts (dual pairs, line-graph edges) are exact and machine
independent; wall times are medians after a discarded warm-up run.
"""
from __future__ import annotations

import csv
import statistics
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import kernels
from .autodiff import Tensor, no_grad
from .datagen import gen_scale_free, random_simple_edges
from .dht import dht, line_graph, line_graph_edge_count
from .graph import Graph
from .layers import EhgnnLayer, GcnLayer

MIN_SAMPLE_SECONDS = 2e-3


def _loops_for(fn, target=MIN_SAMPLE_SECONDS):
    """Inner loop count so one timing sample lasts at least ``target`` seconds."""
    loops = 1
    while True:
        start = time.perf_counter()
        for _ in range(loops):
            fn()
        if time.perf_counter() - start >= target or loops >= 1 << 20:
            return loops
        loops *= 4


def time_call(fn, repeats=5):
    """Median and standard deviation (seconds per call) over ``repeats`` samples."""
    fn()  # warm-up
    loops = _loops_for(fn)
    samples = []
    for _ in range(max(1, repeats)):
        start = time.perf_counter()
        for _ in range(loops):
            fn()
        samples.append((time.perf_counter() - start) / loops)
    spread = statistics.stdev(samples) if len(samples) > 1 else 0.0
    return statistics.median(samples), spread


def er_graph(n, m, seed=0, dim=1):
    rng = np.random.default_rng(seed)
    edges = random_simple_edges(n, m, rng)
    return Graph(n, rng.standard_normal((n, dim)), edges, rng.standard_normal((m, dim)))


def loglog_slope(xs, ys):
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float)), 1)[0])


def bench_transform(sizes, repeats=5, n=1000, seed=0, linegraph=True):
    """DHT vs line-graph construction on ER graphs with ``n`` nodes and ``m`` in ``sizes``.

    ``dht_net_time`` subtracts the cost of transforming an edgeless graph
    on the same nodes, which at these sizes is a large share of the total.
    """
    sizes = list(sizes)
    if sizes != sorted(sizes):
        raise ValueError("sizes must be ascending")
    empty = er_graph(n, 0, seed)
    overhead, _ = time_call(lambda: dht(empty), repeats)
    rows = []
    for m in sizes:
        g = er_graph(n, m, seed)
        dht_time, dht_std = time_call(lambda: dht(g), repeats)
        row = {
            "m": m,
            "dht_time": dht_time,
            "dht_std": dht_std,
            "dht_net_time": max(dht_time - overhead, 1e-12),
            "dht_pairs": int(dht(g).hyperedges.shape[0]),
            "linegraph_edges": line_graph_edge_count(g),
        }
        if linegraph:
            row["linegraph_time"], row["linegraph_std"] = time_call(lambda: line_graph(g), repeats)
        rows.append(row)
    return rows


def transform_slopes(rows):
    ms = [r["m"] for r in rows]
    out = {
        "dht_pairs": loglog_slope(ms, [r["dht_pairs"] for r in rows]),
        "linegraph_edges": loglog_slope(ms, [r["linegraph_edges"] for r in rows]),
        "dht_time": loglog_slope(ms, [r["dht_time"] for r in rows]),
        "dht_net_time": loglog_slope(ms, [r["dht_net_time"] for r in rows]),
    }
    if all("linegraph_time" in r for r in rows):
        out["linegraph_time"] = loglog_slope(ms, [r["linegraph_time"] for r in rows])
    return out


def default_mp_graphs(n=3000, m=12000, seed=0):
    """ER and scale-free graphs of matching size."""
    attach = max(1, round(m / n))
    return [("erdos_renyi", er_graph(n, m, seed)), ("scale_free", gen_scale_free(n, seed, attach=attach))]


def _mp_row(name, g, repeats, dim, seed):
    rng = np.random.default_rng(seed)
    x = Tensor(rng.standard_normal((g.num_nodes, dim)))
    e = Tensor(rng.standard_normal((g.num_edges, dim)))
    gcn, ehgnn = GcnLayer(dim, dim, rng), EhgnnLayer(dim, dim, rng)
    with no_grad():
        node_time, node_std = time_call(lambda: gcn(g, x), repeats)
        edge_time, edge_std = time_call(lambda: ehgnn(g, e), repeats)
    return {
        "graph": name,
        "n": g.num_nodes,
        "m": g.num_edges,
        "node_mp_time": node_time,
        "node_mp_std": node_std,
        "edge_mp_time": edge_time,
        "edge_mp_std": edge_std,
        "ratio": edge_time / node_time if node_time > 0 else float("nan"),
    }


def bench_message_passing(graphs, repeats=20, dim=16, seed=0, workers=1):
    """One GCN forward vs one EHGNN forward per graph, equal widths, no autodiff graph.

    ``graphs`` is a list of ``(name, Graph)``. ``workers > 1`` times
    independent graphs concurrently, which trades timing stability for speed.
    """
    jobs = [(name, g, repeats, dim, seed) for name, g in graphs]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(lambda job: _mp_row(*job), jobs))
    return [_mp_row(*job) for job in jobs]


def bench_kernels(sizes, repeats=5, n=1000, dim=16, seed=0):
    """Each hot kernel under every available backend."""
    rows = []
    for m in sizes:
        g = er_graph(n, m, seed)
        rng = np.random.default_rng(seed)
        src = rng.standard_normal((2 * m, dim))
        index = np.concatenate([g.edges[:, 0], g.edges[:, 1]])
        for backend, mod in kernels.implementations().items():
            cases = {
                "scatter_sum": lambda: mod.scatter_sum(src, index, n),
                "hyperedge_list": lambda: mod.hyperedge_list(g.edges),
                "line_graph_pairs": lambda: mod.line_graph_pairs(g.edges, n),
            }
            for kernel, fn in cases.items():
                t, s = time_call(fn, repeats)
                rows.append({"kernel": kernel, "m": m, "backend": backend, "time": t, "std": s})
    return rows


def kernel_speedups(rows):
    """``python_time / cython_time`` per (kernel, m); empty without a compiled backend."""
    times = {(r["kernel"], r["m"], r["backend"]): r["time"] for r in rows}
    out = []
    for (kernel, m, backend), t in times.items():
        if backend == "cython" and (kernel, m, "python") in times:
            out.append({"kernel": kernel, "m": m, "speedup": times[(kernel, m, "python")] / t})
    return out


def write_csv(rows, path):
    columns = list(dict.fromkeys(k for row in rows for k in row))
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        writer.writerows(rows)


def _cell(value):
    if isinstance(value, float):
        return f"{value:.4g}"
    return str(value)


def format_table(rows):
    if not rows:
        return "(no rows)"
    columns = list(dict.fromkeys(k for row in rows for k in row))
    cells = [[_cell(row.get(c, "")) for c in columns] for row in rows]
    widths = [max(len(c), *(len(r[i]) for r in cells)) for i, c in enumerate(columns)]
    lines = ["  ".join(c.rjust(w) for c, w in zip(columns, widths))]
    lines += ["  ".join(v.rjust(w) for v, w in zip(r, widths)) for r in cells]
    return "\n".join(lines)
