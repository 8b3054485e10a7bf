"""Acceptance criteria 1-11. Each test prints one PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``.
"""
import time

import numpy as np
import pytest

from conftest import random_graph
from ehgnn import bench
from ehgnn.autodiff import Tensor, gradient_check
from ehgnn.datagen import (
    cycle_path_dataset,
    erdos_renyi_paired_dataset,
    gen_clustered_edge_colors,
    gen_erdos_renyi_paired,
)
from ehgnn.dht import dht, dht_inverse
from ehgnn.graph import to_dense_incidence
from ehgnn.layers import EhgnnLayer
from ehgnn.models import build_reconstruction_model
from ehgnn.pooling import hyperdrop
from ehgnn.tasks import (
    build_classification_model,
    evaluate,
    train_classification,
    train_reconstruction,
    tune_compression,
)
from gradcases import LAYERS, make_case
from test_layers import dense_ehgnn

SEEDS = (0, 1, 2)


@pytest.fixture
def verdict(capsys):
    def report(number, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {number:>2} {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail

    return report


def seeded_graphs(count, max_nodes, max_edges, seed):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n = int(rng.integers(1, max_nodes + 1))
        m = int(rng.integers(0, min(max_edges, n * (n - 1) // 2) + 1))
        yield random_graph(rng, n, m, d=3, d_edge=2)


def loss_halved(history):
    return history[-1]["train_loss"] < 0.5 * history[0]["train_loss"]


def test_c01_dht_bijective(verdict):
    start = time.perf_counter()
    failures = sum(dht_inverse(dht(g)) != g for g in seeded_graphs(200, 50, 200, seed=1))
    elapsed = time.perf_counter() - start
    verdict(1, failures == 0 and elapsed < 5, f"{failures} failures / 200 graphs in {elapsed:.2f}s")


def test_c02_incidence_transpose(verdict):
    failures = sum(
        not np.array_equal(dht(g).to_dense_incidence(), to_dense_incidence(g).T)
        for g in seeded_graphs(100, 30, 100, seed=2)
    )
    verdict(2, failures == 0, f"{failures} mismatches / 100 graphs")


def test_c03_sparse_dense(verdict):
    rng = np.random.default_rng(3)
    worst = 0.0
    for g in seeded_graphs(100, 20, 60, seed=3):
        layer = EhgnnLayer(2, 4, rng)
        layer.bias.data = rng.standard_normal((1, 4))
        ref = dense_ehgnn(g, g.edge_features.data, layer.weight.data, layer.bias.data)
        worst = max(worst, float(np.abs(layer(g).data - ref).max(initial=0.0)))
    verdict(3, worst <= 1e-9, f"max abs diff {worst:.2e} over 100 graphs")


def test_c04_gradient_checks(verdict):
    rng = np.random.default_rng(4)
    start = time.perf_counter()
    worst = {name: max(gradient_check(*make_case(name, rng)) for _ in range(20)) for name in LAYERS}
    elapsed = time.perf_counter() - start
    ok = max(worst.values()) < 1e-4 and elapsed < 120
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    verdict(4, ok, f"worst relative error per layer (20 instances): {detail}; {elapsed:.1f}s")


def test_c05_node_preservation(verdict):
    rng = np.random.default_rng(5)
    failures = 0
    for g in seeded_graphs(500, 30, 100, seed=5):
        if g.num_edges == 0:
            continue
        ratio = float(rng.uniform(0.01, 1.0))
        z = Tensor(np.tanh(rng.standard_normal((g.num_edges, 1))))
        pooled = hyperdrop(g, g.edge_features, z, ratio).graph
        failures += pooled.num_nodes != g.num_nodes or not np.array_equal(
            pooled.node_features.data, g.node_features.data
        )
    verdict(5, failures == 0, f"{failures} changed node sets / 500 pairs")


def _edge_mse(g, edge_model, seed):
    model = build_reconstruction_model(g, hidden=16, edge_ratio=0.25, edge_model=edge_model, seed=seed)
    _, result = train_reconstruction(model, [g], 2000, lr_edge=5e-3, seed=seed, patience=2000)
    return evaluate(model, [g]).mse, loss_halved(result.history)


def test_c06_edge_reconstruction(verdict):
    g = gen_clustered_edge_colors(200, 4, 3, seed=0)
    start = time.perf_counter()
    ok, parts = True, []
    for seed in SEEDS:
        ours, halved = _edge_mse(g, "ehgnn", seed)
        base, _ = _edge_mse(g, "EGCN", seed)
        ok &= ours <= 0.01 and ours < base and halved
        parts.append(f"seed {seed}: EHGNN {ours:.2e} vs EGCN {base:.2e}")
    elapsed = time.perf_counter() - start
    verdict(6, ok and elapsed < 600, f"edge MSE at 25% keep, {'; '.join(parts)}; {elapsed:.0f}s")


def test_c07_categorical_reconstruction(verdict):
    dataset = erdos_renyi_paired_dataset(20, 50, 150, seed=0)
    ok, parts = True, []
    for seed in SEEDS:
        model = build_reconstruction_model(dataset[0], hidden=32, edge_ratio=0.25, categorical=True, seed=seed)
        _, result = train_reconstruction(model, dataset, 600, lr_edge=5e-3, seed=seed, patience=600)
        m = evaluate(model, dataset)
        ok &= m.edge_accuracy >= 0.95 and m.exact_match >= 0.5 and loss_halved(result.history)
        parts.append(f"seed {seed}: acc {m.edge_accuracy:.3f} exact {m.exact_match:.2f}")
    verdict(7, ok, "; ".join(parts))


def test_c08_classification(verdict):
    dataset = cycle_path_dataset(200, 6, 12, seed=0)
    start = time.perf_counter()
    ok, parts = True, []
    for keep, threshold in ((0.5, 0.95), (1.0, 0.9)):
        for seed in SEEDS:
            model = build_classification_model(dataset[0], 2, hidden=32, keep_ratio=keep, seed=seed)
            _, result = train_classification(model, dataset, 20, seed=seed, lr=1e-2)
            ok &= result.test_accuracy >= threshold and loss_halved(result.history)
            parts.append(f"keep {keep} seed {seed}: {result.test_accuracy:.2f}")
    elapsed = time.perf_counter() - start
    verdict(8, ok and elapsed < 300, f"test accuracy {'; '.join(parts)}; {elapsed:.0f}s")


def test_c09_complexity(verdict):
    start = time.perf_counter()
    rows = bench.bench_transform([2000, 4000, 8000, 16000], repeats=5, n=1000)
    slopes = bench.transform_slopes(rows)
    elapsed = time.perf_counter() - start
    ok = (
        all(r["dht_pairs"] == 2 * r["m"] for r in rows)
        and slopes["dht_pairs"] == pytest.approx(1.0, abs=1e-12)
        and slopes["linegraph_edges"] > 1.3
        and abs(slopes["dht_net_time"] - 1.0) <= 0.25
        and elapsed < 120
    )
    detail = (
        f"pair slope {slopes['dht_pairs']:.3f}, line-graph edge slope {slopes['linegraph_edges']:.3f}, "
        f"dht time slope {slopes['dht_net_time']:.3f} (raw {slopes['dht_time']:.3f}), {elapsed:.0f}s"
    )
    verdict(9, ok, detail)


def test_c10_message_passing_parity(verdict):
    rows = bench.bench_message_passing(bench.default_mp_graphs(3000, 12000), repeats=20)
    ok = all(0.5 <= r["ratio"] <= 3.0 for r in rows)
    verdict(10, ok, "; ".join(f"{r['graph']} (m={r['m']}) edge/node {r['ratio']:.2f}" for r in rows))


def test_c11_compression(verdict):
    g = gen_erdos_renyi_paired(200, 2000, seed=0)
    report, _ = tune_compression(g, [0.05, 0.1, 0.25, 0.5], node_ratio=0.15, accuracy=0.75)
    ok = report["edge_accuracy"] >= 0.75 and report["relative_size"] < report["node_only_relative_size"]
    detail = (
        f"edge ratio {report['edge_ratio']}: accuracy {report['edge_accuracy']:.3f}, "
        f"relative size {report['relative_size']:.3f} vs node-only {report['node_only_relative_size']:.3f}"
    )
    verdict(11, ok, detail)
