import json
import tempfile
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import graphs
from ehgnn.datagen import (
    PAIR_CATEGORIES,
    GeneratorSpec,
    cycle_path_dataset,
    erdos_renyi_paired_dataset,
    gen_clustered_edge_colors,
    gen_cycle_or_path,
    gen_erdos_renyi_paired,
    gen_scale_free,
    gen_star,
    generate,
    read_graph_json,
    read_json_any,
    write_dual_json,
    write_graph_json,
)
from ehgnn.dht import dht
from ehgnn.errors import GraphFormatError, SelfLoopError
from ehgnn.graph import node_degrees, validate_graph


class TestClusteredColors:
    def test_single_cluster_uniform(self):
        e = gen_clustered_edge_colors(30, 3, 1, seed=0).edge_features.data
        assert np.all(e == e[0])

    def test_deterministic(self):
        assert gen_clustered_edge_colors(60, 4, 3, 5) == gen_clustered_edge_colors(60, 4, 3, 5)

    def test_three_colours_in_cube(self):
        g = gen_clustered_edge_colors(100, 4, 3, seed=0)
        e = g.edge_features.data
        assert e.shape[1] == 3
        assert np.all((e >= 0) & (e <= 1))
        assert len(np.unique(e, axis=0)) == 3
        assert np.all(g.edges[:, 0] < g.edges[:, 1])

    @pytest.mark.parametrize("args", [(3, 2, 1), (10, 10, 1), (10, 0, 1), (10, 2, 0)])
    def test_degenerate(self, args):
        with pytest.raises(ValueError):
            gen_clustered_edge_colors(*args, seed=0)


class TestErdosRenyi:
    def test_forced_pair(self):
        # seed whose two node draws are both value 0
        seed = next(s for s in range(100) if np.all(gen_erdos_renyi_paired(2, 1, s).node_features.data[:, 0] == 1))
        g = gen_erdos_renyi_paired(2, 1, seed)
        assert PAIR_CATEGORIES[int(np.argmax(g.edge_features.data[0]))] == (0, 0)

    def test_shape_and_count(self):
        g = gen_erdos_renyi_paired(1000, 10_000, seed=1)
        assert g.num_edges == 10_000 and g.edge_features.cols == 6
        validate_graph(g)

    def test_too_many_edges(self):
        with pytest.raises(ValueError, match="exceeds"):
            gen_erdos_renyi_paired(4, 7, 0)

    def test_complete_graph(self):
        g = gen_erdos_renyi_paired(5, 10, 0)
        assert {tuple(e) for e in g.edges} == {(i, j) for i in range(5) for j in range(i + 1, 5)}

    @given(st.integers(2, 30), st.data())
    def test_categories_match_endpoints(self, n, data):
        m = data.draw(st.integers(0, n * (n - 1) // 2))
        g = gen_erdos_renyi_paired(n, m, data.draw(st.integers(0, 2**32 - 1)))
        validate_graph(g)
        values = g.node_features.data.argmax(axis=1)
        for (u, v), row in zip(g.edges, g.edge_features.data):
            a, b = sorted((values[u], values[v]))
            assert PAIR_CATEGORIES[int(np.argmax(row))] == (a, b)
            assert row.sum() == 1.0

    def test_dataset_seeds_differ(self):
        a, b = erdos_renyi_paired_dataset(2, 20, 30, seed=0)
        assert a != b
        assert erdos_renyi_paired_dataset(2, 20, 30, seed=0)[0] == a


class TestStructural:
    def test_star(self):
        g = gen_star(4)
        assert g.num_nodes == 5 and g.num_edges == 4
        np.testing.assert_array_equal(node_degrees(g), [4, 1, 1, 1, 1])
        np.testing.assert_array_equal(g.edge_features.data, np.ones((4, 1)))
        assert g.node_features.data[0, 4] == 1.0  # degree capped at 4

    def test_cycle_and_path(self):
        assert gen_cycle_or_path(5, True).num_edges == 5
        assert gen_cycle_or_path(5, False).num_edges == 4
        assert gen_cycle_or_path(5, True).label == 1

    def test_degenerate_sizes(self):
        for call in (lambda: gen_star(0), lambda: gen_cycle_or_path(2, True), lambda: gen_cycle_or_path(1, False)):
            with pytest.raises(ValueError):
                call()

    def test_scale_free(self):
        g = gen_scale_free(50, seed=3, attach=2)
        validate_graph(g)
        assert g.num_edges == 2 * (50 - 2)
        assert g == gen_scale_free(50, seed=3, attach=2)
        assert node_degrees(g).max() > 4

    def test_cycle_path_balanced(self):
        labels = [g.label for g in cycle_path_dataset(20, seed=1)]
        assert sum(labels) == 10

    def test_generate_dispatch(self):
        assert generate(GeneratorSpec("star", {"leaves": 3})).num_edges == 3
        with pytest.raises(ValueError, match="unknown family"):
            generate(GeneratorSpec("moons"))


class TestJson:
    @given(graphs(max_nodes=10, max_edges=20))
    def test_round_trip_property(self, g):
        with tempfile.TemporaryDirectory() as d:
            path = Path(d) / "g.json"
            write_graph_json(g, path)
            assert read_graph_json(path) == g

    def test_round_trip_generated(self, tmp_path):
        for g in (gen_clustered_edge_colors(40, 3, 2, 0), gen_erdos_renyi_paired(10, 12, 0), gen_cycle_or_path(6, True)):
            write_graph_json(g, tmp_path / "g.json")
            assert read_graph_json(tmp_path / "g.json") == g

    def test_self_loop(self, tmp_path):
        path = tmp_path / "g.json"
        path.write_text(json.dumps({"num_nodes": 2, "node_features": [[0], [1]], "edges": [[0, 0]]}))
        with pytest.raises(SelfLoopError):
            read_graph_json(path)

    def test_missing_edge_features(self, tmp_path):
        path = tmp_path / "g.json"
        path.write_text(json.dumps({"num_nodes": 2, "node_features": [[0], [1]], "edges": [[0, 1]]}))
        g = read_graph_json(path)
        assert g.edge_features.shape == (1, 0)

    def test_parse_error_has_line(self, tmp_path):
        path = tmp_path / "g.json"
        path.write_text('{\n  "num_nodes": 2,\n  "edges": [[0, 1],\n}\n')
        with pytest.raises(GraphFormatError, match=r"g\.json:4:"):
            read_graph_json(path)

    def test_bad_schema(self, tmp_path):
        path = tmp_path / "g.json"
        path.write_text(json.dumps({"num_nodes": 2, "node_features": [[0]], "edges": []}))
        with pytest.raises(GraphFormatError, match="expected 2 rows"):
            read_graph_json(path)

    def test_dual_file(self, tmp_path):
        h = dht(gen_erdos_renyi_paired(6, 7, 0))
        write_dual_json(h, tmp_path / "h.json")
        back = read_json_any(tmp_path / "h.json")
        np.testing.assert_array_equal(back.hyperedges, h.hyperedges)
        np.testing.assert_array_equal(back.dual_node_features.data, h.dual_node_features.data)
