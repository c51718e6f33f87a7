import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bisq.graph import (
    Graph,
    GraphError,
    GraphSpec,
    build_graph,
    common_neighbors,
    complete_bipartite,
    complete_graph,
    count_triangles_exact,
    disjoint_union,
    gen_clique_plus_biclique,
    gen_er,
    path_graph,
    read_edge_list,
    star_graph,
    triangles_per_edge,
    write_edge_list,
)
from conftest import naive_triangles, small_graphs


def test_build_examples():
    assert build_graph(3, [(0, 1), (1, 2), (0, 2)]).m == 3
    assert build_graph(4, []).m == 0
    assert build_graph(3, [(0, 1), (1, 0)]).m == 1


@pytest.mark.parametrize("edges, word", [([(0, 3)], "outside"), ([(1, 1)], "self-loop"), ([(-1, 0)], "outside")])
def test_build_rejects(edges, word):
    with pytest.raises(GraphError, match=word):
        build_graph(3, edges)


def test_from_dense_checks():
    with pytest.raises(GraphError):
        Graph.from_dense(np.array([[0, 1], [0, 0]], bool))
    with pytest.raises(GraphError):
        Graph.from_dense(np.eye(2, dtype=bool))
    assert Graph.from_dense(complete_graph(4).dense()) == complete_graph(4)


def test_er_extremes():
    assert gen_er(20, 0.0, 3).m == 0
    assert gen_er(20, 1.0, 3).m == 190
    with pytest.raises(GraphError):
        gen_er(5, 1.5, 0)


def test_er_edge_count_concentrates():
    mean = 0.2 * math.comb(50, 2)
    sd = math.sqrt(math.comb(50, 2) * 0.2 * 0.8)
    counts = np.array([gen_er(50, 0.2, s).m for s in range(100)])
    assert np.all(np.abs(counts - mean) <= 4 * sd)
    assert abs(counts.mean() - mean) < 4 * sd / 10


def test_er_reproducible():
    assert gen_er(40, 0.3, 9) == gen_er(40, 0.3, 9)
    assert gen_er(40, 0.3, 9) != gen_er(40, 0.3, 10)


def test_triangle_examples():
    assert count_triangles_exact(complete_graph(3)) == 1
    assert count_triangles_exact(complete_graph(5)) == 10
    assert count_triangles_exact(complete_bipartite(5, 6)) == 0
    assert count_triangles_exact(gen_clique_plus_biclique(6, 3, 4)) == 20


@pytest.mark.parametrize("seed", range(5))
def test_triangles_match_triple_scan(seed):
    g = gen_er(50, 0.2, seed)
    assert count_triangles_exact(g) == naive_triangles(g)


def test_common_neighbors_examples():
    assert common_neighbors(complete_graph(3), 0, 1).tolist() == [2]
    assert common_neighbors(path_graph(3), 0, 2).tolist() == [1]
    assert common_neighbors(star_graph(4), 2, 3).tolist() == [0]
    with pytest.raises(GraphError):
        common_neighbors(path_graph(3), 1, 1)


@given(small_graphs(max_n=10))
def test_graph_invariants(g):
    d = g.dense()
    assert not d.diagonal().any()
    assert np.array_equal(d, d.T)
    assert g.m == g.degrees.sum() // 2
    assert sorted(g.edge_set()) == [tuple(e) for e in g.edges().tolist()]


@given(small_graphs(max_n=10))
def test_per_edge_loads_sum_to_three_t(g):
    t = count_triangles_exact(g)
    assert triangles_per_edge(g).sum() == 3 * t
    nxg = nx.Graph()
    nxg.add_nodes_from(range(g.n))
    nxg.add_edges_from(g.edge_set())
    assert t == sum(nx.triangles(nxg).values()) // 3


def test_disjoint_union_shifts_ids():
    g = disjoint_union(complete_graph(3), path_graph(2))
    assert g.n == 5 and g.edge_set() == {(0, 1), (0, 2), (1, 2), (3, 4)}


def test_edge_list_round_trip(tmp_path):
    g = gen_er(30, 0.2, 1)
    p = tmp_path / "g.el"
    write_edge_list(g, p)
    assert read_edge_list(p) == g


@pytest.mark.parametrize("body, word", [
    ("3 2\n0 1\n1 0\n", "duplicate"),
    ("3 1\n1 1\n", "self-loop"),
    ("3 2\n0 1\n", "announces"),
    ("3\n0 1\n", "header"),
])
def test_edge_list_reader_rejects(tmp_path, body, word):
    p = tmp_path / "bad.el"
    p.write_text(body)
    with pytest.raises(GraphError, match=word):
        read_edge_list(p)


def test_graph_spec_kinds(tmp_path):
    assert GraphSpec("complete", {"n": 4}).build(0).m == 6
    assert GraphSpec("clique-biclique", {"k": 4, "a": 2, "b": 2}).build(0).m == 10
    with pytest.raises(GraphError):
        GraphSpec("lattice", {}).build(0)


@given(st.integers(0, 2**64 - 1))
def test_any_64_bit_seed_works(seed):
    assert gen_er(6, 0.5, seed) == gen_er(6, 0.5, seed)


def test_triple_scan_helper_agrees_on_cliques():
    for k in range(6):
        assert naive_triangles(complete_graph(k)) == math.comb(k, 3)


def test_clique_plus_random_bipartite_counts():
    from bisq.graph import gen_clique_plus_random_bipartite

    g = gen_clique_plus_random_bipartite(200, 12, 900, 3)
    assert g.m == 900 and count_triangles_exact(g) == 220
    with pytest.raises(GraphError):
        gen_clique_plus_random_bipartite(20, 12, 900, 3)
