import math

import networkx as nx
import numpy as np
import pytest

from lamplighter import (
    BiasParams,
    ConfigError,
    HomesickParams,
    TruncationError,
    biased_step_distribution,
    build_gamma_m,
    build_line_graph,
    homesick_transition,
    load_edge_list,
)
from lamplighter.graphs import bias_from_lambda, edge_resistance


def to_networkx(graph):
    g = nx.Graph()
    g.add_nodes_from(graph.labels)
    for v in graph.labels:
        for w in graph.neighbors(v):
            g.add_edge(v, w)
    return g


def test_bias_params():
    bp = BiasParams(0.8)
    assert bp.lam == pytest.approx(4.0)
    assert bias_from_lambda(3.0).p == pytest.approx(0.75)
    for bad in (0.5, 0.3, 1.0, 1.2):
        with pytest.raises(ConfigError):
            BiasParams(bad)
    with pytest.raises(ConfigError):
        HomesickParams(0.9)


def test_biased_step_distribution():
    assert biased_step_distribution(3, BiasParams(0.8)) == {2: 0.8, 4: pytest.approx(0.2)}
    assert biased_step_distribution(0, BiasParams(0.77)) == {-1: 0.5, 1: 0.5}
    assert biased_step_distribution(-2, BiasParams(0.75)) == {-1: 0.75, -3: 0.25}


def test_homesick_transition_on_line():
    line = build_line_graph(8)
    assert homesick_transition(line, 5, HomesickParams(3.0)) == {4: 0.75, 6: 0.25}
    assert homesick_transition(line, 0, HomesickParams(17.0)) == {-1: 0.5, 1: 0.5}
    # lambda = 1 is the simple random walk
    t = homesick_transition(line, -3, HomesickParams(1.0))
    assert t == {-2: 0.5, -4: 0.5}


def test_homesick_equals_biased_walk_on_line():
    line = build_line_graph(10)
    lam = 3.5
    p = lam / (lam + 1.0)
    bp = BiasParams(p)
    for x in range(-9, 10):
        hom = homesick_transition(line, x, HomesickParams(lam))
        assert hom == biased_step_distribution(x, bp)  # exact equality


def test_line_graph_shape():
    line = build_line_graph(2)
    assert line.n_vertices == 5
    assert line.degree(0) == 2
    for i in range(2):
        assert line.edge_boundary_size(i) == 2
    assert line.ball_size(1) == 3 and line.ball_size(2) == 5


def test_transitions_sum_to_one_and_supported_on_neighbors():
    for graph in (build_line_graph(6), build_gamma_m(3, 16)):
        for lam in (1.0, 2.0, 5.5):
            for v in graph.labels:
                if graph.is_boundary(v):
                    continue
                t = homesick_transition(graph, v, HomesickParams(lam))
                assert abs(sum(t.values()) - 1.0) <= 1e-12
                assert set(t) <= set(graph.neighbors(v))


def test_truncation_boundary_query_errors():
    line = build_line_graph(4)
    with pytest.raises(TruncationError):
        homesick_transition(line, 4, HomesickParams(2.0))
    with pytest.raises(TruncationError):
        homesick_transition(line, -4, HomesickParams(2.0))


def test_gamma_ball_sizes_against_bfs():
    # independent oracle: BFS distances via networkx
    for m in (2, 3, 5):
        g = build_gamma_m(m, 20)
        nxg = to_networkx(g)
        dist = nx.single_source_shortest_path_length(nxg, 0)
        for v in g.labels:
            assert g.distance(v) == dist[v]
        for r in range(1, 20):
            want = sum(1 for d in dist.values() if d <= r)
            assert g.ball_size(r) == want
            # closed form: the unsplit line plus 2(m-1) extra copies per split level
            assert g.ball_size(r) == 2 * r + 1 + 2 * (m - 1) * int(math.log2(r))


def test_gamma_ball_size_value():
    # m=3, r=4: the split levels 2 and 4 each add 2(m-1)=4 vertices to the 9 of Z
    assert build_gamma_m(3, 8).ball_size(4) == 17


def test_gamma_split_vertex_adjacency():
    g = build_gamma_m(3, 8)
    assert g.degree((2, 1)) == 2
    assert sorted(g.neighbors((2, 2))) == [1, 3]
    assert sorted(g.neighbors((-4, 3)), key=str) == [-5, -3]
    # vertices straddled by two split levels reach degree 2m; others stay small
    assert g.degree(3) == 6 and g.degree(-3) == 6
    assert g.degree(1) == 4  # root side: 0 plus three copies of 2
    assert g.max_degree == 6
    assert max(g.degree(v) for v in g.labels) == 2 * 3


def test_gamma_edge_boundary_sizes():
    m = 3
    g = build_gamma_m(m, 33)
    # 2m edges cross the boundary at s in {2^j - 1, 2^j} (entering and leaving
    # the split level), 2 everywhere else
    for s in range(33):
        want = 2 * m if s in (1, 2, 3, 4, 7, 8, 15, 16, 31, 32) else 2
        assert g.edge_boundary_size(s) == want, f"s={s}"


def test_gamma_projection():
    g = build_gamma_m(4, 16)
    idx = g.index[(8, 2)]
    assert g.proj[idx] == 8
    assert g.proj[g.index[-7]] == -7
    assert np.all(np.abs(g.proj) == g.dist)


def test_detailed_balance_on_small_graphs():
    # the walk is the reversible chain of the network with resistance
    # lambda^{min(d(u), d(v))} on each edge
    tri = load_edge_list(["a", "a b", "a c", "b c", "c d"])
    gam = build_gamma_m(3, 9)
    for graph in (tri, gam):
        for lam in (1.5, 3.0):
            params = HomesickParams(lam)
            cond = {}
            for v in graph.labels:
                cond[v] = sum(1.0 / edge_resistance(graph, v, w, lam) for w in graph.neighbors(v))
            for v in graph.labels:
                if graph.is_boundary(v):
                    continue
                t = homesick_transition(graph, v, params)
                for w, pvw in t.items():
                    if graph.is_boundary(w):
                        continue
                    pwv = homesick_transition(graph, w, params)[v]
                    assert cond[v] * pvw == pytest.approx(cond[w] * pwv, rel=1e-12)


def test_distance_coherence_invariant():
    for graph in (build_line_graph(5), build_gamma_m(2, 12), load_edge_list(["r", "r a", "a b", "r b"])):
        for v in graph.labels:
            for w in graph.neighbors(v):
                assert abs(graph.distance(v) - graph.distance(w)) <= 1


def test_edge_list_loader():
    g = load_edge_list(["root", "root a", "a b", "# comment", "b root"])
    assert g.root_label == "root"
    assert g.n_vertices == 3
    assert g.truncation_radius is None
    assert not g.is_boundary("b")
    with pytest.raises(ConfigError):
        load_edge_list([])
    with pytest.raises(ConfigError):
        load_edge_list(["r", "r a b c"])


def test_graph_validation():
    with pytest.raises(ConfigError, match="connected"):
        load_edge_list(["r", "r a", "b c"])
    with pytest.raises(ConfigError):
        build_gamma_m(1, 8)
    with pytest.raises(ConfigError):
        build_line_graph(0)
