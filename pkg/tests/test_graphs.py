import networkx as nx
import pytest

from errors import InvalidInput, NumericalError
from graphs import (Graph, classify_sd_bounds, clique_sum_decompose, complete_graph, cycle_graph,
                    find_wheel_obstruction, is_chordal, is_k4_minor_free, path_graph, verify_hole, verify_peo,
                    wheel_graph)


def _random_graphs(count=40, seed=7):
    for i in range(count):
        g = nx.gnp_random_graph(4 + i % 5, 0.45, seed=seed + i)
        yield Graph.from_networkx(g)


def test_graph_rejects_bad_edges():
    with pytest.raises(InvalidInput):
        Graph(3, [(1, 1)])
    with pytest.raises(InvalidInput):
        Graph(3, [(0, 3)])
    assert Graph(3, [(0, 1), (1, 0)]).edges == frozenset({(0, 1)})


def test_wheel_graph_layout():
    W = wheel_graph(6)
    assert W.degree(0) == 5
    assert all(W.degree(v) == 3 for v in range(1, 6))


def test_chordality_agrees_with_networkx():
    for G in _random_graphs():
        result = is_chordal(G)
        assert result.chordal == nx.is_chordal(G.to_networkx())
        if result.chordal:
            assert verify_peo(G, result.ordering) is None
        else:
            assert verify_hole(G, result.hole)


def test_cycle_hole_is_the_whole_cycle(c6):
    result = is_chordal(c6)
    assert not result.chordal
    assert sorted(result.hole) == list(range(6))


def test_verify_peo_reports_a_violation(c6):
    v, a, b = verify_peo(c6, tuple(range(6)))
    assert not c6.has_edge(a, b)


@pytest.mark.parametrize("G,expected", [
    (complete_graph(4), False),
    (cycle_graph(5), True),
    (wheel_graph(5), False),
    (path_graph(4), True),
    (Graph(5, [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 2), (0, 3)]), True),
])
def test_k4_minor_freeness(G, expected):
    assert is_k4_minor_free(G) is expected


def test_k4_minor_free_matches_treewidth_two(exact_treewidth):
    for G in _random_graphs(seed=101):
        assert is_k4_minor_free(G) == (exact_treewidth(G) <= 2)


def test_clique_sum_reassembles():
    # two K4s glued on an edge plus a pendant square
    edges = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3),
             (2, 4), (3, 4), (2, 5), (3, 5), (4, 5),
             (5, 6), (6, 7), (7, 8), (8, 5)]
    G = Graph(9, edges)
    tree = clique_sum_decompose(G)
    assert tree.reassemble() == G
    assert tree.only_complete_or_k4_free()
    labels = sorted(leaf.label for leaf in tree.leaves())
    assert 'complete' in labels


def test_wheel_has_no_clique_separator(w6):
    tree = clique_sum_decompose(w6)
    assert [leaf.label for leaf in tree.leaves()] == ['other']


def test_bounds_edgeless():
    b = classify_sd_bounds(Graph(3))
    assert b.sd_exact == 0 and b.sd_star_exact == 0


def test_bounds_tree(p4):
    b = classify_sd_bounds(p4)
    assert b.sd_exact == 1
    assert b.sd_star_exact == 0


def test_bounds_complete(k4):
    b = classify_sd_bounds(k4)
    assert b.sd_exact == 1
    assert b.sd_star_exact == 1


def test_bounds_cycle(c6):
    b = classify_sd_bounds(c6)
    assert (b.sd_lower, b.sd_upper, b.sd_exact) == (2, 2, 2)
    assert b.sd_star_exact == 1
    assert b.to_dict()['hole'] is not None


def test_bounds_wheel(w6):
    b = classify_sd_bounds(w6)
    assert b.sd_lower == 2 and b.sd_upper is None
    assert b.sd_star_lower == 2 and b.sd_star_upper is None
    assert not b.k4_minor_free
    assert b.obstruction.kind == 'wheel' and b.obstruction.center == 0
    assert b.to_dict()['obstruction']['vertices'] == list(range(6))


def test_wheel_obstruction_is_the_wheel_itself():
    found = find_wheel_obstruction(wheel_graph(5))
    assert (found.kind, found.center, found.vertices) == ('wheel', 0, (0, 1, 2, 3, 4))


def test_wheel_obstruction_drops_attached_pieces():
    # W_5 with a triangle hung on the rim edge 1-2 and a pendant path
    edges = list(wheel_graph(5).edges) + [(1, 5), (2, 5), (5, 6)]
    found = find_wheel_obstruction(Graph(7, edges))
    assert found.vertices == (0, 1, 2, 3, 4)
    assert found.kind == 'wheel'


def test_wheel_obstruction_on_split_k4():
    # K4 = W_4 with vertex 0 split into 0 (keeps 1, 2) and 4 (keeps 3)
    G = Graph(5, [(0, 1), (0, 2), (0, 4), (3, 4), (1, 2), (1, 3), (2, 3)])
    found = find_wheel_obstruction(G)
    assert (found.kind, found.center, found.vertices) == ('splitting', None, (0, 1, 2, 3, 4))
    b = classify_sd_bounds(G)
    assert b.sd_star_lower == 2 and b.obstruction == found
    assert any('splitting' in r for r in b.reasons)


def test_no_obstruction_when_decomposable(k4, c6):
    assert find_wheel_obstruction(k4) is None
    assert find_wheel_obstruction(c6) is None
    assert classify_sd_bounds(c6).obstruction is None


def test_missing_hole_is_a_numerical_error(monkeypatch, c6):
    monkeypatch.setattr('graphs.find_hole', lambda G, hint=None: None)
    with pytest.raises(NumericalError):
        is_chordal(c6)
