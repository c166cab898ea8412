import pytest

from errors import InvalidContraction, InvalidInput, TooLarge
from graphs import complete_graph, cycle_graph, wheel_graph
from signed_graphs import (EVEN, ODD, SignedGraph, all_even, all_odd, contract_even_edges, doubled,
                           enumerate_odd_cycles, is_balanced, is_odd_k4_minor_free, merge_map_for, resign,
                           simple_cycles)


def test_signed_graph_keeps_parallel_pairs():
    SG = SignedGraph(2, [(1, 0, ODD), (0, 1, EVEN)])
    assert SG.signs_on(0, 1) == {ODD, EVEN}
    with pytest.raises(InvalidInput):
        SignedGraph(2, [(0, 1, 'neutral')])


def test_resign_flips_the_cut():
    SG = all_even(cycle_graph(4))
    flipped = resign(SG, {0})
    assert flipped.odd_edges() == [(0, 1, ODD), (0, 3, ODD)]
    assert resign(flipped, {0}) == SG


def test_balance():
    assert is_balanced(all_even(complete_graph(4)))
    assert not is_balanced(all_odd(complete_graph(3)))
    assert is_balanced(all_odd(cycle_graph(4)))
    assert is_balanced(resign(all_even(complete_graph(5)), {1, 3}))


def test_odd_cycles_of_odd_triangle():
    cycles = enumerate_odd_cycles(all_odd(complete_graph(3)))
    assert len(cycles) == 1
    assert len(cycles[0]) == 3 and cycles[0].odd_count == 3


def test_odd_cycles_include_digons():
    cycles = enumerate_odd_cycles(doubled(complete_graph(2)))
    assert [len(C) for C in cycles] == [2]
    # every triangle of doubled K3 has 4 odd choices of copies, plus 3 digons
    assert len(enumerate_odd_cycles(doubled(complete_graph(3)))) == 3 + 4


def test_odd_cycle_cap():
    with pytest.raises(TooLarge):
        enumerate_odd_cycles(all_odd(complete_graph(6)), cap=5)


def test_merge_map_numbers_by_smallest_vertex():
    assert merge_map_for(5, [(3, 4), (0, 2)]) == [0, 1, 0, 2, 2]
    assert merge_map_for(3, []) == [0, 1, 2]


def test_simple_cycles_are_canonical():
    cycles = simple_cycles(complete_graph(4))
    assert cycles == [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3), (0, 1, 2, 3), (0, 1, 3, 2), (0, 2, 1, 3)]
    assert simple_cycles(complete_graph(4), max_len=3) == cycles[:4]
    assert simple_cycles(wheel_graph(5), max_len=3) == [(0, 1, 2), (0, 1, 4), (0, 2, 3), (0, 3, 4)]
    assert len(simple_cycles(complete_graph(5))) == 37
    assert simple_cycles(cycle_graph(5)) == [(0, 1, 2, 3, 4)]


def test_contract_even_edges():
    SG = SignedGraph(3, [(0, 1, EVEN), (1, 2, ODD), (0, 2, EVEN)])
    contracted, merge = contract_even_edges(SG, [(0, 1)])
    assert merge == [0, 0, 1]
    assert contracted.signs_on(0, 1) == {ODD, EVEN}
    with pytest.raises(InvalidContraction):
        contract_even_edges(SG, [(1, 2)])


@pytest.mark.parametrize("SG,expected", [
    (all_odd(complete_graph(4)), False),
    (all_odd(complete_graph(5)), False),
    (all_even(complete_graph(5)), True),
    (SignedGraph(4, [(0, 1, ODD), (0, 2, EVEN), (0, 3, EVEN), (1, 2, EVEN), (1, 3, EVEN), (2, 3, EVEN)]), True),
    (doubled(cycle_graph(5)), True),
    (doubled(complete_graph(3)), True),
    (SignedGraph(5, [(0, 1, ODD), (0, 2, ODD), (0, 3, ODD), (1, 2, ODD), (1, 3, ODD), (2, 4, ODD), (3, 4, EVEN)]), False),
    # the even rim 4-cycle leaves an even triangle in every K4 minor
    (all_odd(wheel_graph(5)), True),
])
def test_odd_k4_minor_freeness(SG, expected):
    assert is_odd_k4_minor_free(SG) is expected


def test_odd_k4_survives_resigning():
    SG = resign(all_odd(complete_graph(4)), {0, 2})
    assert not is_odd_k4_minor_free(SG)


def test_odd_k4_search_limit():
    with pytest.raises(TooLarge):
        is_odd_k4_minor_free(all_odd(complete_graph(6)), limit=5)
