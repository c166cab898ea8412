import math

import numpy as np
import pytest

from constructions import (ConstructionSpec, generate, gen_complete_boundary, gen_cycle_degenerate, gen_gk,
                           gen_subdivided_k4, gen_wheel_p1, gen_wheel_splitting, gk_edges, gk_groups, gk_labels,
                           parse_params, split_vertex)
from errors import InvalidInput, InvalidSpec
from graphs import is_chordal, is_k4_minor_free, wheel_graph
from linalg_core import numeric_rank


def test_spec_validation():
    with pytest.raises(InvalidSpec):
        ConstructionSpec('petersen')
    spec = ConstructionSpec.from_dict({'family': 'gk', 'params': {'k': 3}})
    assert spec.to_dict() == {'family': 'gk', 'params': {'k': 3}}
    with pytest.raises(InvalidSpec):
        ConstructionSpec.from_dict({'params': {}})


def test_parse_params():
    params = parse_params(['n=5', 'eps=0.05', 'subdivide=1-2,3-4', 'case=G6', 'counts=1,2'])
    assert params == {'n': 5, 'eps': 0.05, 'subdivide': ['1-2', '3-4'], 'case': 'G6', 'counts': [1, 2]}
    with pytest.raises(InvalidSpec):
        parse_params(['n'])


def test_split_vertex():
    G = split_vertex(wheel_graph(5), 0, [1, 2], [3, 4])
    assert G.n == 6
    assert G.neighbors(0) == {1, 2, 5}
    assert G.neighbors(5) == {0, 3, 4}
    with pytest.raises(InvalidInput):
        split_vertex(wheel_graph(5), 0, [1, 2], [3])


def test_degenerate_cycle():
    F = gen_cycle_degenerate(6)
    assert (F.n, F.d) == (6, 2)
    assert np.allclose(F.p(0), F.p(1))
    assert F.p(5) @ F.p(0) == pytest.approx(0.0)
    angles = F.params['angles']
    assert angles[0] == angles[1] == 0.0 and angles[-1] == pytest.approx(math.pi / 2)
    assert all(b > a for a, b in zip(angles[1:], angles[2:]))
    with pytest.raises(InvalidSpec):
        gen_cycle_degenerate(5, angles=[0.5, 0.2])
    with pytest.raises(InvalidSpec):
        gen_cycle_degenerate(3)


def test_wheel_p1():
    F = gen_wheel_p1(6)
    assert (F.n, F.d) == (6, 3)
    assert np.allclose(F.coords[1:4], np.eye(3))
    assert F.p(0) @ F.p(1) == pytest.approx(F.p(0) @ F.p(2))
    assert all(F.p(v)[1] == 0.0 and F.p(v)[0] > 0 and F.p(v)[2] > 0 for v in (4, 5))


@pytest.mark.parametrize("params,n", [
    ({'variant': 'G2'}, 5),
    ({'variant': 'G3', 'c13': 1, 'c23': 2}, 8),
    ({'variant': 'G4', 'counts': {'12': 2, '01': 1}, 'w_edge': 1}, 7),
])
def test_subdivided_k4(params, n):
    F = gen_subdivided_k4(ConstructionSpec('subdivided_k4', params))
    assert F.n == n and F.d == 3
    labels = F.params['labels']
    assert np.allclose(F.p(labels['w3']), [0.0, 0.0, 1.0])
    assert np.allclose(F.p(labels['v0']), [1 / math.sqrt(2), 1 / math.sqrt(2), 0.0])
    assert not is_k4_minor_free(F.graph)
    assert numeric_rank(F.gram()) == 3


def test_subdivided_k4_rejects_bad_specs():
    with pytest.raises(InvalidSpec):
        gen_subdivided_k4(ConstructionSpec('subdivided_k4', {'variant': 'G2', 'c01': 1}))
    with pytest.raises(InvalidSpec):
        gen_subdivided_k4(ConstructionSpec('subdivided_k4', {'variant': 'G4', 'w_edge': 3}))
    with pytest.raises(InvalidSpec):
        gen_subdivided_k4(ConstructionSpec('subdivided_k4', {'variant': 'G5'}))
    with pytest.raises(InvalidSpec):
        gen_subdivided_k4(ConstructionSpec('subdivided_k4', {'eps': 0.5}))


@pytest.mark.parametrize("params,n,targets", [
    ({'case': 'G5', 'n': 7}, 7, [3, 4]),
    ({'case': 'G5', 'n': 5, 'subdivide': ['1-2']}, 6, [3, 4]),
    ({'case': 'G6', 'n': 7, 'j': 4}, 8, [7, 4]),
    ({'case': 'G6', 'n': 6, 'j': 3}, 7, [6, 3]),
    ({'case': 'G7', 'n': 7, 'j': 4}, 8, [7, 4]),
])
def test_wheel_splitting(params, n, targets):
    F = gen_wheel_splitting(ConstructionSpec('wheel_splitting', params))
    assert F.n == n
    assert F.params['targets'] == targets
    assert not is_chordal(F.graph).chordal
    assert numeric_rank(F.gram()) == 3


@pytest.mark.parametrize("params", [
    {'case': 'G5', 'n': 4},
    {'case': 'G6', 'n': 4},
    {'case': 'G6', 'n': 6, 'j': 6},
    {'case': 'G7', 'n': 6, 'j': 3},
    {'case': 'G8'},
    {'case': 'G5', 'n': 6, 'subdivide': ['1-3']},
])
def test_wheel_splitting_rejects_bad_specs(params):
    with pytest.raises(InvalidSpec):
        gen_wheel_splitting(ConstructionSpec('wheel_splitting', params))


def test_gk_structure():
    L = gk_labels(3)
    assert L['v1'] == L['w1'] == 0
    assert (L['u2'], L['v2'], L['w2'], L['u3'], L['v3'], L['w3']) == (1, 2, 3, 4, 5, 6)
    assert len(gk_edges(3)) == 10
    assert gk_groups(3) == [[0], [1, 2, 3], [4, 5, 6]]


def _gk_edges_by_formula(k):
    def at(name, i):
        if i == 1:
            return 0
        return 3 * (i - 2) + {'u': 1, 'v': 2, 'w': 3}[name]
    out = set()
    for i in range(2, k + 1):
        for a, b in ((at('w', i - 1), at('v', i)), (at('w', i - 1), at('w', i)), (at('u', i), at('v', i - 1)),
                     (at('u', i), at('v', i)), (at('u', i), at('w', i))):
            out.add((min(a, b), max(a, b)))
    return out


@pytest.mark.parametrize('k', [2, 3, 4, 5])
def test_gk_edges_match_the_recursive_definition(k):
    assert set(gk_edges(k)) == _gk_edges_by_formula(k)


def test_gk_treewidth_is_three(exact_treewidth):
    assert exact_treewidth(gen_gk(2).graph) == 2
    for k in (3, 4):
        assert exact_treewidth(gen_gk(k).graph) == 3


def test_gk_framework():
    F = gen_gk(3)
    assert (F.n, F.d) == (7, 3)
    L = gk_labels(3)
    assert np.allclose(F.p(L['v3']), F.p(L['w3']))
    # e_i sits between e_{i-1} and q(u_i)
    q = F.p(L['u3'])
    assert q @ F.p(L['v2']) == pytest.approx(math.cos(3 * math.pi / 4))
    assert F.params['groups'] == gk_groups(3)
    with pytest.raises(InvalidSpec):
        gen_gk(2, theta=1.0)


def test_complete_boundary():
    inst = gen_complete_boundary(5, 2, seed=3)
    assert len(inst.constraints) == 10
    assert all(c.kind == 'eq' for c in inst.constraints)
    assert inst == gen_complete_boundary(5, 2, seed=3)
    with pytest.raises(InvalidSpec):
        gen_complete_boundary(3, 4)


def test_generate_dispatch():
    F, inst = generate(ConstructionSpec('wheel_splitting', {'case': 'G6', 'n': 6, 'j': 3}))
    assert inst.n == F.n
    assert inst.graph() == F.graph
    F, inst = generate(ConstructionSpec('degenerate_cycle', {'n': 5}))
    assert inst.weights[(0, 1, 'eq')] == pytest.approx(1.0)
