import itertools
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import config as config_module  # noqa: E402
from config import RunConfig  # noqa: E402
from graphs import complete_graph, cycle_graph, path_graph, wheel_graph  # noqa: E402
from instance import SignedCompletionInstance  # noqa: E402

FULL_ACCEPTANCE = os.getenv('SDCERT_FULL_ACCEPTANCE') == '1'


@pytest.fixture(autouse=True)
def _reset_process_config():
    """Tests that go through the CLI replace the process config; restore it"""
    saved = config_module._config_instance
    config_module._config_instance = RunConfig()
    yield
    config_module._config_instance = saved


@pytest.fixture
def cfg():
    return RunConfig()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def k4():
    return complete_graph(4)


@pytest.fixture
def c6():
    return cycle_graph(6)


@pytest.fixture
def p4():
    return path_graph(4)


@pytest.fixture
def w6():
    return wheel_graph(6)


@pytest.fixture
def tight_triangle():
    """Three unit vectors at 120 degrees: rank 2, one stage"""
    return SignedCompletionInstance(3, [(0, 1, 'eq', -0.5), (0, 2, 'eq', -0.5), (1, 2, 'eq', -0.5)])


@pytest.fixture
def infeasible_triangle():
    """sum X >= 0 fails: 3 + 6 * (-0.9) < 0"""
    return SignedCompletionInstance(3, [(0, 1, 'eq', -0.9), (0, 2, 'eq', -0.9), (1, 2, 'eq', -0.9)])


@pytest.fixture
def trials():
    """Sample count for acceptance runs: the short figure unless SDCERT_FULL_ACCEPTANCE=1"""
    return lambda short, full: full if FULL_ACCEPTANCE else short


def _treewidth(G):
    """Exact treewidth by the subset recursion TW(S) = min_v max(TW(S - v), |Q(S - v, v)|)"""
    n = G.n
    adj = [G.neighbors(v) for v in range(n)]

    def q(S, v):
        seen, stack, out = {v}, [v], set()
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y in seen:
                    continue
                seen.add(y)
                if y in S:
                    stack.append(y)
                else:
                    out.add(y)
        return len(out)

    tw = {frozenset(): -1}
    for size in range(1, n + 1):
        for S in map(frozenset, itertools.combinations(range(n), size)):
            tw[S] = min(max(tw[S - {v}], q(S - {v}, v)) for v in S)
    return tw[frozenset(range(n))]


@pytest.fixture
def exact_treewidth():
    return _treewidth
