"""
Signed graphs: resigning, even-edge contraction, odd cycles and odd-K4 minors
"""
from collections import deque
from dataclasses import dataclass
from itertools import product
from typing import Dict, FrozenSet, List, Tuple

import networkx as nx
from networkx.utils import UnionFind

from errors import InvalidContraction, InvalidInput, TooLarge
from graphs import Graph, is_k4_minor_free, norm_edge
from logger_config import logger

ODD = 'odd'
EVEN = 'even'
SIGNS = (ODD, EVEN)
ODD_K4_LIMIT = 12


def _parity(sign):
    return 1 if sign == ODD else 0


def _sign(parity):
    return ODD if parity % 2 else EVEN


class SignedGraph:
    """
    Graph whose edges are odd or even; an odd and an even edge may share a pair

    Args:
        n: vertex count
        edges: iterable of (u, v, sign) with sign in {'odd', 'even'}
    """

    def __init__(self, n, edges=()):
        if n < 0:
            raise InvalidInput(f"Vertex count must be >= 0, got {n}")
        normalized = set()
        for u, v, sign in edges:
            u, v = int(u), int(v)
            if sign not in SIGNS:
                raise InvalidInput(f"Unknown edge sign {sign!r}")
            if u == v:
                raise InvalidInput(f"Self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise InvalidInput(f"Edge ({u}, {v}) out of range for n={n}")
            a, b = norm_edge(u, v)
            normalized.add((a, b, sign))
        self._n = n
        self._edges = frozenset(normalized)

    @property
    def n(self):
        return self._n

    @property
    def edges(self) -> FrozenSet[Tuple[int, int, str]]:
        return self._edges

    def sorted_edges(self):
        return sorted(self._edges)

    def pairs(self):
        return sorted({(u, v) for u, v, _ in self._edges})

    def signs_on(self, u, v):
        a, b = norm_edge(u, v)
        return {s for x, y, s in self._edges if (x, y) == (a, b)}

    def odd_edges(self):
        return sorted(e for e in self._edges if e[2] == ODD)

    def underlying(self) -> Graph:
        return Graph(self._n, self.pairs())

    def __eq__(self, other):
        return isinstance(other, SignedGraph) and self._n == other._n and self._edges == other._edges

    def __hash__(self):
        return hash((self._n, self._edges))

    def __repr__(self):
        return f"SignedGraph(n={self._n}, m={len(self._edges)}, odd={len(self.odd_edges())})"


def all_odd(G: Graph) -> SignedGraph:
    return SignedGraph(G.n, [(u, v, ODD) for u, v in G.edges])


def all_even(G: Graph) -> SignedGraph:
    return SignedGraph(G.n, [(u, v, EVEN) for u, v in G.edges])


def doubled(G: Graph) -> SignedGraph:
    """Each edge replaced by an odd and an even parallel copy"""
    return SignedGraph(G.n, [(u, v, s) for u, v in G.edges for s in SIGNS])


def resign(SG: SignedGraph, S) -> SignedGraph:
    """Flip the sign of every edge in the cut delta(S)"""
    S = set(S)
    if any(not 0 <= v < SG.n for v in S):
        raise InvalidInput("Resigning set has vertices out of range")
    edges = []
    for u, v, s in SG.edges:
        if (u in S) != (v in S):
            s = EVEN if s == ODD else ODD
        edges.append((u, v, s))
    return SignedGraph(SG.n, edges)


def merge_map_for(n, pairs) -> List[int]:
    """Map each vertex to its component index in (V, pairs); components numbered by smallest vertex"""
    uf = UnionFind(range(n))
    for u, v in pairs:
        uf.union(u, v)
    roots = {}
    out = []
    for v in range(n):
        r = uf[v]
        if r not in roots:
            roots[r] = len(roots)
        out.append(roots[r])
    return out


def contract_even_edges(SG: SignedGraph, F) -> Tuple[SignedGraph, List[int]]:
    """
    Contract a set of even edges

    Args:
        SG: signed graph
        F: iterable of vertex pairs, each of which must carry an even edge in SG

    Returns:
        (contracted signed graph, merge map old vertex -> new vertex)

    Raises:
        InvalidContraction: a pair in F has no even edge
    """
    F = [norm_edge(u, v) for u, v in F]
    for u, v in F:
        if EVEN not in SG.signs_on(u, v):
            raise InvalidContraction(f"Edge ({u}, {v}) is not even")
    merge = merge_map_for(SG.n, F)
    m = max(merge) + 1 if merge else 0
    edges = []
    for u, v, s in SG.edges:
        a, b = merge[u], merge[v]
        if a != b:
            edges.append((a, b, s))
    return SignedGraph(m, edges), merge


# ---------------------------------------------------------------------------
# Odd cycles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SignedCycle:
    vertices: Tuple[int, ...]
    edges: Tuple[Tuple[int, int, str], ...]

    @property
    def odd_count(self):
        return sum(1 for e in self.edges if e[2] == ODD)

    def __len__(self):
        return len(self.edges)


def simple_cycles(G: Graph, max_len=None) -> List[Tuple[int, ...]]:
    """
    Every simple cycle of length >= 3, listed once

    Each cycle starts at its smallest vertex and is oriented so that the second
    vertex is smaller than the last.
    """
    out = []
    for cyc in nx.simple_cycles(G.to_networkx(), length_bound=max_len):
        if len(cyc) < 3:
            continue
        i = cyc.index(min(cyc))
        cyc = cyc[i:] + cyc[:i]
        if cyc[1] > cyc[-1]:
            cyc = [cyc[0]] + cyc[:0:-1]
        out.append(tuple(cyc))
    out.sort(key=lambda c: (len(c), c))
    return out


def enumerate_odd_cycles(SG: SignedGraph, max_len=None, cap=None) -> List[SignedCycle]:
    """
    Odd cycles of a signed graph, including digons formed by an odd/even parallel pair

    A cycle through k pairs yields one SignedCycle per choice of parallel copies
    with an odd number of odd edges.

    Raises:
        TooLarge: max_len is unbounded and n exceeds the cycle cap
    """
    if cap is not None and max_len is None and SG.n > cap:
        raise TooLarge(f"Cycle enumeration on {SG.n} vertices exceeds cap {cap}")
    out = []
    for u, v in SG.pairs():
        if SG.signs_on(u, v) == {ODD, EVEN} and (max_len is None or max_len >= 2):
            out.append(SignedCycle((u, v), ((u, v, EVEN), (u, v, ODD))))
    for cyc in simple_cycles(SG.underlying(), max_len):
        pairs = [norm_edge(cyc[i], cyc[(i + 1) % len(cyc)]) for i in range(len(cyc))]
        options = [sorted(SG.signs_on(a, b)) for a, b in pairs]
        for choice in product(*options):
            if sum(_parity(s) for s in choice) % 2 == 1:
                out.append(SignedCycle(cyc, tuple((a, b, s) for (a, b), s in zip(pairs, choice))))
    return out


def is_balanced(SG: SignedGraph) -> bool:
    """True iff SG has no odd cycle (some resigning makes every edge even)"""
    potential = _potential(SG)
    return all((potential[u] + potential[v] + _parity(s)) % 2 == 0 for u, v, s in SG.edges)


def _potential(SG: SignedGraph) -> List[int]:
    """BFS parity labels that make a spanning forest even, preferring even copies on tree edges"""
    adj: Dict[int, List[Tuple[int, int]]] = {v: [] for v in range(SG.n)}
    for u, v, s in sorted(SG.edges, key=lambda e: (e[0], e[1], e[2] == ODD)):
        adj[u].append((v, _parity(s)))
        adj[v].append((u, _parity(s)))
    potential = [-1] * SG.n
    for root in range(SG.n):
        if potential[root] >= 0:
            continue
        potential[root] = 0
        queue = deque([root])
        while queue:
            x = queue.popleft()
            for y, p in adj[x]:
                if potential[y] < 0:
                    potential[y] = (potential[x] + p) % 2
                    queue.append(y)
    return potential


# ---------------------------------------------------------------------------
# Odd-K4 minors
# ---------------------------------------------------------------------------

def _canonical(n, edges):
    """Drop isolated vertices, relabel compactly and resign a spanning forest to even"""
    used = sorted({x for u, v, _ in edges for x in (u, v)})
    index = {v: i for i, v in enumerate(used)}
    relabeled = SignedGraph(len(used), [(index[u], index[v], s) for u, v, s in edges])
    potential = _potential(relabeled)
    out = frozenset((u, v, _sign(potential[u] + potential[v] + _parity(s))) for u, v, s in relabeled.edges)
    return len(used), out


def _reduce(n, edges):
    """
    Delete vertices of degree <= 1 and suppress degree-2 vertices

    A suppressed vertex v with neighbors a, b becomes edges ab carrying every
    parity realized by a path a-v-b.
    """
    edges = set(edges)
    changed = True
    while changed:
        changed = False
        nbrs: Dict[int, set] = {}
        for u, v, _ in edges:
            nbrs.setdefault(u, set()).add(v)
            nbrs.setdefault(v, set()).add(u)
        for v in sorted(nbrs):
            if len(nbrs[v]) <= 1:
                edges = {e for e in edges if v not in e[:2]}
                changed = True
                break
            if len(nbrs[v]) == 2:
                a, b = sorted(nbrs[v])
                to_a = {s for x, y, s in edges if {x, y} == {a, v}}
                to_b = {s for x, y, s in edges if {x, y} == {b, v}}
                edges = {e for e in edges if v not in e[:2]}
                for sa in to_a:
                    for sb in to_b:
                        edges.add((a, b, _sign(_parity(sa) + _parity(sb))))
                changed = True
                break
    return _canonical(n, edges)


def _four_vertex_odd_k4(n, edges):
    """Some choice of one copy per pair of a 4-vertex K4 makes every triangle odd"""
    if n != 4:
        return False
    pairs = sorted({(u, v) for u, v, _ in edges})
    if len(pairs) != 6:
        return False
    options = [sorted({s for x, y, s in edges if (x, y) == p}) for p in pairs]
    triangles = [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)]
    for choice in product(*options):
        sign = dict(zip(pairs, choice))
        if all(sum(_parity(sign[norm_edge(a, b)]) for a, b in ((t[0], t[1]), (t[0], t[2]), (t[1], t[2]))) % 2 == 1
               for t in triangles):
            return True
    return False


def is_odd_k4_minor_free(SG: SignedGraph, limit=ODD_K4_LIMIT) -> bool:
    """
    Exhaustive memoized search for an odd-K4 minor

    Minor operations are edge deletion and contraction of an edge after
    resigning it even. States are canonicalized up to resigning, and pruned
    when the underlying graph is K4-minor free or the signing is balanced.

    Raises:
        TooLarge: more than `limit` vertices
    """
    if SG.n > limit:
        raise TooLarge(f"Odd-K4 minor search supports at most {limit} vertices, got {SG.n}")
    memo: Dict[Tuple[int, FrozenSet], bool] = {}

    def has_odd_k4(state):
        if state in memo:
            return memo[state]
        n, edges = state
        result = False
        if n >= 4 and edges:
            sg = SignedGraph(n, edges)
            if not is_balanced(sg) and not is_k4_minor_free(sg.underlying()):
                if n == 4:
                    result = _four_vertex_odd_k4(n, edges)
                else:
                    result = _branch(n, edges)
        memo[state] = result
        return result

    def _branch(n, edges):
        for e in sorted(edges):
            if has_odd_k4(_reduce(n, edges - {e})):
                return True
        for u, v, s in sorted(edges):
            # resign at u if needed so uv is even, then merge v into u
            flip = {u} if s == ODD else set()
            merged = set()
            for x, y, t in edges:
                if (x in flip) != (y in flip):
                    t = EVEN if t == ODD else ODD
                x2 = u if x == v else x
                y2 = u if y == v else y
                if x2 != y2:
                    a, b = norm_edge(x2, y2)
                    merged.add((a, b, t))
            if has_odd_k4(_reduce(n, merged)):
                return True
        return False

    start = _reduce(SG.n, SG.edges)
    found = has_odd_k4(start)
    logger.debug(f"Odd-K4 search explored {len(memo)} states")
    return not found


def signed_sd_bounds(SG: SignedGraph):
    """sd*(G, Sigma) <= 1 and sd(G, Sigma) <= 2 when SG is odd-K4-minor free"""
    if is_odd_k4_minor_free(SG):
        return {'odd_k4_minor_free': True, 'sd_star_upper': 1, 'sd_upper': 2}
    return {'odd_k4_minor_free': False, 'sd_star_upper': None, 'sd_upper': None}
