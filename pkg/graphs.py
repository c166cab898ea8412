"""
Simple undirected graphs and the structural classifiers used to bound
singularity degree: chordality, K4-minor-freeness, clique-sum decomposition
"""
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, FrozenSet, List, Optional, Tuple

import networkx as nx

from errors import InvalidInput, NumericalError
from logger_config import logger


def norm_edge(u, v):
    return (u, v) if u < v else (v, u)


class Graph:
    """
    Simple undirected graph on vertices 0..n-1

    Args:
        n: vertex count
        edges: iterable of vertex pairs; duplicates collapse, self-loops are rejected
    """

    def __init__(self, n, edges=()):
        if n < 0:
            raise InvalidInput(f"Vertex count must be >= 0, got {n}")
        normalized = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise InvalidInput(f"Self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise InvalidInput(f"Edge ({u}, {v}) out of range for n={n}")
            normalized.add(norm_edge(u, v))
        self._n = n
        self._edges = frozenset(normalized)
        adj = [set() for _ in range(n)]
        for u, v in self._edges:
            adj[u].add(v)
            adj[v].add(u)
        self._adj = tuple(frozenset(a) for a in adj)

    @property
    def n(self):
        return self._n

    @property
    def edges(self) -> FrozenSet[Tuple[int, int]]:
        return self._edges

    def sorted_edges(self):
        return sorted(self._edges)

    def neighbors(self, v):
        return self._adj[v]

    def degree(self, v):
        return len(self._adj[v])

    def has_edge(self, u, v):
        return norm_edge(u, v) in self._edges

    def induced(self, vertices):
        """Induced subgraph relabeled to 0..k-1, plus the old -> new map"""
        vertices = sorted(set(vertices))
        index = {v: i for i, v in enumerate(vertices)}
        edges = [(index[u], index[v]) for u, v in self._edges if u in index and v in index]
        return Graph(len(vertices), edges), index

    def is_complete(self):
        return len(self._edges) == self._n * (self._n - 1) // 2

    def is_forest(self):
        return nx.is_forest(self.to_networkx()) if self._n else True

    def to_networkx(self):
        g = nx.Graph()
        g.add_nodes_from(range(self._n))
        g.add_edges_from(self._edges)
        return g

    @classmethod
    def from_networkx(cls, g):
        nodes = sorted(g.nodes())
        index = {v: i for i, v in enumerate(nodes)}
        return cls(len(nodes), [(index[u], index[v]) for u, v in g.edges()])

    def __eq__(self, other):
        return isinstance(other, Graph) and self._n == other._n and self._edges == other._edges

    def __hash__(self):
        return hash((self._n, self._edges))

    def __repr__(self):
        return f"Graph(n={self._n}, m={len(self._edges)})"


# ---------------------------------------------------------------------------
# Small named graphs
# ---------------------------------------------------------------------------

def complete_graph(n):
    return Graph(n, combinations(range(n), 2))


def cycle_graph(n):
    return Graph(n, [(i, (i + 1) % n) for i in range(n)])


def path_graph(n):
    return Graph(n, [(i, i + 1) for i in range(n - 1)])


def wheel_graph(n):
    """W_n: center 0 joined to the cycle 1..n-1"""
    rim = list(range(1, n))
    edges = [(0, v) for v in rim]
    edges += [(rim[i], rim[(i + 1) % len(rim)]) for i in range(len(rim))]
    return Graph(n, edges)


# ---------------------------------------------------------------------------
# Chordality
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChordalityResult:
    chordal: bool
    ordering: Optional[Tuple[int, ...]] = None
    hole: Optional[Tuple[int, ...]] = None


def lex_bfs(G: Graph) -> List[int]:
    """Lexicographic BFS visit order; ties go to the lowest vertex index"""
    labels: Dict[int, List[int]] = {v: [] for v in range(G.n)}
    order = []
    unvisited = set(range(G.n))
    for step in range(G.n):
        v = max(sorted(unvisited), key=lambda u: labels[u])
        order.append(v)
        unvisited.discard(v)
        for w in G.neighbors(v):
            if w in unvisited:
                labels[w].append(G.n - step)
    return order


def verify_peo(G: Graph, ordering) -> Optional[Tuple[int, int, int]]:
    """
    Check a perfect elimination ordering

    Returns:
        None if valid, else (v, a, b) where a, b are non-adjacent later neighbors of v
    """
    position = {v: i for i, v in enumerate(ordering)}
    if sorted(position) != list(range(G.n)):
        raise InvalidInput("Ordering is not a permutation of the vertices")
    for v in ordering:
        later = sorted((w for w in G.neighbors(v) if position[w] > position[v]), key=position.get)
        for a, b in combinations(later, 2):
            if not G.has_edge(a, b):
                return v, a, b
    return None


def verify_hole(G: Graph, cycle) -> bool:
    """True iff cycle is an induced cycle of length >= 4"""
    k = len(cycle)
    if k < 4 or len(set(cycle)) != k:
        return False
    members = set(cycle)
    for i, v in enumerate(cycle):
        expected = {cycle[i - 1], cycle[(i + 1) % k]}
        if (G.neighbors(v) & members) != expected:
            return False
    return True


def _hole_through(G: Graph, v, a, b):
    """Induced cycle v-a-...-b-v avoiding the other neighbors of v, if one exists"""
    blocked = (set(G.neighbors(v)) | {v}) - {a, b}
    g = G.to_networkx()
    g.remove_nodes_from(blocked)
    try:
        path = nx.shortest_path(g, a, b)
    except nx.NetworkXNoPath:
        return None
    return (v, *path)


def find_hole(G: Graph, hint=None):
    """Search for a hole, trying the hint triple (v, a, b) first"""
    candidates = []
    if hint is not None:
        candidates.append(hint)
    for v in range(G.n):
        for a, b in combinations(sorted(G.neighbors(v)), 2):
            if not G.has_edge(a, b):
                candidates.append((v, a, b))
    for v, a, b in candidates:
        hole = _hole_through(G, v, a, b)
        if hole is not None and verify_hole(G, hole):
            return hole
    return None


def is_chordal(G: Graph) -> ChordalityResult:
    """
    Chordality by lexicographic BFS

    The reverse LexBFS order is a perfect elimination ordering iff G is chordal.
    On failure, a hole is grown from the first vertex whose later neighbors are
    not a clique.
    """
    order = lex_bfs(G)
    peo = tuple(reversed(order))
    failure = verify_peo(G, peo)
    if failure is None:
        return ChordalityResult(True, ordering=peo)
    hole = find_hole(G, hint=failure)
    if hole is None:
        raise NumericalError("LexBFS ordering failed but no hole was found")
    return ChordalityResult(False, hole=tuple(hole))


# ---------------------------------------------------------------------------
# K4 minors
# ---------------------------------------------------------------------------

def is_k4_minor_free(G: Graph) -> bool:
    """
    Series-parallel reduction

    Vertices of degree <= 1 are deleted and degree-2 vertices are suppressed
    (parallel edges merge). G is K4-minor free iff the reduction empties it,
    since a graph of minimum degree 3 always has a K4 minor.
    """
    adj = {v: set(G.neighbors(v)) for v in range(G.n)}
    queue = [v for v in adj if len(adj[v]) <= 2]
    while queue:
        v = queue.pop()
        if v not in adj or len(adj[v]) > 2:
            continue
        nbrs = list(adj.pop(v))
        for w in nbrs:
            adj[w].discard(v)
        if len(nbrs) == 2:
            a, b = nbrs
            adj[a].add(b)
            adj[b].add(a)
        queue.extend(w for w in nbrs if len(adj[w]) <= 2)
    return not adj


# ---------------------------------------------------------------------------
# Clique-sum decomposition
# ---------------------------------------------------------------------------

LEAF_CLASSES = ('complete', 'chordal', 'k4-minor-free', 'other')


@dataclass(frozen=True)
class CliqueSumLeaf:
    vertices: Tuple[int, ...]
    edges: FrozenSet[Tuple[int, int]]
    label: str


@dataclass(frozen=True)
class CliqueSumNode:
    separator: Tuple[int, ...]
    children: Tuple[object, ...]


@dataclass(frozen=True)
class CliqueSumTree:
    root: object
    n: int = 0
    leaf_list: Tuple[CliqueSumLeaf, ...] = field(default=())

    def leaves(self) -> Tuple[CliqueSumLeaf, ...]:
        return self.leaf_list

    def separators(self):
        out = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if isinstance(node, CliqueSumNode):
                out.append(node.separator)
                stack.extend(node.children)
        return out

    def reassemble(self) -> Graph:
        """Union of the leaves, which clique sums glue back into the original graph"""
        edges = set()
        for leaf in self.leaf_list:
            edges |= leaf.edges
        return Graph(self.n, edges)

    def only_complete_or_k4_free(self):
        return all(leaf.label != 'other' for leaf in self.leaf_list)


def _leaf_label(G: Graph):
    if G.is_complete():
        return 'complete'
    if is_chordal(G).chordal:
        return 'chordal'
    if is_k4_minor_free(G):
        return 'k4-minor-free'
    return 'other'


def _find_clique_separator(G: Graph, vertices):
    """Smallest clique S (lexicographically first) with G[vertices] - S disconnected"""
    sub = G.to_networkx().subgraph(vertices)
    if not nx.is_connected(sub):
        return ()
    cliques = sorted((tuple(sorted(c)) for c in nx.enumerate_all_cliques(sub)),
                     key=lambda c: (len(c), c))
    for clique in cliques:
        if len(clique) >= len(vertices) - 1:
            continue
        rest = sub.copy()
        rest.remove_nodes_from(clique)
        if rest.number_of_nodes() and not nx.is_connected(rest):
            return clique
    return None


def clique_sum_decompose(G: Graph) -> CliqueSumTree:
    """
    Split G along clique separators until each piece is complete, K4-minor free,
    or has no clique separator

    Leaves carry the strongest class that applies. Pieces that are already
    complete or K4-minor free are not split further.
    """
    leaves = []

    def build(vertices):
        vertices = tuple(sorted(vertices))
        sub, index = G.induced(vertices)
        inverse = {i: v for v, i in index.items()}
        if sub.is_complete() or is_k4_minor_free(sub):
            leaf = CliqueSumLeaf(vertices, frozenset(norm_edge(inverse[u], inverse[v]) for u, v in sub.edges),
                                 _leaf_label(sub))
            leaves.append(leaf)
            return leaf
        separator = _find_clique_separator(G, vertices)
        if separator is None:
            leaf = CliqueSumLeaf(vertices, frozenset(norm_edge(inverse[u], inverse[v]) for u, v in sub.edges),
                                 _leaf_label(sub))
            leaves.append(leaf)
            return leaf
        rest = G.to_networkx().subgraph(set(vertices) - set(separator))
        children = tuple(build(set(comp) | set(separator))
                         for comp in sorted(nx.connected_components(rest), key=min))
        return CliqueSumNode(separator, children)

    root = build(range(G.n))
    tree = CliqueSumTree(root, n=G.n, leaf_list=tuple(leaves))
    logger.debug(f"Clique-sum decomposition: {len(leaves)} leaves, separators {tree.separators()}")
    return tree


# ---------------------------------------------------------------------------
# Wheel obstructions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WheelObstruction:
    """Induced subgraph forcing sd* >= 2: W_n (n >= 5) or a proper splitting of a wheel"""
    vertices: Tuple[int, ...]
    kind: str
    center: Optional[int] = None

    def to_dict(self):
        return {'vertices': list(self.vertices), 'kind': self.kind, 'center': self.center}


def _decomposable(G: Graph, vertices) -> bool:
    sub, _ = G.induced(vertices)
    return clique_sum_decompose(sub).only_complete_or_k4_free()


def _wheel_center(H: Graph) -> Optional[int]:
    if H.n < 5:
        return None
    for c in range(H.n):
        if H.degree(c) != H.n - 1:
            continue
        rim, _ = H.induced([v for v in range(H.n) if v != c])
        if all(rim.degree(v) == 2 for v in range(rim.n)) and nx.is_connected(rim.to_networkx()):
            return c
    return None


def find_wheel_obstruction(G: Graph) -> Optional[WheelObstruction]:
    """
    Minimal induced subgraph that is not a clique sum of complete and K4-minor-free graphs

    Vertices are deleted greedily while the remainder stays non-decomposable. The
    decomposable class is closed under induced subgraphs, so what survives is minimal:
    a wheel W_n with n >= 5 or a proper splitting of W_n with n >= 4.
    """
    keep = list(range(G.n))
    if _decomposable(G, keep):
        return None
    for v in range(G.n):
        rest = [u for u in keep if u != v]
        if not _decomposable(G, rest):
            keep = rest
    H, _ = G.induced(keep)
    center = _wheel_center(H)
    if center is not None:
        return WheelObstruction(tuple(keep), 'wheel', keep[center])
    return WheelObstruction(tuple(keep), 'splitting')


# ---------------------------------------------------------------------------
# Singularity-degree bounds from structure
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SdBounds:
    sd_exact: Optional[int]
    sd_lower: int
    sd_upper: Optional[int]
    sd_star_exact: Optional[int]
    sd_star_lower: int
    sd_star_upper: Optional[int]
    chordality: ChordalityResult
    k4_minor_free: bool
    decomposition: CliqueSumTree
    reasons: Tuple[str, ...]
    obstruction: Optional[WheelObstruction] = None

    def to_dict(self):
        return {
            'sd': {'exact': self.sd_exact, 'lower': self.sd_lower, 'upper': self.sd_upper},
            'sd_star': {'exact': self.sd_star_exact, 'lower': self.sd_star_lower, 'upper': self.sd_star_upper},
            'chordal': self.chordality.chordal,
            'peo': list(self.chordality.ordering) if self.chordality.ordering else None,
            'hole': list(self.chordality.hole) if self.chordality.hole else None,
            'k4_minor_free': self.k4_minor_free,
            'leaves': [{'vertices': list(l.vertices), 'label': l.label} for l in self.decomposition.leaves()],
            'reasons': list(self.reasons),
            'obstruction': self.obstruction.to_dict() if self.obstruction else None,
        }


def classify_sd_bounds(G: Graph) -> SdBounds:
    """
    Bounds on sd(G) and sd*(G) from the structure theorems

    - sd = 0 iff G is edgeless
    - sd <= 1 iff G is chordal, so non-chordal graphs have sd >= 2
    - sd* = 0 iff G is a forest
    - sd* <= 1 iff G is a clique sum of complete and K4-minor-free graphs, and then sd <= 2
    """
    chordality = is_chordal(G)
    k4_free = is_k4_minor_free(G)
    tree = clique_sum_decompose(G)
    decomposable = tree.only_complete_or_k4_free()
    reasons = []
    obstruction = None

    has_edges = bool(G.edges)
    forest = G.is_forest()

    if not has_edges:
        sd_lower, sd_upper = 0, 0
        reasons.append("edgeless: sd = 0")
    elif chordality.chordal:
        sd_lower, sd_upper = 1, 1
        reasons.append("chordal with an edge: sd = 1")
    else:
        sd_lower = 2
        sd_upper = 2 if decomposable else None
        reasons.append("not chordal: sd >= 2")
        if decomposable:
            reasons.append("clique sum of complete and K4-minor-free graphs: sd <= 2")

    if forest:
        star_lower, star_upper = 0, 0
        reasons.append("acyclic: sd* = 0")
    elif decomposable:
        star_lower, star_upper = 1, 1
        reasons.append("has a cycle and decomposes into complete and K4-minor-free pieces: sd* = 1")
    else:
        star_lower, star_upper = 2, None
        obstruction = find_wheel_obstruction(G)
        if obstruction.kind == 'wheel':
            reasons.append(f"induced W_{len(obstruction.vertices)} on {list(obstruction.vertices)}: sd* >= 2")
        else:
            reasons.append(f"induced proper splitting of a wheel on {list(obstruction.vertices)}: sd* >= 2")

    sd_exact = sd_lower if sd_upper == sd_lower else None
    star_exact = star_lower if star_upper == star_lower else None
    return SdBounds(sd_exact, sd_lower, sd_upper, star_exact, star_lower, star_upper,
                    chordality, k4_free, tree, tuple(reasons), obstruction)
