"""
PSD completion instances P(G, Sigma, c): the model, instance files,
resigning and degenerate-edge preprocessing
"""
import json
from collections import deque
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from errors import InfeasibleInstance, InstanceParseError, InvalidInput, MetricInfeasible, WeightOutOfRange
from graphs import Graph
from linalg_core import SymMatrix
from logger_config import logger
from signed_graphs import EVEN, ODD, SignedGraph, merge_map_for

KINDS = ('eq', 'ge', 'le')
DEGENERATE_TOL = 1e-12
FLIP_KIND = {'eq': 'eq', 'ge': 'le', 'le': 'ge'}


@dataclass(frozen=True, order=True)
class Constraint:
    """X[u, v] = c (eq), X[u, v] >= c (ge) or X[u, v] <= c (le), with u < v"""
    u: int
    v: int
    kind: str
    c: float

    @property
    def key(self):
        return (self.u, self.v, self.kind)

    @property
    def pair(self):
        return (self.u, self.v)

    def to_dict(self):
        return {'u': self.u, 'v': self.v, 'kind': self.kind, 'c': self.c}


class SignedCompletionInstance:
    """
    Diagonal fixed to 1 plus one constraint per (pair, kind)

    ge edges are the even edges E minus Sigma, le edges the odd edges Sigma;
    an eq edge stands for an odd/even parallel pair.

    Args:
        n: vertex count
        constraints: iterable of Constraint or (u, v, kind, c) tuples

    Raises:
        InvalidInput: bad vertex index, self-loop, unknown kind or duplicate pair+kind
        WeightOutOfRange: |c| > 1
    """

    def __init__(self, n, constraints=()):
        if n < 0:
            raise InvalidInput(f"Vertex count must be >= 0, got {n}")
        seen = set()
        out = []
        for item in constraints:
            u, v, kind, c = (item.u, item.v, item.kind, item.c) if isinstance(item, Constraint) else item
            u, v, c = int(u), int(v), float(c)
            if kind not in KINDS:
                raise InvalidInput(f"Unknown constraint kind {kind!r}")
            if u == v or not (0 <= u < n and 0 <= v < n):
                raise InvalidInput(f"Bad edge ({u}, {v}) for n={n}")
            if not np.isfinite(c) or abs(c) > 1:
                raise WeightOutOfRange(f"Weight {c!r} on ({u}, {v}) is outside [-1, 1]")
            u, v = min(u, v), max(u, v)
            if (u, v, kind) in seen:
                raise InvalidInput(f"Duplicate {kind} constraint on ({u}, {v})")
            seen.add((u, v, kind))
            out.append(Constraint(u, v, kind, c))
        self._n = n
        self._constraints = tuple(sorted(out))

    @property
    def n(self):
        return self._n

    @property
    def constraints(self) -> Tuple[Constraint, ...]:
        return self._constraints

    @property
    def keys(self):
        return tuple(c.key for c in self._constraints)

    @property
    def weights(self) -> Dict[Tuple[int, int, str], float]:
        return {c.key: c.c for c in self._constraints}

    def graph(self) -> Graph:
        return Graph(self._n, [c.pair for c in self._constraints])

    def signed_graph(self) -> SignedGraph:
        """eq -> odd and even copies, ge -> even, le -> odd"""
        edges = []
        for c in self._constraints:
            if c.kind in ('eq', 'ge'):
                edges.append((c.u, c.v, EVEN))
            if c.kind in ('eq', 'le'):
                edges.append((c.u, c.v, ODD))
        return SignedGraph(self._n, edges)

    def residuals(self, X):
        """Largest violation of the diagonal and edge constraints at X"""
        X = np.asarray(X.array if isinstance(X, SymMatrix) else X, dtype=float)
        worst = float(np.max(np.abs(np.diag(X) - 1.0))) if self._n else 0.0
        for c in self._constraints:
            x = X[c.u, c.v]
            if c.kind == 'eq':
                worst = max(worst, abs(x - c.c))
            elif c.kind == 'ge':
                worst = max(worst, c.c - x)
            else:
                worst = max(worst, x - c.c)
        return worst

    def is_feasible_point(self, X, tol=1e-7):
        return self.residuals(X) <= tol

    def to_dict(self):
        return {'n': self._n, 'edges': [c.to_dict() for c in self._constraints]}

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict) or set(data) != {'n', 'edges'}:
            raise InstanceParseError("Instance must have exactly the keys 'n' and 'edges'")
        n = data['n']
        if not isinstance(n, int) or isinstance(n, bool):
            raise InstanceParseError(f"n must be an integer, got {n!r}")
        if not isinstance(data['edges'], list):
            raise InstanceParseError("edges must be a list")
        rows = []
        for e in data['edges']:
            if not isinstance(e, dict) or set(e) != {'u', 'v', 'kind', 'c'}:
                raise InstanceParseError(f"Bad edge entry {e!r}")
            if not all(isinstance(e[k], int) and not isinstance(e[k], bool) for k in ('u', 'v')):
                raise InstanceParseError(f"Edge endpoints must be integers: {e!r}")
            if not isinstance(e['c'], (int, float)) or isinstance(e['c'], bool):
                raise InstanceParseError(f"Edge weight must be a number: {e!r}")
            rows.append((e['u'], e['v'], e['kind'], e['c']))
        try:
            return cls(n, rows)
        except WeightOutOfRange:
            raise
        except InvalidInput as e:
            raise InstanceParseError(str(e))

    def __eq__(self, other):
        return isinstance(other, SignedCompletionInstance) and self._n == other._n \
            and self._constraints == other._constraints

    def __hash__(self):
        return hash((self._n, self._constraints))

    def __repr__(self):
        return f"SignedCompletionInstance(n={self._n}, constraints={len(self._constraints)})"


def load_instance(path) -> SignedCompletionInstance:
    """
    Read an instance file

    Raises:
        InstanceParseError: unreadable file, bad JSON, unknown keys, bad edges
        WeightOutOfRange: |c| > 1
    """
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise InstanceParseError(f"Cannot read instance {path}: {e}")
    inst = SignedCompletionInstance.from_dict(data)
    logger.debug(f"Loaded {inst} from {path}")
    return inst


def save_instance(inst: SignedCompletionInstance, path):
    # json writes floats with repr, the shortest string that round-trips exactly
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(inst.to_dict(), f, indent=2)


def instance_from_gram(G: Graph, X, kind='eq') -> SignedCompletionInstance:
    """Instance whose weights are the entries of X on the edges of G"""
    X = np.asarray(X.array if isinstance(X, SymMatrix) else X, dtype=float)
    return SignedCompletionInstance(G.n, [(u, v, kind, float(np.clip(X[u, v], -1.0, 1.0)))
                                          for u, v in G.sorted_edges()])


def resign_instance(inst: SignedCompletionInstance, S) -> SignedCompletionInstance:
    """
    Flip c and swap ge/le on the cut delta(S)

    X is feasible for inst iff D X D is feasible for the result, D = diag(+-1)
    with -1 on S.
    """
    S = set(S)
    if any(not 0 <= v < inst.n for v in S):
        raise InvalidInput("Resigning set has vertices out of range")
    out = []
    for c in inst.constraints:
        if (c.u in S) != (c.v in S):
            out.append((c.u, c.v, FLIP_KIND[c.kind], -c.c))
        else:
            out.append((c.u, c.v, c.kind, c.c))
    return SignedCompletionInstance(inst.n, out)


def sign_vector(n, S):
    d = np.ones(n)
    d[list(S)] = -1.0
    return d


# ---------------------------------------------------------------------------
# Degenerate edges
# ---------------------------------------------------------------------------

class DegenerateReduction(NamedTuple):
    reduced: SignedCompletionInstance
    merge: List[int]
    resigned: frozenset
    extra_stage: bool
    contracted: Tuple[Tuple[int, int, str], ...]
    original: Optional[SignedCompletionInstance] = None


def degenerate_edges(inst: SignedCompletionInstance):
    """(F+, F-): ge/eq edges with c = 1 and le/eq edges with c = -1"""
    plus, minus = [], []
    for c in inst.constraints:
        if c.kind in ('ge', 'eq') and c.c >= 1 - DEGENERATE_TOL:
            plus.append(c)
        elif c.kind in ('le', 'eq') and c.c <= -1 + DEGENERATE_TOL:
            minus.append(c)
    return plus, minus


def _two_colour(n, plus, minus):
    """Colour so F+ joins equal colours and F- joins different colours; None plus a cycle on conflict"""
    adj = [[] for _ in range(n)]
    for c in plus:
        adj[c.u].append((c.v, 0))
        adj[c.v].append((c.u, 0))
    for c in minus:
        adj[c.u].append((c.v, 1))
        adj[c.v].append((c.u, 1))
    colour = [None] * n
    parent = [None] * n
    for root in range(n):
        if colour[root] is not None:
            continue
        colour[root] = 0
        queue = deque([root])
        while queue:
            x = queue.popleft()
            for y, odd in adj[x]:
                want = colour[x] ^ odd
                if colour[y] is None:
                    colour[y] = want
                    parent[y] = x
                    queue.append(y)
                elif colour[y] != want:
                    return None, _tree_cycle(parent, x, y)
    return colour, None


def _tree_cycle(parent, x, y):
    def path(v):
        out = [v]
        while parent[v] is not None:
            v = parent[v]
            out.append(v)
        return out
    px, py = path(x), path(y)
    common = set(px) & set(py)
    top = next(v for v in px if v in common)
    return px[:px.index(top) + 1] + list(reversed(py[:py.index(top)]))


def preprocess_degenerate(inst: SignedCompletionInstance) -> DegenerateReduction:
    """
    Resign so every degenerate edge reads X[u, v] = 1, then contract them

    Returns:
        DegenerateReduction(reduced, merge, resigned, extra_stage, contracted);
        components are numbered by their smallest vertex

    Raises:
        MetricInfeasible: the degenerate edges force an odd cycle of -1 entries,
            or an edge inside a contracted component cannot take the value 1
    """
    plus, minus = degenerate_edges(inst)
    if not plus and not minus:
        return DegenerateReduction(inst, list(range(inst.n)), frozenset(), False, (), inst)

    colour, cycle = _two_colour(inst.n, plus, minus)
    if colour is None:
        raise MetricInfeasible(f"Degenerate edges force an odd cycle through {cycle}", cycle=cycle)
    S = frozenset(v for v in range(inst.n) if colour[v] == 1)
    resigned = resign_instance(inst, S)
    F = [c for c in plus + minus]
    merge = merge_map_for(inst.n, [c.pair for c in F])
    m = max(merge) + 1 if merge else 0

    merged: Dict[Tuple[int, int, str], float] = {}
    for c in resigned.constraints:
        a, b = merge[c.u], merge[c.v]
        if a == b:
            if (c.kind == 'eq' and c.c < 1 - DEGENERATE_TOL) or (c.kind == 'le' and c.c < 1 - DEGENERATE_TOL):
                raise MetricInfeasible(
                    f"Edge ({c.u}, {c.v}) lies inside a contracted component but cannot equal 1",
                    cycle=[c.u, c.v])
            continue
        key = (min(a, b), max(a, b), c.kind)
        if key not in merged:
            merged[key] = c.c
        elif c.kind == 'ge':
            merged[key] = max(merged[key], c.c)
        elif c.kind == 'le':
            merged[key] = min(merged[key], c.c)
        elif abs(merged[key] - c.c) > DEGENERATE_TOL:
            raise MetricInfeasible(f"Parallel equalities {merged[key]} and {c.c} meet on components {key[:2]}",
                                   cycle=[c.u, c.v])
    reduced = SignedCompletionInstance(m, [(u, v, k, w) for (u, v, k), w in sorted(merged.items())])
    logger.info(f"Contracted {len(F)} degenerate edges: n={inst.n} -> {m}")
    return DegenerateReduction(reduced, merge, S, True, tuple(c.key for c in F), inst)


def uncontract_solution(Xr, red: DegenerateReduction):
    """X = D P Xr P^T D, P the 0/1 merge matrix and D the resigning signs"""
    Xr = np.asarray(Xr.array if isinstance(Xr, SymMatrix) else Xr, dtype=float)
    n = len(red.merge)
    P = np.zeros((n, red.reduced.n))
    P[np.arange(n), red.merge] = 1.0
    D = sign_vector(n, red.resigned)
    X = (D[:, None] * (P @ Xr @ P.T)) * D[None, :]
    return SymMatrix(X)


def max_rank_solution(inst: SignedCompletionInstance, config=None) -> SymMatrix:
    """
    A feasible X of maximum rank

    Raises:
        InfeasibleInstance: carries the certificate chain ending in a negative objective
    """
    # import here to avoid circular dependency
    from facial_reduction import facial_reduction
    result = facial_reduction(inst, config=config)
    if result.infeasible:
        raise InfeasibleInstance(f"{inst} has no PSD completion", certificate=result.certificate)
    return result.max_rank_solution
