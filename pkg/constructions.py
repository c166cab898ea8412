"""
Generators for the spherical frameworks behind the singularity degree bounds:
degenerate cycles, the wheel W_n, subdivided K4 skeletons (G_2, G_3, G_4),
subdivisions and splittings of wheels (G_5, G_6, G_7), the staircase G^k and
random boundary points of the elliptope on K_n
"""
import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from errors import InvalidInput, InvalidSpec
from graphs import Graph, complete_graph, cycle_graph, norm_edge, wheel_graph
from instance import SignedCompletionInstance
from logger_config import logger
from stress_rigidity import SphericalFramework, framework_to_instance

FAMILIES = ('degenerate_cycle', 'wheel_p1', 'subdivided_k4', 'wheel_splitting', 'gk', 'complete_boundary')
K4_PATHS = ('01', '02', '03', '12', '13', '23')
DEFAULT_EPS = 0.05
MAX_EPS = 0.1
DEFAULT_THETA = 3 * math.pi / 4


@dataclass(frozen=True)
class ConstructionSpec:
    """
    Family name plus its parameters

    degenerate_cycle: n >= 4, angles (optional, n - 3 increasing values in (0, pi/2))
    wheel_p1: n >= 5
    subdivided_k4: variant G2 | G3 | G4, counts {'01'..'23': int}, w_edge, eps
    wheel_splitting: case G5 | G6 | G7, n, j, subdivide [[a, b], ...], w_edge, eps
    gk: k >= 1, theta in (pi/2, pi)
    complete_boundary: n >= 1, r in [1, n], seed
    """
    family: str
    params: Dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidSpec(f"Unknown family {self.family!r}; expected one of {', '.join(FAMILIES)}")

    def get(self, key, default=None):
        return self.params.get(key, default)

    def to_dict(self):
        return {'family': self.family, 'params': dict(self.params)}

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict) or 'family' not in data:
            raise InvalidSpec("Construction spec needs a 'family' key")
        return cls(data['family'], dict(data.get('params') or {}))


def parse_params(items: Sequence[str]) -> Dict:
    """
    key=value strings from the command line; values are parsed as ints,
    floats or comma-separated int lists, falling back to strings
    """
    out = {}
    for item in items:
        key, sep, raw = item.partition('=')
        if not sep or not key:
            raise InvalidSpec(f"Parameter {item!r} is not of the form key=value")
        out[key.strip()] = _parse_value(raw.strip())
    return out


def _parse_value(raw):
    for conv in (int, float):
        try:
            return conv(raw)
        except ValueError:
            pass
    if ',' in raw:
        return [_parse_value(x) for x in raw.split(',') if x]
    return raw


def _int_param(spec: ConstructionSpec, key, default=None, low=None, high=None):
    value = spec.get(key, default)
    if value is None:
        raise InvalidSpec(f"{spec.family} needs parameter {key!r}")
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise InvalidSpec(f"Parameter {key!r} must be an integer, got {value!r}")
    if (low is not None and value < low) or (high is not None and value > high):
        raise InvalidSpec(f"Parameter {key}={value} outside [{low}, {high}]")
    return int(value)


def _eps_param(spec: ConstructionSpec):
    eps = float(spec.get('eps', DEFAULT_EPS))
    if not 0 < eps <= MAX_EPS:
        raise InvalidSpec(f"eps={eps!r} outside (0, {MAX_EPS}]")
    return eps


# ---------------------------------------------------------------------------
# Great-circle helpers
# ---------------------------------------------------------------------------

def _arc_point(a, b, t):
    """Point at fraction t along the shorter great-circle arc from a to b"""
    theta = math.acos(max(-1.0, min(1.0, float(np.dot(a, b)))))
    if theta < 1e-15:
        return np.array(a, dtype=float)
    if math.pi - theta < 1e-12:
        raise InvalidSpec("Arc between antipodal points is not unique")
    p = (math.sin((1 - t) * theta) * a + math.sin(t * theta) * b) / math.sin(theta)
    return p / np.linalg.norm(p)


def _toward(a, b, dist):
    """Point at angular distance dist from a on the arc toward b"""
    theta = math.acos(max(-1.0, min(1.0, float(np.dot(a, b)))))
    if dist >= theta:
        raise InvalidSpec(f"Distance {dist!r} exceeds the arc length {theta!r}")
    return _arc_point(a, b, dist / theta)


def _fill(pos, path):
    """Place the interior of a path equispaced between its placed endpoints"""
    if len(path) <= 2:
        return
    a, b = pos[path[0]], pos[path[-1]]
    m = len(path) - 1
    for i in range(1, m):
        pos[path[i]] = _arc_point(a, b, i / m)


# ---------------------------------------------------------------------------
# Subdivisions and splittings
# ---------------------------------------------------------------------------

def split_vertex(G: Graph, v, N1, N2) -> Graph:
    """
    Inverse of contracting an edge: v keeps the neighbours N1, a new vertex
    G.n takes N2 and the two are joined

    Raises:
        InvalidInput: N1 | N2 is not exactly the neighbourhood of v
    """
    N1, N2 = set(N1), set(N2)
    nbrs = set(G.neighbors(v))
    if N1 | N2 != nbrs:
        raise InvalidInput(f"Neighbour sets {sorted(N1)} and {sorted(N2)} do not cover N({v}) = {sorted(nbrs)}")
    y = G.n
    edges = [e for e in G.sorted_edges() if v not in e]
    edges += [(v, a) for a in N1] + [(y, b) for b in N2] + [(v, y)]
    return Graph(G.n + 1, edges)


class _Subdivision:
    """Base graph with base edge ab replaced by a path of counts[ab] inner vertices"""

    def __init__(self, G: Graph, counts=None):
        counts = {norm_edge(*e): int(m) for e, m in (counts or {}).items()}
        for e, m in counts.items():
            if not G.has_edge(*e) or m < 0:
                raise InvalidSpec(f"Cannot subdivide {e} {m} times")
        self.base = G
        self.chains = {}
        self.edges = []
        nxt = G.n
        for a, b in G.sorted_edges():
            m = counts.get((a, b), 0)
            chain = [a] + list(range(nxt, nxt + m)) + [b]
            nxt += m
            self.chains[(a, b)] = chain
            self.edges.extend(zip(chain, chain[1:]))
        self.n = nxt

    def chain(self, a, b) -> List[int]:
        c = self.chains[norm_edge(a, b)]
        return list(c) if a < b else c[::-1]

    def route(self, *base) -> List[int]:
        out = [base[0]]
        for a, b in zip(base, base[1:]):
            out += self.chain(a, b)[1:]
        return out

    def graph(self) -> Graph:
        return Graph(self.n, self.edges)


def _place_k4(paths: Dict[str, List[int]], w_edge, eps):
    """
    Coordinates of a subdivided K4 on v0..v3

    w1 w2 is edge w_edge of the v1-v2 path and w3 follows v0 on the v0-v3
    path; w1, w2, w3 sit on e1, e2, e3, v0 halves e1 e2, v3 halves v0 w3,
    v1 and v2 sit eps away from w1 and w2 toward v0 and everything else
    subdivides its arc.
    """
    p12, p03 = paths['12'], paths['03']
    if not 0 <= w_edge < len(p12) - 1:
        raise InvalidSpec(f"w_edge={w_edge} outside [0, {len(p12) - 2}]")
    e = np.eye(3)
    v0, v1, v2, v3 = p03[0], p12[0], p12[-1], p03[-1]
    w1, w2, w3 = p12[w_edge], p12[w_edge + 1], p03[1]
    pos = {w1: e[0], w2: e[1], w3: e[2]}
    pos[v0] = _arc_point(e[0], e[1], 0.5)
    if v3 != w3:
        pos[v3] = _arc_point(pos[v0], e[2], 0.5)
    if v1 != w1:
        pos[v1] = _toward(e[0], pos[v0], eps)
    if v2 != w2:
        pos[v2] = _toward(e[1], pos[v0], eps)
    _fill(pos, p12[:w_edge + 1])
    _fill(pos, p12[w_edge + 1:])
    _fill(pos, p03[1:])
    for key in ('01', '02', '13', '23'):
        _fill(pos, paths[key])
    labels = {'v0': v0, 'v1': v1, 'v2': v2, 'v3': v3, 'w1': w1, 'w2': w2, 'w3': w3}
    return pos, labels


def _complete_layout(sub: _Subdivision, pos):
    """Remaining base paths become straight arcs between their placed ends"""
    for chain in sub.chains.values():
        if all(v in pos for v in chain):
            continue
        if chain[0] not in pos or chain[-1] not in pos:
            raise InvalidSpec(f"Path {chain} has an unplaced end")
        _fill(pos, chain)
    missing = [v for v in range(sub.n) if v not in pos]
    if missing:
        raise InvalidSpec(f"Vertices {missing} are not on any placed path")
    return np.array([pos[v] for v in range(sub.n)])


def _framework(G: Graph, coords, spec: ConstructionSpec, **extra):
    params = dict(spec.params, family=spec.family, **extra)
    F = SphericalFramework(G, coords, params=params)
    logger.debug(f"Generated {spec.family}: {F}")
    return F


# ---------------------------------------------------------------------------
# Families
# ---------------------------------------------------------------------------

def gen_cycle_degenerate(n=4, angles=None) -> SphericalFramework:
    """
    C_n on v_1..v_n (vertices 0..n-1) in the plane: p(v_1) = p(v_2) = e_1,
    p(v_n) = e_2 and v_3..v_{n-1} at strictly increasing angles in (0, pi/2)
    """
    spec = ConstructionSpec('degenerate_cycle', {'n': n} if angles is None else {'n': n, 'angles': list(angles)})
    n = _int_param(spec, 'n', low=4)
    if angles is None:
        angles = [(i - 2) / (n - 2) * math.pi / 2 for i in range(3, n)]
    angles = [float(a) for a in angles]
    if len(angles) != n - 3:
        raise InvalidSpec(f"Expected {n - 3} interior angles, got {len(angles)}")
    full = [0.0, 0.0] + angles + [math.pi / 2]
    if any(b <= a for a, b in zip(full[1:], full[2:])):
        raise InvalidSpec(f"Interior angles {angles} are not strictly increasing inside (0, pi/2)")
    coords = [[math.cos(a), math.sin(a)] for a in full]
    coords[-1] = [0.0, 1.0]
    return _framework(cycle_graph(n), coords, spec, angles=full)


def gen_wheel_p1(n=5) -> SphericalFramework:
    """
    W_n (center 0): p(v_i) = e_i for i = 1, 2, 3, p(v_0) halves e_1 e_2 and
    v_4..v_{n-1} are equispaced strictly inside the arc from e_3 to e_1
    """
    spec = ConstructionSpec('wheel_p1', {'n': n})
    n = _int_param(spec, 'n', low=5)
    coords = np.zeros((n, 3))
    coords[0] = [1 / math.sqrt(2), 1 / math.sqrt(2), 0.0]
    coords[1:4] = np.eye(3)
    m = n - 3
    for j, v in enumerate(range(4, n), start=1):
        t = j / m * math.pi / 2
        coords[v] = [math.sin(t), 0.0, math.cos(t)]
    return _framework(wheel_graph(n), coords, spec)


def _k4_counts(spec: ConstructionSpec, variant):
    raw = spec.get('counts') or {}
    if not isinstance(raw, dict):
        raise InvalidSpec("counts must be a mapping")
    raw = dict(raw, **{k[1:]: v for k, v in spec.params.items() if k[1:] in K4_PATHS and k[0] == 'c'})
    if set(raw) - set(K4_PATHS):
        raise InvalidSpec(f"counts must map a subset of {K4_PATHS} to integers")
    counts = {k: int(raw.get(k, 0)) for k in K4_PATHS}
    if any(m < 0 for m in counts.values()):
        raise InvalidSpec("Subdivision counts must be >= 0")
    if variant == 'G2':
        if raw.get('03', 1) != 1 or any(counts[k] for k in K4_PATHS if k != '03'):
            raise InvalidSpec("G2 subdivides v0v3 exactly once and nothing else")
        counts['03'] = 1
    elif variant == 'G3':
        if raw.get('03', 1) != 1 or counts['01'] or counts['02'] or counts['12']:
            raise InvalidSpec("G3 subdivides v0v3 once and only the v1v3, v2v3 arcs otherwise")
        counts['03'] = 1
    return counts


def gen_subdivided_k4(spec: ConstructionSpec) -> SphericalFramework:
    """
    G_2, G_3 or G_4 on a K4 with branch vertices v0..v3 (vertices 0..3)

    G2: v0v3 subdivided once by w
    G3: G2 with the v1v3 and v2v3 arcs subdivided (counts '13', '23')
    G4: any subdivision; w_edge picks w1 w2 on the v1-v2 path
    """
    variant = spec.get('variant', 'G4')
    if variant not in ('G2', 'G3', 'G4'):
        raise InvalidSpec(f"Unknown subdivided_k4 variant {variant!r}")
    counts = _k4_counts(spec, variant)
    eps = _eps_param(spec)
    w_edge = _int_param(spec, 'w_edge', 0, low=0)
    sub = _Subdivision(complete_graph(4), {(int(k[0]), int(k[1])): m for k, m in counts.items()})
    paths = {k: sub.route(int(k[0]), int(k[1])) for k in K4_PATHS}
    pos, labels = _place_k4(paths, w_edge, eps)
    coords = _complete_layout(sub, pos)
    return _framework(sub.graph(), coords, spec, labels=labels)


def _splitting_base(case, n, j):
    rim = list(range(1, n))
    W = wheel_graph(n)
    if case == 'G5':
        if n < 4:
            raise InvalidSpec("G5 needs a wheel W_n with n >= 4")
        return W, None
    if n < 5:
        raise InvalidSpec(f"{case} needs a wheel W_n with n >= 5")
    if case == 'G6':
        if not 3 <= j <= n - 1:
            raise InvalidSpec(f"G6 needs 3 <= j <= {n - 1}, got {j}")
        return split_vertex(W, 0, [1, 2], rim[2:]), n
    if not 4 <= j <= n - 1:
        raise InvalidSpec(f"G7 needs 4 <= j <= {n - 1}, got {j}")
    return split_vertex(W, 0, [1, 3], [2] + rim[3:]), n


def _splitting_paths(sub: _Subdivision, case, n, j, y):
    back = list(range(n - 1, j - 1, -1))
    if case == 'G5':
        return {'01': sub.route(0, 1), '02': sub.route(0, 2), '03': sub.route(0, 3),
                '12': sub.route(1, 2), '23': sub.route(2, 3), '13': sub.route(1, *range(n - 1, 2, -1))}
    if case == 'G6':
        return {'01': sub.route(0, 1), '02': sub.route(0, 2), '03': sub.route(0, y, j),
                '12': sub.route(1, 2), '23': sub.route(*range(2, j + 1)), '13': sub.route(1, *back)}
    return {'01': sub.route(0, 1), '02': sub.route(0, 3), '03': sub.route(0, y, j),
            '12': sub.route(1, 2, 3), '23': sub.route(*range(3, j + 1)), '13': sub.route(1, *back)}


def gen_wheel_splitting(spec: ConstructionSpec) -> SphericalFramework:
    """
    G5: a subdivision of W_n (n >= 4, not K4) with u_i = vertex i, center 0
    G6: W_n with the center split into x = 0 (u_1, u_2) and y = n (the rest)
    G7: W_n with the center split into x = 0 (u_1, u_3) and y = n (the rest)

    Every case contains a subdivided K4 placed as G_4; the other paths are
    straight arcs. params['targets'] names the two vertices that stay
    unstressed at the first stage.

    Raises:
        InvalidSpec: unknown case, bad n or j, or a subdivision off the base graph
    """
    case = spec.get('case', 'G5')
    if case not in ('G5', 'G6', 'G7'):
        raise InvalidSpec(f"Unknown wheel_splitting case {case!r}")
    n = _int_param(spec, 'n', 7, low=4)
    j = _int_param(spec, 'j', 4 if n >= 5 else 3, low=3)
    eps = _eps_param(spec)
    w_edge = _int_param(spec, 'w_edge', 0, low=0)
    base, y = _splitting_base(case, n, j)
    counts = {}
    subdivide = spec.get('subdivide') or []
    if isinstance(subdivide, str):
        subdivide = subdivide.split(',')
    for e in subdivide:
        try:
            a, b = (int(x) for x in (e.split('-') if isinstance(e, str) else e))
        except (TypeError, ValueError):
            raise InvalidSpec(f"Bad subdivision edge {e!r}")
        counts[norm_edge(a, b)] = counts.get(norm_edge(a, b), 0) + 1
    if case == 'G5' and n == 4 and not counts:
        raise InvalidSpec("G5 must differ from K4")
    sub = _Subdivision(base, counts)
    paths = _splitting_paths(sub, case, n, j, y)
    pos, labels = _place_k4(paths, w_edge, eps)
    coords = _complete_layout(sub, pos)
    if case == 'G5':
        targets = [3, paths['13'][-2]]
    else:
        targets = [y, j]
    return _framework(sub.graph(), coords, spec, labels=labels, targets=targets)


def gk_labels(k) -> Dict[str, int]:
    """v1 = w1 = 0; u_i, v_i, w_i = 3i - 5, 3i - 4, 3i - 3 for i >= 2"""
    labels = {'v1': 0, 'w1': 0}
    for i in range(2, k + 1):
        base = 3 * (i - 2)
        labels.update({f'u{i}': base + 1, f'v{i}': base + 2, f'w{i}': base + 3})
    return labels


def gk_edges(k) -> List[Tuple[int, int]]:
    """E(G^k) from the recursive definition"""
    L = gk_labels(k)
    edges = []
    for i in range(2, k + 1):
        edges += [(L[f'w{i - 1}'], L[f'v{i}']), (L[f'w{i - 1}'], L[f'w{i}']),
                  (L[f'u{i}'], L[f'v{i - 1}']), (L[f'u{i}'], L[f'v{i}']), (L[f'u{i}'], L[f'w{i}'])]
    return edges


def gk_groups(k) -> List[List[int]]:
    """Vertex groups {u_i, v_i, w_i} for i = 1..k (group 1 is {v_1})"""
    L = gk_labels(k)
    return [[0]] + [[L[f'u{i}'], L[f'v{i}'], L[f'w{i}']] for i in range(2, k + 1)]


def gen_gk(k=2, theta=DEFAULT_THETA) -> SphericalFramework:
    """
    G^k in R^k: q(v_i) = q(w_i) = e_i and q(u_i) = cos(theta) e_{i-1} + sin(theta) e_i,
    so e_i lies between e_{i-1} and q(u_i) on their great circle
    """
    spec = ConstructionSpec('gk', {'k': k, 'theta': theta})
    k = _int_param(spec, 'k', low=1)
    theta = float(theta)
    if not math.pi / 2 < theta < math.pi:
        raise InvalidSpec(f"theta={theta!r} outside (pi/2, pi)")
    L = gk_labels(k)
    n = 3 * k - 2
    coords = np.zeros((n, k))
    coords[0, 0] = 1.0
    for i in range(2, k + 1):
        coords[L[f'v{i}'], i - 1] = 1.0
        coords[L[f'w{i}'], i - 1] = 1.0
        coords[L[f'u{i}'], i - 2] = math.cos(theta)
        coords[L[f'u{i}'], i - 1] = math.sin(theta)
    return _framework(Graph(n, gk_edges(k)), coords, spec, groups=gk_groups(k))


def complete_boundary_framework(n, r, seed=None, rng=None) -> SphericalFramework:
    """K_n with p(i) the normalised columns of a random r x n factor"""
    spec = ConstructionSpec('complete_boundary', {'n': n, 'r': r, 'seed': seed})
    n = _int_param(spec, 'n', low=1)
    r = _int_param(spec, 'r', low=1, high=n)
    rng = rng if rng is not None else np.random.default_rng(seed)
    factor = rng.standard_normal((r, n))
    factor /= np.linalg.norm(factor, axis=0)
    return _framework(complete_graph(n), factor.T, spec)


def gen_complete_boundary(n, r, seed=None, rng=None) -> SignedCompletionInstance:
    """Equality instance on K_n at a random rank-r point of the elliptope"""
    return framework_to_instance(complete_boundary_framework(n, r, seed, rng))


def generate(spec: ConstructionSpec) -> Tuple[SphericalFramework, SignedCompletionInstance]:
    """Framework and equality instance for any construction spec"""
    p = spec.params
    if spec.family == 'degenerate_cycle':
        F = gen_cycle_degenerate(_int_param(spec, 'n', 4), p.get('angles'))
    elif spec.family == 'wheel_p1':
        F = gen_wheel_p1(_int_param(spec, 'n', 5))
    elif spec.family == 'subdivided_k4':
        F = gen_subdivided_k4(spec)
    elif spec.family == 'wheel_splitting':
        F = gen_wheel_splitting(spec)
    elif spec.family == 'gk':
        F = gen_gk(_int_param(spec, 'k', 2), float(p.get('theta', DEFAULT_THETA)))
    else:
        F = complete_boundary_framework(_int_param(spec, 'n'), _int_param(spec, 'r'), p.get('seed'))
    return F, framework_to_instance(F)
