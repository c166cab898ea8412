"""
Spherical frameworks, equilibrium stresses, staged-stress analysis,
super stability and universal rigidity certificates

Equilibrium at vertex i is row i of Omega P^T with Omega built from the
stress as everywhere else (Omega[i, j] = w(ij) / 2), so for a PSD stress
equilibrium holds iff <Omega, Gram(p)> = 0.
"""
import json
from dataclasses import dataclass
from typing import FrozenSet, Optional, Sequence, Tuple

import numpy as np

from certificates import NestedPSDCertificate, StressVector
from config import get_config
from errors import InstanceParseError, InvalidInput, NumericalError
from graphs import Graph, norm_edge
from instance import KINDS, SignedCompletionInstance
from linalg_core import eig_sym, orthonormalize, svec

UNIT_TOL = 1e-10
CLAMP_TOL = 1e-12
EQUILIBRIUM_TOL = 1e-7
STAGE_OBJECTIVE_TOL = 1e-7
CONIC_RTOL = 1e-8


class SphericalFramework:
    """
    Graph with a unit vector p(v) in R^d per vertex

    Args:
        graph: Graph
        coords: n x d array, row v is p(v)
        kinds: optional {(u, v): 'eq' | 'ge' | 'le'}; missing edges are eq
        params: construction parameters kept alongside the coordinates

    Raises:
        InvalidInput: shape mismatch or a vector off the unit sphere
    """

    def __init__(self, graph: Graph, coords, kinds=None, params=None):
        P = np.array(coords, dtype=float)
        if P.ndim != 2 or P.shape[0] != graph.n:
            raise InvalidInput(f"Expected {graph.n} coordinate rows, got shape {P.shape}")
        norms = np.linalg.norm(P, axis=1)
        bad = np.flatnonzero(np.abs(norms - 1.0) > UNIT_TOL)
        if bad.size:
            raise InvalidInput(f"Vertex {int(bad[0])} has norm {norms[bad[0]]!r}")
        P.flags.writeable = False
        kinds = {norm_edge(u, v): k for (u, v), k in (kinds or {}).items()}
        for pair, kind in kinds.items():
            if kind not in KINDS or not graph.has_edge(*pair):
                raise InvalidInput(f"Bad kind {kind!r} for pair {pair}")
        self.graph = graph
        self.coords = P
        self.kinds = {e: kinds.get(e, 'eq') for e in graph.sorted_edges()}
        self.params = dict(params or {})

    @property
    def n(self):
        return self.graph.n

    @property
    def d(self):
        return self.coords.shape[1]

    def p(self, v):
        return self.coords[v]

    def gram(self):
        return self.coords @ self.coords.T

    def to_dict(self):
        G = self.gram()
        return {
            'n': self.n,
            'd': self.d,
            'coords': [[float(x) for x in row] for row in self.coords],
            'edges': [{'u': u, 'v': v, 'kind': self.kinds[(u, v)], 'c': float(np.clip(G[u, v], -1, 1))}
                      for u, v in self.graph.sorted_edges()],
        }

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict) or set(data) != {'n', 'd', 'coords', 'edges'}:
            raise InstanceParseError("Framework must have exactly the keys 'n', 'd', 'coords' and 'edges'")
        try:
            n, d = int(data['n']), int(data['d'])
            coords = np.array(data['coords'], dtype=float).reshape(n, d)
            edges, kinds = [], {}
            for e in data['edges']:
                if not isinstance(e, dict) or set(e) != {'u', 'v', 'kind', 'c'}:
                    raise InstanceParseError(f"Bad framework edge {e!r}")
                edges.append((int(e['u']), int(e['v'])))
                kinds[(int(e['u']), int(e['v']))] = e['kind']
            return cls(Graph(n, edges), coords, kinds)
        except (TypeError, ValueError, InvalidInput) as e:
            raise InstanceParseError(f"Bad framework: {e}")

    def __repr__(self):
        return f"SphericalFramework(n={self.n}, d={self.d}, edges={len(self.graph.edges)})"


def save_framework(F: SphericalFramework, path):
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(F.to_dict(), f, indent=2)


def load_framework(path) -> SphericalFramework:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise InstanceParseError(f"Cannot read framework {path}: {e}")
    return SphericalFramework.from_dict(data)


def framework_to_instance(F: SphericalFramework, kinds=None) -> SignedCompletionInstance:
    """
    P(G, p): c(ij) = p(i) . p(j) with the framework's edge kinds

    Args:
        kinds: None, one kind for every edge, or {(u, v): kind} overriding the framework

    Raises:
        NumericalError: a dot product overshoots [-1, 1] by more than 1e-12
    """
    G = F.gram()
    chosen = dict(F.kinds)
    if isinstance(kinds, str):
        chosen = dict.fromkeys(chosen, kinds)
    elif kinds:
        chosen.update({norm_edge(u, v): k for (u, v), k in kinds.items()})
    rows = []
    for (u, v), kind in sorted(chosen.items()):
        c = float(G[u, v])
        if abs(c) > 1.0:
            if abs(c) - 1.0 > CLAMP_TOL:
                raise NumericalError(f"Dot product {c!r} on ({u}, {v}) leaves [-1, 1]")
            c = float(np.sign(c))
        rows.append((u, v, kind, c))
    return SignedCompletionInstance(F.n, rows)


# ---------------------------------------------------------------------------
# Equilibrium
# ---------------------------------------------------------------------------

def _forces(F: SphericalFramework, omega: StressVector):
    """Row i is w(i) p(i) + sum_j w(ij)/2 p(j), i.e. Omega P^T"""
    if omega.n != F.n:
        raise InvalidInput(f"Stress has {omega.n} vertices, framework has {F.n}")
    return omega.matrix() @ F.coords


def equilibrium_residual(F: SphericalFramework, omega: StressVector) -> float:
    forces = _forces(F, omega)
    return float(np.max(np.linalg.norm(forces, axis=1))) if F.n else 0.0


def _complement_projector(F: SphericalFramework, vertices):
    vertices = sorted(vertices)
    if not vertices:
        return np.eye(F.d)
    Q = orthonormalize(F.coords[vertices].T, n=F.d).columns
    return np.eye(F.d) - Q @ Q.T


def projected_equilibrium_residual(F: SphericalFramework, omega: StressVector, stressed=()) -> float:
    """Equilibrium residual after projecting onto the orthogonal complement of span p(stressed)"""
    psi = _complement_projector(F, stressed)
    forces = _forces(F, omega) @ psi
    return float(np.max(np.linalg.norm(forces, axis=1))) if F.n else 0.0


def vertex_residuals(F: SphericalFramework, omega: StressVector, stressed=()):
    psi = _complement_projector(F, stressed)
    return np.linalg.norm(_forces(F, omega) @ psi, axis=1)


# ---------------------------------------------------------------------------
# Staged stresses
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StageReport:
    index: int
    stressed: FrozenSet[int]
    new: FrozenSet[int]
    zero_edges: Tuple[Tuple[int, int], ...]
    residuals: Tuple[float, ...]

    @property
    def max_residual(self):
        return max(self.residuals, default=0.0)


@dataclass(frozen=True)
class StagedStressReport:
    """V_0 = {} and V_j the vertices stressed at some stage <= j"""
    n: int
    stages: Tuple[StageReport, ...] = ()

    def stressed(self, j) -> FrozenSet[int]:
        return frozenset() if j == 0 else self.stages[j - 1].stressed

    def unstressed(self, j) -> FrozenSet[int]:
        return frozenset(range(self.n)) - self.stressed(j)

    def is_monotone(self):
        sets = [frozenset()] + [s.stressed for s in self.stages]
        return all(a <= b for a, b in zip(sets, sets[1:]))

    def first_stressed(self):
        """Stage at which each vertex first becomes stressed (None if never)"""
        out = {}
        for s in self.stages:
            for v in s.new:
                out[v] = s.index
        return {v: out.get(v) for v in range(self.n)}

    def to_dict(self):
        return {
            'n': self.n,
            'stages': [{'index': s.index, 'stressed': sorted(s.stressed), 'new': sorted(s.new),
                        'zero_edges': [list(e) for e in s.zero_edges], 'max_residual': s.max_residual}
                       for s in self.stages],
        }


def _stage_stressed(F: SphericalFramework, stage: StressVector, thr):
    out = {v for v in range(F.n) if abs(stage.vertex[v]) > thr}
    for (u, v, _), w in zip(stage.edge_keys, stage.edge_vals):
        if abs(w) > thr:
            out.update((u, v))
    return out


def staged_stress_analysis(F: SphericalFramework, cert: NestedPSDCertificate, config=None) -> StagedStressReport:
    """
    Stressed-vertex sets per stage, edges with zero weight at each stage and
    projected-equilibrium residuals against the previously stressed vertices
    """
    cfg = config or get_config()
    stressed = set()
    reports = []
    for j, stage in enumerate(cert.stages, start=1):
        thr = stage.support_threshold(cfg.tol_support)
        residuals = vertex_residuals(F, stage, stressed)
        current = _stage_stressed(F, stage, thr)
        zero = tuple(sorted({(u, v) for (u, v, _), w in zip(stage.edge_keys, stage.edge_vals) if abs(w) <= thr}))
        new = frozenset(current - stressed)
        stressed |= current
        reports.append(StageReport(j, frozenset(stressed), new, zero, tuple(float(r) for r in residuals)))
    return StagedStressReport(F.n, tuple(reports))


def staged_lower_bound(report: StagedStressReport, groups: Sequence[Sequence[int]]) -> Optional[int]:
    """
    len(groups) - 1 when group i is unstressed at every stage j <= i - 2
    (groups indexed from 1), the pattern behind the G^k bound; else None
    """
    k = len(groups)
    for j in range(0, len(report.stages) + 1):
        stressed = report.stressed(j)
        for i in range(j + 2, k + 1):
            if stressed & set(groups[i - 1]):
                return None
    return k - 1


# ---------------------------------------------------------------------------
# Super stability and universal rigidity
# ---------------------------------------------------------------------------

def _properly_signed(F: SphericalFramework, stage: StressVector):
    scale = max(1.0, stage.max_abs())
    for (u, v, kind), w in zip(stage.edge_keys, stage.edge_vals):
        if not F.graph.has_edge(u, v):
            return False
        if kind == 'ge' and w > 1e-9 * scale:
            return False
        if kind == 'le' and w < -1e-9 * scale:
            return False
    return True


def _stage_objective(F: SphericalFramework, stage: StressVector):
    G = F.gram()
    return float(np.sum(stage.vertex) + sum(w * G[u, v] for (u, v, _), w in zip(stage.edge_keys, stage.edge_vals)))


def conic_nondegenerate(F: SphericalFramework, pairs) -> bool:
    """No nonzero symmetric S with p(i)^T S p(j) = 0 for all listed pairs"""
    d = F.d
    if d == 0:
        return True
    rows = []
    for i, j in pairs:
        M = np.outer(F.coords[i], F.coords[j])
        rows.append(svec((M + M.T) / 2))
    if not rows:
        return False
    sv = np.linalg.svd(np.array(rows), compute_uv=False)
    rank = int(np.sum(sv > CONIC_RTOL * max(1.0, sv[0])))
    return rank == d * (d + 1) // 2


def verify_universal_rigidity_certificate(F: SphericalFramework, cert, config=None) -> bool:
    """
    Check a sequence of stresses certifying universal rigidity of (G, p)

    proper signs; nested PSD; every stage objective zero within 1e-7 and the
    first stage in equilibrium; total rank n - d; no nonzero S with
    p(i)^T S p(j) = 0 over the vertices, the eq edges and the stressed edges

    Args:
        cert: NestedPSDCertificate or a sequence of StressVector
    """
    cfg = config or get_config()
    stages = list(cert.stages if isinstance(cert, NestedPSDCertificate) else cert)
    if any(s.n != F.n for s in stages):
        return False
    if not all(_properly_signed(F, s) for s in stages):
        return False
    if stages and equilibrium_residual(F, stages[0]) > EQUILIBRIUM_TOL:
        return False
    if any(abs(_stage_objective(F, s)) > STAGE_OBJECTIVE_TOL for s in stages):
        return False

    B = np.eye(F.n)
    for stage in stages:
        if B.shape[1] == 0:
            break
        lam, vecs = eig_sym(B.T @ stage.matrix() @ B)
        top = max(1.0, float(np.max(np.abs(lam))))
        if lam[0] < -cfg.tol_psd * top:
            return False
        keep = np.abs(lam) <= cfg.tol_support * top
        B = orthonormalize(B @ vecs.columns[:, keep], n=F.n).columns
    if F.n - B.shape[1] != F.n - F.d:
        return False

    pairs = [(i, i) for i in range(F.n)]
    pairs += [e for e, kind in F.kinds.items() if kind == 'eq']
    for stage in stages:
        pairs += [(u, v) for u, v, _ in stage.edge_support(cfg.tol_support)]
    return conic_nondegenerate(F, pairs)


def verify_super_stable(F: SphericalFramework, omega: StressVector, config=None) -> bool:
    """
    Equilibrium PSD stress of corank d with the conic condition; the
    one-stage case of verify_universal_rigidity_certificate
    """
    return verify_universal_rigidity_certificate(F, [omega], config=config)
