"""
Stress vectors, nested PSD certificates, certificate files and the
independent certificate verifier

The verifier only uses linalg_core primitives; it recomputes every face from
the stage stresses and never reuses facial-reduction state.

Weight convention: Omega = sum_i w(i) E_ii + sum_ij w(ij) E_ij with
E_ij = (e_i e_j^T + e_j e_i^T) / 2, so Omega[i, j] = w(ij) / 2.
"""
import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import get_config
from errors import InstanceParseError, InvalidInput
from linalg_core import OrthoBasis, eig_sym, numeric_rank, orthonormalize

KINDS = ('eq', 'ge', 'le')
VERIFY_SIGN_TOL = 1e-9

EdgeKey = Tuple[int, int, str]


class StressVector:
    """
    Vertex and edge weights w in R^(V u E)

    Args:
        vertex: one weight per vertex
        edge_keys: (u, v, kind) per edge weight, u < v
        edge_vals: weights aligned with edge_keys
    """

    def __init__(self, vertex, edge_keys: Sequence[EdgeKey], edge_vals):
        vertex = np.array(vertex, dtype=float).reshape(-1)
        edge_vals = np.array(edge_vals, dtype=float).reshape(-1)
        edge_keys = tuple((int(u), int(v), str(k)) for u, v, k in edge_keys)
        if len(edge_keys) != edge_vals.size:
            raise InvalidInput("Edge keys and values differ in length")
        if not (np.all(np.isfinite(vertex)) and np.all(np.isfinite(edge_vals))):
            raise InvalidInput("Stress has non-finite weights")
        vertex.flags.writeable = False
        edge_vals.flags.writeable = False
        self.vertex = vertex
        self.edge_keys = edge_keys
        self.edge_vals = edge_vals

    @property
    def n(self):
        return self.vertex.size

    @classmethod
    def zero(cls, n, edge_keys):
        return cls(np.zeros(n), edge_keys, np.zeros(len(edge_keys)))

    def matrix(self):
        """Omega = sum w(i) E_ii + sum w(ij) E_ij"""
        n = self.n
        M = np.diag(self.vertex.astype(float))
        for (u, v, _), w in zip(self.edge_keys, self.edge_vals):
            M[u, v] += w / 2
            M[v, u] += w / 2
        return M

    def value(self, u, v, kind=None):
        a, b = (u, v) if u < v else (v, u)
        total = 0.0
        for (x, y, k), w in zip(self.edge_keys, self.edge_vals):
            if (x, y) == (a, b) and (kind is None or k == kind):
                total += w
        return total

    def as_dict(self) -> Dict[EdgeKey, float]:
        return dict(zip(self.edge_keys, self.edge_vals))

    def max_abs(self):
        vals = np.concatenate([self.vertex, self.edge_vals])
        return float(np.max(np.abs(vals))) if vals.size else 0.0

    def support_threshold(self, tol=None):
        tol = get_config().tol_support if tol is None else tol
        return tol * max(1.0, self.max_abs())

    def edge_support(self, tol=None) -> List[EdgeKey]:
        thr = self.support_threshold(tol)
        return [k for k, w in zip(self.edge_keys, self.edge_vals) if abs(w) > thr]

    def stressed_vertices(self, tol=None):
        """Vertices incident to an edge with nonzero weight"""
        out = set()
        for u, v, _ in self.edge_support(tol):
            out.update((u, v))
        return out

    def scaled(self, a):
        return StressVector(self.vertex * a, self.edge_keys, self.edge_vals * a)

    def __add__(self, other):
        if self.edge_keys != other.edge_keys or self.n != other.n:
            raise InvalidInput("Stresses are indexed differently")
        return StressVector(self.vertex + other.vertex, self.edge_keys, self.edge_vals + other.edge_vals)

    def objective(self, weights: Dict[EdgeKey, float]):
        """sum_i w(i) + sum_ij w(ij) c(ij)"""
        return float(np.sum(self.vertex) + sum(w * weights[k] for k, w in zip(self.edge_keys, self.edge_vals)))

    def with_value(self, key: EdgeKey, value):
        vals = self.edge_vals.copy()
        vals[self.edge_keys.index(key)] = value
        return StressVector(self.vertex, self.edge_keys, vals)

    def to_dict(self):
        return {
            'vertex': [float(w) for w in self.vertex],
            'edges': [{'u': u, 'v': v, 'kind': k, 'val': float(w)}
                      for (u, v, k), w in zip(self.edge_keys, self.edge_vals)],
        }

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict) or set(data) != {'vertex', 'edges'}:
            raise InstanceParseError("Stage must have exactly the keys 'vertex' and 'edges'")
        keys, vals = [], []
        for e in data['edges']:
            if not isinstance(e, dict) or set(e) != {'u', 'v', 'kind', 'val'}:
                raise InstanceParseError(f"Bad certificate edge entry {e!r}")
            if e['kind'] not in KINDS:
                raise InstanceParseError(f"Unknown constraint kind {e['kind']!r}")
            u, v = int(e['u']), int(e['v'])
            keys.append((min(u, v), max(u, v), e['kind']))
            vals.append(float(e['val']))
        try:
            return cls([float(w) for w in data['vertex']], keys, vals)
        except (TypeError, ValueError, InvalidInput) as e:
            raise InstanceParseError(f"Bad stage: {e}")

    def __eq__(self, other):
        return isinstance(other, StressVector) and self.edge_keys == other.edge_keys \
            and np.array_equal(self.vertex, other.vertex) and np.array_equal(self.edge_vals, other.edge_vals)

    __hash__ = None

    def __repr__(self):
        return f"StressVector(n={self.n}, edges={len(self.edge_keys)}, support={len(self.edge_support())})"


@dataclass(frozen=True)
class NestedPSDCertificate:
    """
    Ordered stage stresses with the face chain V^0 > V^1 > ... > V^k

    Stages whose restricted matrix vanishes on the current face (tightness
    stages) keep the face; only reducing stages count towards singularity degree.
    """
    n: int
    stages: Tuple[StressVector, ...] = ()
    face_dims: Tuple[int, ...] = ()
    faces: Optional[Tuple[OrthoBasis, ...]] = field(default=None, compare=False)
    infeasible_stage: Optional[int] = None

    def __post_init__(self):
        if not self.face_dims:
            object.__setattr__(self, 'face_dims', (self.n,))
        if len(self.face_dims) != len(self.stages) + 1:
            raise InvalidInput("face_dims must have one entry more than stages")

    @property
    def rank(self):
        return self.n - self.face_dims[-1]

    @property
    def reducing_stages(self):
        return sum(1 for a, b in zip(self.face_dims, self.face_dims[1:]) if b < a)

    def __len__(self):
        return len(self.stages)

    def final_face(self) -> Optional[OrthoBasis]:
        return self.faces[-1] if self.faces else None

    def to_dict(self):
        out = {'stages': [s.to_dict() for s in self.stages], 'face_dims': list(self.face_dims)}
        return out

    @classmethod
    def from_dict(cls, data, n=None):
        if not isinstance(data, dict) or set(data) != {'stages', 'face_dims'}:
            raise InstanceParseError("Certificate must have exactly the keys 'stages' and 'face_dims'")
        stages = tuple(StressVector.from_dict(s) for s in data['stages'])
        dims = tuple(int(d) for d in data['face_dims'])
        if not dims:
            raise InstanceParseError("face_dims must not be empty")
        n = dims[0] if n is None else n
        if any(s.n != n for s in stages):
            raise InstanceParseError("Stage vertex count disagrees with face_dims[0]")
        try:
            return cls(n, stages, dims)
        except InvalidInput as e:
            raise InstanceParseError(str(e))


def save_certificate(cert: NestedPSDCertificate, path):
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(cert.to_dict(), f, indent=2)


def load_certificate(path) -> NestedPSDCertificate:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise InstanceParseError(f"Cannot read certificate {path}: {e}")
    return NestedPSDCertificate.from_dict(data)


# ---------------------------------------------------------------------------
# Independent verifier
# ---------------------------------------------------------------------------

@dataclass
class VerificationReport:
    c1: bool
    c2: bool
    c3: bool
    c4: Optional[bool] = None
    c5: Optional[bool] = None
    c6: Optional[bool] = None
    face_dims: Tuple[int, ...] = ()
    faces_match: bool = True
    objectives: Tuple[float, ...] = ()
    min_eigs: Tuple[float, ...] = ()
    messages: List[str] = field(default_factory=list)

    @property
    def passed(self):
        checks = [self.c1, self.c2, self.c3, self.c4, self.c5, self.c6]
        return self.faces_match and all(c for c in checks if c is not None)

    def to_dict(self):
        return {
            'c1': self.c1, 'c2': self.c2, 'c3': self.c3, 'c4': self.c4, 'c5': self.c5, 'c6': self.c6,
            'face_dims': list(self.face_dims), 'faces_match': self.faces_match,
            'objectives': list(self.objectives), 'min_eigs': list(self.min_eigs),
            'passed': self.passed, 'messages': list(self.messages),
        }


def _constraint_map(inst) -> Dict[EdgeKey, float]:
    return {(c.u, c.v, c.kind): c.c for c in inst.constraints}


def verify_certificate(inst, cert: NestedPSDCertificate, X=None, config=None) -> VerificationReport:
    """
    Check (c1)-(c3), and (c4) when a candidate maximum-rank solution X is given

    (c1) w(ij) <= 1e-9 on ge edges and >= -1e-9 on le edges, free on eq edges
    (c2) each Omega^j PSD on V^(j-1), the common zero space of earlier stages
    (c3) each stage objective sum w(i) + sum w(ij) c(ij) <= tol_obj
    (c4) rank X + (n - dim V^k) == n
    """
    cfg = config or get_config()
    weights = _constraint_map(inst)
    report = VerificationReport(c1=True, c2=True, c3=True)
    if cert.n != inst.n:
        report.c1 = report.c2 = report.c3 = False
        report.messages.append(f"certificate has n={cert.n}, instance has n={inst.n}")
        return report

    B = np.eye(inst.n)
    dims = [inst.n]
    objectives, min_eigs = [], []
    for j, stage in enumerate(cert.stages, start=1):
        scale = max(1.0, stage.max_abs())
        for (u, v, kind), w in zip(stage.edge_keys, stage.edge_vals):
            if (u, v, kind) not in weights:
                report.c1 = False
                report.messages.append(f"stage {j}: edge ({u}, {v}, {kind}) is not an instance constraint")
            elif kind == 'ge' and w > VERIFY_SIGN_TOL * scale:
                report.c1 = False
                report.messages.append(f"stage {j}: ge edge ({u}, {v}) has weight {w:.3e} > 0")
            elif kind == 'le' and w < -VERIFY_SIGN_TOL * scale:
                report.c1 = False
                report.messages.append(f"stage {j}: le edge ({u}, {v}) has weight {w:.3e} < 0")

        obj = float(np.sum(stage.vertex)) + sum(w * weights.get(k, 0.0) for k, w in zip(stage.edge_keys, stage.edge_vals))
        objectives.append(obj)
        if obj > cfg.tol_obj:
            report.c3 = False
            report.messages.append(f"stage {j}: objective {obj:.3e} > {cfg.tol_obj:.0e}")

        if B.shape[1] == 0:
            min_eigs.append(0.0)
            dims.append(0)
            continue
        R = B.T @ stage.matrix() @ B
        lam, vecs = eig_sym(R)
        min_eigs.append(float(lam[0]))
        top = float(np.max(np.abs(lam)))
        if lam[0] < -cfg.tol_psd * max(1.0, top):
            report.c2 = False
            report.messages.append(f"stage {j}: restricted eigenvalue {lam[0]:.3e} < 0")
        null = np.abs(lam) <= cfg.tol_support * max(1.0, top)
        B = orthonormalize(B @ vecs.columns[:, null], n=inst.n).columns
        dims.append(B.shape[1])

    report.face_dims = tuple(dims)
    report.objectives = tuple(objectives)
    report.min_eigs = tuple(min_eigs)
    report.faces_match = tuple(cert.face_dims) == tuple(dims)
    if not report.faces_match:
        report.messages.append(f"face dims {dims} differ from recorded {list(cert.face_dims)}")
    if X is not None:
        rank_x = numeric_rank(X, cfg.tol_rank)
        report.c4 = rank_x + (inst.n - dims[-1]) == inst.n
        if not report.c4:
            report.messages.append(f"rank X = {rank_x}, certificate rank = {inst.n - dims[-1]}")
    return report
