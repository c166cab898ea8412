"""
Facial reduction engine

Greedy facial reduction driven by the face-restricted oracle, singularity
degree labels, tightness augmentation, the nondegeneracy test, clique-sum
combination, restriction to induced sub-instances and the contraction lift.
"""
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog

from certificates import NestedPSDCertificate, StressVector
from config import get_config
from errors import InfeasibleInstance, InvalidCombine, InvalidInput, MaxIterations, NumericalError
from instance import DegenerateReduction, SignedCompletionInstance, sign_vector
from linalg_core import OrthoBasis, SymMatrix, eigvals_sym, gram_factor, svec
from logger_config import logger
from oracle import HIGHS_OPTIONS, Infeasible, InteriorPoint, RowSystem, feasibility_oracle, zero_space

TIGHT_TOL = 1e-6
NONDEGENERACY_RTOL = 1e-8
AUGMENT_EPS = 1e-9


@dataclass(frozen=True)
class FRResult:
    certificate: NestedPSDCertificate
    max_rank_solution: Optional[SymMatrix]
    sd_upper: int
    infeasible: bool = False
    infeasible_stage: Optional[int] = None

    @property
    def rank(self):
        return self.certificate.rank

    def to_dict(self):
        out = {
            'stages': len(self.certificate.stages),
            'sd_upper': self.sd_upper,
            'face_dims': list(self.certificate.face_dims),
            'certificate_rank': self.certificate.rank,
            'infeasible': self.infeasible,
        }
        if self.infeasible:
            out['infeasible_stage'] = self.infeasible_stage
        if self.max_rank_solution is not None:
            out['max_rank_solution'] = self.max_rank_solution.array.tolist()
        return out


@dataclass(frozen=True)
class SdValue:
    value: int
    kind: str
    lower: int = 0

    def to_dict(self):
        return {'value': self.value, 'kind': self.kind, 'lower': self.lower}


def _certificate(n, stages, faces, infeasible_stage=None):
    return NestedPSDCertificate(n=n, stages=tuple(stages), face_dims=tuple(f.r for f in faces),
                                faces=tuple(faces), infeasible_stage=infeasible_stage)


def facial_reduction(inst: SignedCompletionInstance, config=None) -> FRResult:
    """
    Run facial reduction to an interior point or an infeasibility certificate

    Args:
        inst: SignedCompletionInstance
        config: RunConfig (defaults to the process config)

    Returns:
        FRResult; when feasible, max_rank_solution is positive definite on the final face

    Raises:
        MaxIterations: the oracle stalled; e.partial holds the stages found so far
    """
    cfg = config or get_config()
    face = OrthoBasis.full(inst.n)
    faces = [face]
    stages: List[StressVector] = []
    for index in range(1, inst.n + 2):
        try:
            outcome = feasibility_oracle(inst, face, config=cfg)
        except MaxIterations as e:
            e.partial = _certificate(inst.n, stages, faces)
            logger.warning(f"Oracle stalled at stage {index} with face dimension {face.r}")
            raise

        if isinstance(outcome, InteriorPoint):
            cert = _certificate(inst.n, stages, faces)
            logger.info(f"{inst}: interior point after {len(stages)} stages, rank {inst.n - cert.rank}")
            return FRResult(cert, outcome.X, len(stages))

        stages.append(outcome.omega)
        if isinstance(outcome, Infeasible):
            faces.append(zero_space(face, outcome.restricted, cfg.tol_support))
            logger.info(f"{inst}: stage {index} proves infeasibility (objective {outcome.objective:.3e})")
            return FRResult(_certificate(inst.n, stages, faces, index), None, len(stages), True, index)

        nxt = outcome.next_face
        logger.info(f"stage {index}: face {face.r} -> {nxt.r}, objective {outcome.objective:.2e}, "
                    f"support {len(outcome.omega.edge_support())}")
        if nxt.r >= face.r:
            raise NumericalError(f"Stage {index} did not reduce the face (dimension {face.r})")
        face = nxt
        faces.append(face)
    raise NumericalError(f"Facial reduction exceeded {inst.n} stages")


def face_chain(inst, stages: Sequence[StressVector], config=None) -> List[OrthoBasis]:
    """Faces V^0, V^1, ... cut out by the given stages"""
    cfg = config or get_config()
    face = OrthoBasis.full(inst.n)
    faces = [face]
    for stage in stages:
        B = face.columns
        face = zero_space(face, B.T @ stage.matrix() @ B, cfg.tol_support)
        faces.append(face)
    return faces


def singularity_degree(inst, lower_bound=None, config=None) -> SdValue:
    """
    Singularity degree of a feasible instance

    0 and 1 are exact. 2 is exact as well: the first stage uses a maximum-rank
    dual solution, so needing a second stage means one stage cannot suffice.
    Larger counts are upper bounds unless lower_bound reaches them.

    Raises:
        InfeasibleInstance: the instance has no PSD completion
    """
    return label_singularity_degree(inst, facial_reduction(inst, config=config), lower_bound)


def label_singularity_degree(inst, result: FRResult, lower_bound=None) -> SdValue:
    """Exact or upper-bound label for the stage count of a finished run"""
    if result.infeasible:
        raise InfeasibleInstance(f"{inst} has no PSD completion", certificate=result.certificate)
    k = result.sd_upper
    lower = max(min(k, 2), lower_bound or 0)
    if k <= 2 or lower >= k:
        return SdValue(k, 'exact', k)
    return SdValue(k, 'upper_bound', lower)


# ---------------------------------------------------------------------------
# Tightness and nondegeneracy
# ---------------------------------------------------------------------------

def _supported_keys(cert: NestedPSDCertificate, tol=None):
    keys = set()
    for stage in cert.stages:
        keys.update(stage.edge_support(tol))
    return keys


def augment_tightness(inst, cert: NestedPSDCertificate, config=None) -> NestedPSDCertificate:
    """
    Append a stage carrying every inequality that is tight on the whole feasible set

    The added stage vanishes on the final face, so faces and stage count are
    unchanged; it holds a nonzero, properly signed weight on each tight
    inequality the chain does not already stress.
    """
    cfg = config or get_config()
    faces = list(cert.faces) if cert.faces else face_chain(inst, cert.stages, cfg)
    final = faces[-1]
    rows = RowSystem(inst, final)
    supported = _supported_keys(cert, cfg.tol_support)
    missing = [k for k, kind in enumerate(rows.kinds)
               if kind != 'eq' and inst.constraints[k - inst.n].key not in supported]
    if not missing or final.r == 0:
        return cert

    At = rows.A.T
    bound = 1e4
    total = np.zeros(rows.size)
    added = []
    for k in missing:
        bounds = []
        for j, kind in enumerate(rows.kinds):
            if j == k:
                bounds.append((-rows.sign(k), -rows.sign(k)))
            elif kind == 'ge':
                bounds.append((-bound, 0.0))
            elif kind == 'le':
                bounds.append((0.0, bound))
            else:
                bounds.append((-bound, bound))
        res = linprog(rows.b, A_ub=np.vstack([At, -At]), b_ub=np.full(2 * At.shape[0], AUGMENT_EPS),
                      bounds=bounds, method='highs', options=HIGHS_OPTIONS)
        if res.status == 0 and abs(res.fun) <= cfg.tol_obj:
            total += res.x
            added.append(inst.constraints[k - inst.n].key)
    if not added:
        return cert
    # restricted matrix is zero up to LP noise; shift it onto the PSD side
    low = float(eigvals_sym(rows.restricted(total))[0])
    if low < 0:
        total[:rows.n] -= low
    logger.info(f"Tightness stage adds {len(added)} edges: {added}")
    stage = rows.stress(total)
    return NestedPSDCertificate(n=cert.n, stages=cert.stages + (stage,),
                                face_dims=cert.face_dims + (cert.face_dims[-1],),
                                faces=tuple(faces) + (final,), infeasible_stage=cert.infeasible_stage)


def _pair_rows(P, pairs):
    return np.array([svec((np.outer(P[:, i], P[:, j]) + np.outer(P[:, j], P[:, i])) / 2) for i, j in pairs])


def _rank(M):
    if M.size == 0:
        return 0
    sv = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(sv > NONDEGENERACY_RTOL * max(1.0, sv[0])))


def check_nondegeneracy(inst, cert: NestedPSDCertificate, X=None, config=None) -> bool:
    """
    True iff <P^T S P, A_i> = 0 for all i in J forces S = 0

    P is the Gram factor of the maximum-rank solution and J the diagonal, the
    eq edges and the inequalities stressed by the certificate.
    """
    cfg = config or get_config()
    if X is None:
        X = facial_reduction(inst, config=cfg).max_rank_solution
        if X is None:
            raise InfeasibleInstance(f"{inst} has no PSD completion")
    P = gram_factor(X)
    d = P.shape[0]
    if d == 0:
        return True
    supported = _supported_keys(cert, cfg.tol_support)
    pairs = [(i, i) for i in range(inst.n)]
    pairs += [c.pair for c in inst.constraints if c.kind == 'eq' or c.key in supported]
    return _rank(_pair_rows(P, pairs)) == d * (d + 1) // 2


def check_tightness(inst, cert: NestedPSDCertificate, X, config=None) -> List[Tuple[int, int, str]]:
    """
    Inequalities violating (c5) at a maximum-rank X: stressed but slack, or
    tight but never stressed. A linear inequality tight at a relative-interior
    point is tight on the whole feasible set.
    """
    cfg = config or get_config()
    Xa = X.array if isinstance(X, SymMatrix) else np.asarray(X, dtype=float)
    supported = _supported_keys(cert, cfg.tol_support)
    bad = []
    for c in inst.constraints:
        if c.kind == 'eq':
            continue
        tight = abs(Xa[c.u, c.v] - c.c) <= TIGHT_TOL
        if tight != (c.key in supported):
            bad.append(c.key)
    return bad


def nondegenerate_on_face(inst, cert: NestedPSDCertificate, config=None) -> bool:
    """
    span{xx^T : x in V^k} meets the span of the rows in J only at zero,
    with V^k the final face of the certificate
    """
    cfg = config or get_config()
    faces = list(cert.faces) if cert.faces else face_chain(inst, cert.stages, cfg)
    B = faces[-1].columns.T
    d = B.shape[0]
    if d == 0:
        return True
    supported = _supported_keys(cert, cfg.tol_support)
    pairs = [(i, i) for i in range(inst.n)]
    pairs += [c.pair for c in inst.constraints if c.kind == 'eq' or c.key in supported]
    return _rank(_pair_rows(B, pairs)) == d * (d + 1) // 2


def implied_entries(inst, X=None, config=None) -> List[Tuple[int, int, float]]:
    """
    Non-edge entries that take the same value on every feasible X

    X must be a relative-interior (maximum-rank) solution; an entry is fixed
    iff its functional on the final face lies in the span of the diagonal,
    the eq rows and the inequalities tight at X.
    """
    cfg = config or get_config()
    if X is None:
        X = facial_reduction(inst, config=cfg).max_rank_solution
        if X is None:
            raise InfeasibleInstance(f"{inst} has no PSD completion")
    Xa = X.array if isinstance(X, SymMatrix) else np.asarray(X, dtype=float)
    P = gram_factor(Xa)
    pairs = [(i, i) for i in range(inst.n)]
    for c in inst.constraints:
        if c.kind == 'eq' or abs(Xa[c.u, c.v] - c.c) <= TIGHT_TOL:
            pairs.append(c.pair)
    base = _pair_rows(P, pairs)
    base_rank = _rank(base)
    edges = {c.pair for c in inst.constraints}
    out = []
    for u in range(inst.n):
        for v in range(u + 1, inst.n):
            if (u, v) in edges:
                continue
            if _rank(np.vstack([base, _pair_rows(P, [(u, v)])])) == base_rank:
                out.append((u, v, float(Xa[u, v])))
    return out


# ---------------------------------------------------------------------------
# Combining, restricting and lifting certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CliquePart:
    """A sub-instance with its certificate; vertices[i] is the global index of local vertex i"""
    inst: SignedCompletionInstance
    cert: NestedPSDCertificate
    vertices: Tuple[int, ...]


def _global_stress(part: CliquePart, stage: Optional[StressVector], n, keys):
    vertex = np.zeros(n)
    vals = dict.fromkeys(keys, 0.0)
    if stage is not None:
        vertex[list(part.vertices)] = stage.vertex
        for (u, v, kind), w in zip(stage.edge_keys, stage.edge_vals):
            a, b = part.vertices[u], part.vertices[v]
            vals[(min(a, b), max(a, b), kind)] += w
    return vertex, np.array([vals[k] for k in keys])


def combine_clique_sum(part_a: CliquePart, part_b: CliquePart, shared, config=None):
    """
    Certificate for the clique sum of two sub-instances: stage j is the sum of
    the j-th stages, the shorter chain padded with zero stages

    Returns:
        (combined instance, combined certificate)

    Raises:
        InvalidCombine: shared vertices missing from a part, shared pairs not
            forming a clique in both parts, or disagreeing weights on it
    """
    shared = tuple(sorted(set(shared)))
    if not set(shared) <= set(part_a.vertices) or not set(shared) <= set(part_b.vertices):
        raise InvalidCombine(f"Shared vertices {shared} are not in both parts")
    n = max(max(part_a.vertices, default=-1), max(part_b.vertices, default=-1)) + 1
    if set(part_a.vertices) | set(part_b.vertices) != set(range(n)):
        raise InvalidCombine("Parts do not cover the vertex range")
    if set(part_a.vertices) & set(part_b.vertices) != set(shared):
        raise InvalidCombine("Parts overlap outside the shared clique")

    def mapped(part):
        out = {}
        for c in part.inst.constraints:
            a, b = part.vertices[c.u], part.vertices[c.v]
            out[(min(a, b), max(a, b), c.kind)] = c.c
        return out

    ca, cb = mapped(part_a), mapped(part_b)
    sset = set(shared)
    inner_a = {k: w for k, w in ca.items() if k[0] in sset and k[1] in sset}
    inner_b = {k: w for k, w in cb.items() if k[0] in sset and k[1] in sset}
    if set(inner_a) != set(inner_b) or any(abs(inner_a[k] - inner_b[k]) > 1e-12 for k in inner_a):
        raise InvalidCombine("Parts disagree on the shared clique")
    pairs = {k[:2] for k in inner_a}
    if any((u, v) not in pairs for i, u in enumerate(shared) for v in shared[i + 1:]):
        raise InvalidCombine(f"Shared vertices {shared} do not form a clique")

    inst = SignedCompletionInstance(n, [(u, v, k, w) for (u, v, k), w in sorted({**ca, **cb}.items())])
    keys = inst.keys
    h = max(len(part_a.cert.stages), len(part_b.cert.stages))
    stages = []
    for j in range(h):
        sa = part_a.cert.stages[j] if j < len(part_a.cert.stages) else None
        sb = part_b.cert.stages[j] if j < len(part_b.cert.stages) else None
        va, ea = _global_stress(part_a, sa, n, keys)
        vb, eb = _global_stress(part_b, sb, n, keys)
        stages.append(StressVector(va + vb, keys, ea + eb))
    faces = face_chain(inst, stages, config)
    return inst, NestedPSDCertificate(n=n, stages=tuple(stages), face_dims=tuple(f.r for f in faces),
                                      faces=tuple(faces))


def restrict_certificate(inst, cert: NestedPSDCertificate, keep, config=None):
    """
    Restrict a certificate to the induced sub-instance on keep

    Stages must put no weight outside keep; stages that vanish on the current
    face of the sub-instance are dropped.

    Returns:
        (sub-instance, certificate); vertex i of the result is keep[i]

    Raises:
        InvalidInput: a stage stresses a vertex outside keep
    """
    cfg = config or get_config()
    keep = tuple(keep)
    index = {v: i for i, v in enumerate(keep)}
    sub = SignedCompletionInstance(len(keep), [(index[c.u], index[c.v], c.kind, c.c) for c in inst.constraints
                                               if c.u in index and c.v in index])
    face = OrthoBasis.full(sub.n)
    faces = [face]
    stages = []
    for j, stage in enumerate(cert.stages, start=1):
        thr = stage.support_threshold(cfg.tol_support)
        outside = [v for v in range(inst.n) if v not in index and abs(stage.vertex[v]) > thr]
        outside += [(u, v) for (u, v, _), w in zip(stage.edge_keys, stage.edge_vals)
                    if abs(w) > thr and not (u in index and v in index)]
        if outside:
            raise InvalidInput(f"Stage {j} stresses {outside[:3]} outside the kept vertices")
        sd = stage.as_dict()
        local = StressVector(stage.vertex[list(keep)], sub.keys,
                             [sd[(keep[u], keep[v], k)] if keep[u] < keep[v] else sd[(keep[v], keep[u], k)]
                              for u, v, k in sub.keys])
        B = face.columns
        R = B.T @ local.matrix() @ B
        if face.r == 0 or np.max(np.abs(R)) <= cfg.tol_support * max(1.0, local.max_abs()):
            continue
        face = zero_space(face, R, cfg.tol_support)
        stages.append(local)
        faces.append(face)
    return sub, NestedPSDCertificate(n=sub.n, stages=tuple(stages), face_dims=tuple(f.r for f in faces),
                                     faces=tuple(faces))


def extend_instance(inst, X, n_total, vertices, edges):
    """
    Embed a sub-instance as an induced sub-instance of a larger graph

    The new vertices get unit vectors orthogonal to the span of the Gram
    factor of X and to each other, so every new edge is an eq edge with c = 0.

    Args:
        inst: instance on the smaller vertex set
        X: maximum-rank solution of inst
        n_total: vertex count of the larger graph
        vertices: global index of each vertex of inst
        edges: edge list of the larger graph (global indices)

    Returns:
        (extended instance, its solution of the same rank plus the new vertices)
    """
    vertices = tuple(vertices)
    inside = set(vertices)
    local = {v: i for i, v in enumerate(vertices)}
    out = [(vertices[c.u], vertices[c.v], c.kind, c.c) for c in inst.constraints]
    have = {(min(u, v), max(u, v)) for u, v, _, _ in out}
    for u, v in edges:
        u, v = min(u, v), max(u, v)
        if (u, v) in have:
            continue
        if u in inside and v in inside:
            raise InvalidInput(f"Edge ({u}, {v}) joins two kept vertices but is not in the sub-instance")
        out.append((u, v, 'eq', 0.0))
    Xa = X.array if isinstance(X, SymMatrix) else np.asarray(X, dtype=float)
    Xg = np.eye(n_total)
    for v in vertices:
        for w in vertices:
            Xg[v, w] = Xa[local[v], local[w]]
    return SignedCompletionInstance(n_total, out), SymMatrix(Xg)


def lift_certificate(red: DegenerateReduction, reduced_cert: NestedPSDCertificate, config=None):
    """
    Certificate for the original instance from one of the contracted instance

    Stage 0 is sum over contracted edges of (e_u - e_v)(e_u - e_v)^T, conjugated
    by the resigning signs; later stages spread each component's vertex weight
    evenly and put each reduced edge weight on one original edge with the same
    resigned weight.
    """
    inst = red.original
    if inst is None:
        raise InvalidInput("Reduction does not carry its original instance")
    if not red.extra_stage:
        return reduced_cert
    n = inst.n
    keys = inst.keys
    D = sign_vector(n, red.resigned)
    merge = red.merge
    sizes = np.bincount(merge, minlength=red.reduced.n)

    first_v = np.zeros(n)
    first_e = dict.fromkeys(keys, 0.0)
    for u, v, kind in red.contracted:
        first_v[u] += 1.0
        first_v[v] += 1.0
        first_e[(u, v, kind)] += -2.0 * D[u] * D[v]
    stages = [StressVector(first_v, keys, [first_e[k] for k in keys])]

    representative: Dict[Tuple[int, int, str], Tuple[int, int, str]] = {}
    for c in inst.constraints:
        a, b = merge[c.u], merge[c.v]
        if a == b:
            continue
        flip = D[c.u] * D[c.v] < 0
        kind = {'ge': 'le', 'le': 'ge'}.get(c.kind, c.kind) if flip else c.kind
        rkey = (min(a, b), max(a, b), kind)
        target = red.reduced.weights.get(rkey)
        resigned_c = -c.c if flip else c.c
        if target is not None and rkey not in representative and abs(resigned_c - target) <= 1e-12:
            representative[rkey] = c.key

    for stage in reduced_cert.stages:
        vertex = np.array([stage.vertex[merge[v]] / sizes[merge[v]] for v in range(n)])
        edges = dict.fromkeys(keys, 0.0)
        for rkey, w in zip(stage.edge_keys, stage.edge_vals):
            okey = representative[rkey]
            edges[okey] += D[okey[0]] * D[okey[1]] * w
        stages.append(StressVector(vertex, keys, [edges[k] for k in keys]))

    faces = face_chain(inst, stages, config)
    return NestedPSDCertificate(n=n, stages=tuple(stages), face_dims=tuple(f.r for f in faces),
                                faces=tuple(faces), infeasible_stage=None if reduced_cert.infeasible_stage is None
                                else reduced_cert.infeasible_stage + 1)
