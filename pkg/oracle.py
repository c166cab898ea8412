"""
Face-restricted feasibility oracle

On a face span(B) the variable is Z = B^T X B and X = B Z B^T. The oracle
solves  max t  s.t. the instance constraints hold and Z - tI is PSD, and
returns exactly one of

    InteriorPoint    t > tol_pd: X feasible and positive definite on span(B)
    DualCertificate  a properly signed stress, PSD and nonzero on span(B),
                     with objective <= tol_obj; the next face is its zero space
    Infeasible       the same with a strictly negative objective

Equality rows (diagonal, eq edges, inequalities the LP shows are implied)
are eliminated by an affine parametrization of Z; the remaining inequalities
stay as a linear block of the interior-point problem.
"""
from dataclasses import dataclass
from typing import ClassVar, List, Union

import numpy as np
from scipy.optimize import linprog

from certificates import StressVector
from config import get_config
from errors import InvalidInput, NumericalError
from linalg_core import OrthoBasis, SymMatrix, eig_sym, orthonormalize, smat, svec
from logger_config import logger
from sdp_solver import SDPProblem, solve_sdp

ROW_SIGN = {'ge': 1.0, 'le': -1.0}
LP_IMPLIED_TOL = 1e-7
EQ_INCONSISTENT_TOL = 1e-6
NULL_RTOL = 1e-9
SIGN_CLIP = 1e-12
SIGN_TOL = 1e-9
RESTRICTED_ZERO_TOL = 1e-6
POLISH_EPS = (1e-10, 1e-9, 1e-8)
HIGHS_OPTIONS = {'primal_feasibility_tolerance': 1e-10, 'dual_feasibility_tolerance': 1e-10}


@dataclass(frozen=True)
class InteriorPoint:
    X: SymMatrix
    Z: np.ndarray
    t: float
    kind: ClassVar[str] = 'interior'


@dataclass(frozen=True)
class DualCertificate:
    omega: StressVector
    objective: float
    restricted: np.ndarray
    next_face: OrthoBasis
    kind: ClassVar[str] = 'certificate'


@dataclass(frozen=True)
class Infeasible:
    omega: StressVector
    objective: float
    restricted: np.ndarray
    kind: ClassVar[str] = 'infeasible'


OracleOutcome = Union[InteriorPoint, DualCertificate, Infeasible]


class RowSystem:
    """
    Constraint rows of an instance restricted to a face

    Row i < n is the diagonal entry X[i, i] = 1; row n + k is constraint k.
    A[row] is svec(B^T A_row B) so A @ svec(Z) gives the constrained entries of X.
    """

    def __init__(self, inst, face: OrthoBasis):
        B = face.columns
        n, r = inst.n, face.r
        self.inst = inst
        self.face = face
        self.n = n
        self.r = r
        self.kinds = ['eq'] * n + [c.kind for c in inst.constraints]
        self.b = np.concatenate([np.ones(n), [c.c for c in inst.constraints]])
        rows = []
        for i in range(n):
            rows.append(np.outer(B[i], B[i]))
        for c in inst.constraints:
            M = np.outer(B[c.u], B[c.v])
            rows.append((M + M.T) / 2)
        self.A = np.array([svec(M) for M in rows]).reshape(len(rows), -1)

    @property
    def size(self):
        return len(self.kinds)

    @property
    def dim(self):
        return self.r * (self.r + 1) // 2

    def sign(self, k):
        return ROW_SIGN.get(self.kinds[k], 0.0)

    def stress(self, omega) -> StressVector:
        return StressVector(omega[:self.n], self.inst.keys, omega[self.n:])

    def restricted(self, omega):
        return smat(self.A.T @ omega, self.r)

    def objective(self, omega):
        return float(self.b @ omega)

    def sign_violation(self, omega):
        worst = 0.0
        for k, kind in enumerate(self.kinds):
            if kind == 'ge':
                worst = max(worst, omega[k])
            elif kind == 'le':
                worst = max(worst, -omega[k])
        return worst


def _affine(A_eq, b_eq, d):
    """z0 + span(N) = least-squares solutions of A_eq z = b_eq; also returns the residual"""
    if A_eq.shape[0] == 0:
        return np.zeros(d), np.eye(d), np.zeros(0)
    U, sv, Vt = np.linalg.svd(A_eq, full_matrices=True)
    rank = int(np.sum(sv > NULL_RTOL * max(1.0, sv[0]))) if sv.size else 0
    z0 = Vt[:rank].T @ ((U[:, :rank].T @ b_eq) / sv[:rank])
    return z0, Vt[rank:].T, b_eq - A_eq @ z0


def _slack_terms(rows: RowSystem, ineq, z0, N):
    """slack_k(z) = g_k + H_k . z = sigma_k (<A_k, Z0 + N z> - b_k)"""
    sig = np.array([rows.sign(k) for k in ineq])
    A = rows.A[ineq]
    g = sig * (A @ z0 - rows.b[ineq])
    H = sig[:, None] * (A @ N)
    return g, H


def _farkas(g, H):
    """
    min g.u  s.t.  H^T u = 0, sum u = 1, u >= 0

    Returns (value, u); value is None when the system has no solution, in which
    case every inequality can be made strict at once.
    """
    m, q = H.shape
    A_eq = np.vstack([H.T, np.ones((1, m))])
    b_eq = np.concatenate([np.zeros(q), [1.0]])
    res = linprog(g, A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * m, method='highs', options=HIGHS_OPTIONS)
    if res.status != 0:
        return None, None
    return float(res.fun), res.x


def _implied_rows(g, H):
    """Positions whose slack cannot be made positive while all slacks stay >= 0"""
    m, q = H.shape
    implied = []
    for k in range(m):
        A_ub = np.vstack([-H, H[k:k + 1]])
        b_ub = np.concatenate([g, [1.0 - g[k]]])
        res = linprog(-H[k], A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * q, method='highs',
                      options=HIGHS_OPTIONS)
        if res.status != 0 or g[k] - res.fun <= LP_IMPLIED_TOL:
            implied.append(k)
    return implied


def _equality_multipliers(rows: RowSystem, eq, target):
    """mu with sum_eq mu_e A_e = target in least squares"""
    if not eq:
        return np.zeros(0)
    mu, *_ = np.linalg.lstsq(rows.A[eq].T, target, rcond=None)
    return mu


def _polish(rows: RowSystem, omega, target):
    """
    Re-solve for a properly signed stress with the same restricted matrix
    (within eps) and the least objective; keeps omega when no LP succeeds
    """
    bound = 1e6 * max(1.0, float(np.max(np.abs(omega))))
    bounds = []
    for kind in rows.kinds:
        if kind == 'ge':
            bounds.append((-bound, 0.0))
        elif kind == 'le':
            bounds.append((0.0, bound))
        else:
            bounds.append((-bound, bound))
    At = rows.A.T
    base_obj = rows.objective(omega)
    base_viol = rows.sign_violation(omega)
    scale = max(1.0, float(np.max(np.abs(target)))) if target.size else 1.0
    for eps in POLISH_EPS:
        res = linprog(rows.b, A_ub=np.vstack([At, -At]),
                      b_ub=np.concatenate([target + eps * scale, -target + eps * scale]),
                      bounds=bounds, method='highs', options=HIGHS_OPTIONS)
        if res.status != 0:
            continue
        cand = res.x
        if base_viol > SIGN_CLIP or rows.objective(cand) < base_obj:
            logger.debug(f"polished stress at eps={eps:.0e}: objective {base_obj:.3e} -> {rows.objective(cand):.3e}")
            return cand
        return omega
    logger.warning(f"Could not polish stress (sign violation {base_viol:.2e}, objective {base_obj:.2e})")
    return omega


def _clip_signs(rows: RowSystem, omega):
    omega = omega.copy()
    for k, kind in enumerate(rows.kinds):
        if kind == 'ge' and 0 < omega[k] <= SIGN_CLIP:
            omega[k] = 0.0
        elif kind == 'le' and -SIGN_CLIP <= omega[k] < 0:
            omega[k] = 0.0
    return omega


def _vanishes_on_face(rows: RowSystem, omega) -> bool:
    scale = float(np.max(np.abs(omega))) if omega.size else 0.0
    if scale == 0.0:
        return True
    lam, _ = eig_sym(rows.restricted(omega))
    return float(np.max(np.abs(lam))) <= RESTRICTED_ZERO_TOL * scale


def _trace_normalized(rows: RowSystem, omega):
    R = rows.restricted(omega)
    tr = float(np.trace(R))
    if tr > 0:
        return omega / tr, R / tr
    return omega, R


def zero_space(face: OrthoBasis, R, tol_support) -> OrthoBasis:
    """Vectors of span(face) on which the restricted matrix R vanishes"""
    if face.r == 0:
        return face
    lam, vecs = eig_sym(R)
    thr = tol_support * max(1.0, float(np.max(np.abs(lam))))
    keep = lam <= thr
    return orthonormalize(face.columns @ vecs.columns[:, keep], n=face.n)


def _zero_restricted_infeasible(rows: RowSystem, omega) -> Infeasible:
    """
    omega vanishes on the face and has negative objective; adding the same
    weight to every vertex makes it nonzero while keeping the objective negative
    """
    obj = rows.objective(omega)
    delta = -obj / (2 * rows.n)
    omega = omega.copy()
    omega[:rows.n] += delta
    omega, R = _trace_normalized(rows, omega)
    return Infeasible(rows.stress(omega), rows.objective(omega), R)


def _empty_face(rows: RowSystem) -> Infeasible:
    omega = np.zeros(rows.size)
    omega[:rows.n] = -1.0
    return Infeasible(rows.stress(omega), rows.objective(omega), np.zeros((0, 0)))


def feasibility_oracle(inst, face: OrthoBasis = None, config=None) -> OracleOutcome:
    """
    Decide the theorem-of-alternatives case on one face

    Args:
        inst: SignedCompletionInstance
        face: OrthoBasis of the current face (defaults to R^n)
        config: RunConfig (defaults to the process config)

    Returns:
        InteriorPoint, DualCertificate or Infeasible

    Raises:
        InvalidInput: face dimension differs from the instance
        MaxIterations: the interior-point solver stalled
        NumericalError: the stage stress vanishes on the face
    """
    cfg = config or get_config()
    face = OrthoBasis.full(inst.n) if face is None else face
    if face.n != inst.n:
        raise InvalidInput(f"Face lives in R^{face.n}, instance has n={inst.n}")
    rows = RowSystem(inst, face)
    if inst.n == 0:
        return InteriorPoint(X=SymMatrix(np.zeros((0, 0))), Z=np.zeros((0, 0)), t=float("inf"))
    if face.r == 0:
        return _empty_face(rows)

    eq = [k for k, kind in enumerate(rows.kinds) if kind == 'eq']
    ineq = [k for k, kind in enumerate(rows.kinds) if kind != 'eq']
    while True:
        z0, N, res = _affine(rows.A[eq], rows.b[eq], rows.dim)
        if res.size and float(np.max(np.abs(res))) > EQ_INCONSISTENT_TOL:
            logger.debug(f"equality rows inconsistent on face r={face.r} (residual {np.max(np.abs(res)):.2e})")
            omega = np.zeros(rows.size)
            omega[eq] = -res / float(res @ res)
            return _zero_restricted_infeasible(rows, omega)
        if not ineq:
            break
        g, H = _slack_terms(rows, ineq, z0, N)
        value, u = _farkas(g, H)
        if value is None or value > LP_IMPLIED_TOL:
            break
        if value < -LP_IMPLIED_TOL:
            logger.debug(f"inequality rows infeasible on face r={face.r} (farkas value {value:.2e})")
            omega = np.zeros(rows.size)
            sig = np.array([rows.sign(k) for k in ineq])
            omega[ineq] = -sig * u
            omega[eq] = _equality_multipliers(rows, eq, rows.A[ineq].T @ (sig * u))
            return _zero_restricted_infeasible(rows, omega)
        implied = [ineq[i] for i in _implied_rows(g, H)]
        if not implied:
            break
        logger.debug(f"rows {implied} are implied equalities on face r={face.r}")
        eq = sorted(eq + implied)
        ineq = [k for k in ineq if k not in implied]

    return _solve_on_face(rows, eq, ineq, z0, N, cfg)


def _solve_on_face(rows: RowSystem, eq: List[int], ineq: List[int], z0, N, cfg) -> OracleOutcome:
    r, q = rows.r, N.shape[1]
    g, H = _slack_terms(rows, ineq, z0, N) if ineq else (np.zeros(0), np.zeros((0, q)))
    F_s = np.zeros((q + 1, r, r))
    for j in range(q):
        F_s[j] = -smat(N[:, j], r)
    F_s[q] = np.eye(r)
    F_l = np.zeros((q + 1, len(ineq)))
    F_l[:q] = -H.T
    b = np.zeros(q + 1)
    b[q] = 1.0
    problem = SDPProblem(C_s=smat(z0, r), F_s=F_s, C_l=g, F_l=F_l, b=b)
    result = solve_sdp(problem, max_iters=cfg.max_iters, step_frac=cfg.step_frac)
    t = result.dual_obj
    logger.debug(f"face r={r}: t*={t:.3e} after {result.iterations} iterations ({result.status})")

    if t > cfg.tol_pd:
        Z = smat(z0 + N @ result.y[:q], r)
        B = rows.face.columns
        X = SymMatrix(B @ Z @ B.T)
        worst = rows.inst.residuals(X)
        if worst > cfg.tol_feas:
            logger.warning(f"Interior point violates constraints by {worst:.2e}")
        return InteriorPoint(X=X, Z=Z, t=t)

    W = (result.X + result.X.T) / 2
    lam = result.x
    sig = np.array([rows.sign(k) for k in ineq])
    omega = np.zeros(rows.size)
    omega[ineq] = -sig * lam
    target = svec(W) + (rows.A[ineq].T @ (sig * lam) if ineq else 0.0)
    omega[eq] = _equality_multipliers(rows, eq, target)

    raw = _clip_signs(rows, omega)
    if rows.sign_violation(omega) > SIGN_CLIP or rows.objective(omega) > cfg.tol_obj:
        omega = _polish(rows, omega, rows.A.T @ omega)
    omega = _clip_signs(rows, omega)
    vanishes = _vanishes_on_face(rows, omega)
    omega, R = _trace_normalized(rows, omega)
    obj = rows.objective(omega)

    if t < -cfg.tol_infeas or obj < -cfg.tol_infeas:
        return Infeasible(rows.stress(omega), obj, R)
    if vanishes:
        if rows.sign_violation(raw) > SIGN_TOL or _vanishes_on_face(rows, raw):
            raise NumericalError(f"Stage stress vanishes on the face (dimension {rows.r})")
        logger.warning(f"Polished stress vanishes on the face r={rows.r}; keeping the unpolished multiplier")
        omega, R = _trace_normalized(rows, raw)
        obj = rows.objective(omega)
    if obj > cfg.tol_obj:
        logger.warning(f"Stage objective {obj:.2e} exceeds tolerance {cfg.tol_obj:.0e}")
    return DualCertificate(rows.stress(omega), obj, R, zero_space(rows.face, R, cfg.tol_support))
