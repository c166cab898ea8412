"""
Dense primal-dual interior-point method for small SDPs in dual form

    maximize    b . y
    subject to  C_s - sum_i y_i F_s[i]  PSD        (matrix block)
                C_l - F_l^T y           >= 0       (linear block)

paired with the primal

    minimize    <C_s, X> + C_l . x
    subject to  <F_s[i], X> + F_l[i] . x = b_i,   X PSD,  x >= 0

Infeasible start, HKM search direction, Mehrotra predictor-corrector.
The starting point is deterministic; there is no randomness anywhere.
"""
import math
from dataclasses import dataclass

import numpy as np

from config import get_config
from errors import InvalidInput, MaxIterations
from logger_config import logger

TOL_GAP = 1e-13
TOL_RESIDUAL = 1e-12
ACCEPT_GAP = 1e-8
ACCEPT_RESIDUAL = 1e-8


@dataclass
class SDPProblem:
    C_s: np.ndarray      # (r, r)
    F_s: np.ndarray      # (p, r, r)
    C_l: np.ndarray      # (m,)
    F_l: np.ndarray      # (p, m)
    b: np.ndarray        # (p,)

    def __post_init__(self):
        self.C_s = np.asarray(self.C_s, dtype=float)
        self.F_s = np.asarray(self.F_s, dtype=float)
        self.C_l = np.asarray(self.C_l, dtype=float).reshape(-1)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        p = self.b.size
        r = self.C_s.shape[0]
        m = self.C_l.size
        self.F_l = np.asarray(self.F_l, dtype=float).reshape(p, m)
        if self.F_s.shape != (p, r, r):
            raise InvalidInput(f"F_s has shape {self.F_s.shape}, expected {(p, r, r)}")

    @property
    def r(self):
        return self.C_s.shape[0]

    @property
    def m(self):
        return self.C_l.size

    @property
    def p(self):
        return self.b.size

    def apply(self, X, x):
        """A(X, x)_i = <F_s[i], X> + F_l[i] . x"""
        return self.F_s.reshape(self.p, -1) @ X.reshape(-1) + self.F_l @ x

    def adjoint(self, y):
        return np.tensordot(y, self.F_s, axes=1), self.F_l.T @ y


@dataclass
class SDPResult:
    y: np.ndarray
    S: np.ndarray
    s: np.ndarray
    X: np.ndarray
    x: np.ndarray
    primal_obj: float
    dual_obj: float
    mu: float
    iterations: int
    status: str


def _spd_inverse(S):
    L = np.linalg.cholesky(S)
    Li = np.linalg.inv(L)
    return Li.T @ Li


def _max_step_psd(X, dX):
    """Largest alpha with X + alpha dX PSD (X positive definite)"""
    if X.shape[0] == 0:
        return math.inf
    L = np.linalg.cholesky(X)
    Li = np.linalg.inv(L)
    T = Li @ dX @ Li.T
    lam = np.linalg.eigvalsh((T + T.T) / 2)[0]
    return math.inf if lam >= 0 else -1.0 / lam


def _max_step_lp(x, dx):
    neg = dx < 0
    if not np.any(neg):
        return math.inf
    return float(np.min(-x[neg] / dx[neg]))


def _sym(M):
    return (M + M.T) / 2


def solve_sdp(problem: SDPProblem, max_iters=None, step_frac=None,
              tol_gap=TOL_GAP, tol_residual=TOL_RESIDUAL) -> SDPResult:
    """
    Solve a dual-form SDP

    Args:
        problem: SDPProblem data
        max_iters: iteration cap (defaults to the run config)
        step_frac: fraction of the step to the boundary

    Returns:
        SDPResult with status 'optimal' or 'inaccurate'

    Raises:
        MaxIterations: the iterate never reached the acceptance accuracy
    """
    cfg = get_config()
    max_iters = cfg.max_iters if max_iters is None else max_iters
    step_frac = cfg.step_frac if step_frac is None else step_frac

    P = problem
    r, m, p = P.r, P.m, P.p
    nu = max(r + m, 1)
    I = np.eye(r)
    F_flat = P.F_s.reshape(p, -1)

    norm_b = 1.0 + np.linalg.norm(P.b)
    norm_C = 1.0 + math.sqrt(np.sum(P.C_s ** 2) + np.sum(P.C_l ** 2))
    f_norms = np.sqrt(np.sum(F_flat ** 2, axis=1) + np.sum(P.F_l ** 2, axis=1)) if p else np.zeros(0)
    xi = max(10.0, math.sqrt(r), float(np.max((1.0 + np.abs(P.b)) / (1.0 + f_norms))) * math.sqrt(nu) if p else 0.0)
    eta = max(10.0, math.sqrt(r), norm_C, float(np.max(f_norms)) if p else 0.0)

    X = xi * I
    x = xi * np.ones(m)
    S = eta * I
    s = eta * np.ones(m)
    y = np.zeros(p)

    status = None
    stalls = 0
    it = 0
    for it in range(1, max_iters + 1):
        ATy_s, ATy_l = P.adjoint(y)
        rp = P.b - P.apply(X, x)
        Rd_s = P.C_s - ATy_s - S
        Rd_l = P.C_l - ATy_l - s
        gap = float(np.sum(X * S) + x @ s)
        mu = gap / nu
        pobj = float(np.sum(P.C_s * X) + P.C_l @ x)
        dobj = float(P.b @ y)
        pinf = np.linalg.norm(rp) / norm_b
        dinf = math.sqrt(np.sum(Rd_s ** 2) + np.sum(Rd_l ** 2)) / norm_C
        relgap = abs(gap) / (1.0 + abs(pobj) + abs(dobj))
        logger.debug(f"ipm it={it} pobj={pobj:.12e} dobj={dobj:.12e} mu={mu:.2e} pinf={pinf:.1e} dinf={dinf:.1e}")
        if pinf < tol_residual and dinf < tol_residual and relgap < tol_gap:
            status = 'optimal'
            break

        try:
            Sinv = _spd_inverse(S)
        except np.linalg.LinAlgError:
            logger.debug("ipm: slack lost definiteness, stopping")
            break
        G = np.matmul(np.matmul(X, P.F_s), Sinv)
        M = F_flat @ G.reshape(p, -1).T
        if m:
            M += (P.F_l * (x / s)) @ P.F_l.T
        M = _sym(M)
        try:
            L = np.linalg.cholesky(M)

            def solve_M(rhs):
                return np.linalg.solve(L.T, np.linalg.solve(L, rhs))
        except np.linalg.LinAlgError:
            M_pinv = np.linalg.pinv(M, rcond=1e-15)

            def solve_M(rhs):
                return M_pinv @ rhs

        def direction(sigma, corr=None):
            T_s = X @ Rd_s @ Sinv - sigma * mu * Sinv
            T_l = x * Rd_l / s - sigma * mu / s if m else np.zeros(0)
            if corr is not None:
                T_s = T_s + corr[0] @ corr[1] @ Sinv
                if m:
                    T_l = T_l + corr[2] * corr[3] / s
            dy = solve_M(P.b + P.apply(T_s, T_l))
            dS_s, dS_l = P.adjoint(dy)
            dS_s = Rd_s - dS_s
            dS_l = Rd_l - dS_l
            inner = X @ dS_s
            if corr is not None:
                inner = inner + corr[0] @ corr[1]
            dX_s = _sym(sigma * mu * Sinv - X - inner @ Sinv)
            if m:
                inner_l = x * dS_l
                if corr is not None:
                    inner_l = inner_l + corr[2] * corr[3]
                dx_l = sigma * mu / s - x - inner_l / s
            else:
                dx_l = np.zeros(0)
            return dy, dX_s, dx_l, dS_s, dS_l

        try:
            dya, dXa, dxa, dSa, dsa = direction(0.0)
            ap = min(1.0, _max_step_psd(X, dXa), _max_step_lp(x, dxa))
            ad = min(1.0, _max_step_psd(S, dSa), _max_step_lp(s, dsa))
            mu_aff = (np.sum((X + ap * dXa) * (S + ad * dSa)) + (x + ap * dxa) @ (s + ad * dsa)) / nu
            sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3)) if mu > 0 else 0.0
            dy, dX, dx, dS, ds = direction(sigma, corr=(dXa, dSa, dxa, dsa))
            ap = min(1.0, step_frac * _max_step_psd(X, dX), step_frac * _max_step_lp(x, dx))
            ad = min(1.0, step_frac * _max_step_psd(S, dS), step_frac * _max_step_lp(s, ds))
        except np.linalg.LinAlgError:
            logger.debug("ipm: factorization failed, stopping")
            break

        if max(ap, ad) < 1e-10:
            stalls += 1
            if stalls >= 3:
                logger.debug("ipm: step length collapsed, stopping")
                break
        else:
            stalls = 0

        X = X + ap * dX
        x = x + ap * dx
        y = y + ad * dy
        S = S + ad * dS
        s = s + ad * ds

    pobj = float(np.sum(P.C_s * X) + P.C_l @ x)
    dobj = float(P.b @ y)
    gap = float(np.sum(X * S) + x @ s)
    mu = gap / nu
    if status is None:
        ATy_s, ATy_l = P.adjoint(y)
        pinf = np.linalg.norm(P.b - P.apply(X, x)) / norm_b
        dinf = math.sqrt(np.sum((P.C_s - ATy_s - S) ** 2) + np.sum((P.C_l - ATy_l - s) ** 2)) / norm_C
        relgap = abs(gap) / (1.0 + abs(pobj) + abs(dobj))
        if pinf < ACCEPT_RESIDUAL and dinf < ACCEPT_RESIDUAL and relgap < ACCEPT_GAP:
            status = 'inaccurate'
            logger.debug(f"ipm: accepted at relgap={relgap:.1e} after {it} iterations")
        else:
            raise MaxIterations(
                f"Interior-point solver stalled after {it} iterations "
                f"(relgap={relgap:.1e}, pinf={pinf:.1e}, dinf={dinf:.1e})")
    return SDPResult(y=y, S=S, s=s, X=X, x=x, primal_obj=pobj, dual_obj=dobj,
                     mu=mu, iterations=it, status=status)
