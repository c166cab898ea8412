"""
Dense symmetric linear algebra
Cyclic Jacobi eigendecomposition, tolerance-based rank, nullspaces,
subspace-restricted PSD tests and Gram factorization
"""
import math
from typing import NamedTuple, Optional

import numpy as np

from config import get_config
from errors import InvalidMatrix, InvalidInput, NotPSD

ORTHO_TOL = 1e-10


class SymMatrix:
    """
    Immutable dense symmetric matrix; the upper triangle is authoritative

    Args:
        entries: square array-like with finite entries
    """

    def __init__(self, entries):
        a = np.array(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidMatrix(f"Expected a square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise InvalidMatrix("Matrix has non-finite entries")
        upper = np.triu(a)
        a = upper + np.triu(a, 1).T
        a.flags.writeable = False
        self._a = a

    @property
    def n(self):
        return self._a.shape[0]

    @property
    def array(self):
        return self._a

    def __getitem__(self, key):
        return self._a[key]

    def __repr__(self):
        return f"SymMatrix(n={self.n})"


class OrthoBasis:
    """
    Orthonormal basis of a subspace of R^n, stored as the columns of an n x r array
    """

    def __init__(self, columns, n=None):
        cols = np.array(columns, dtype=float)
        if cols.ndim == 1:
            cols = cols.reshape(-1, 1)
        if cols.size == 0:
            if n is None:
                n = cols.shape[0]
            cols = np.zeros((n, 0))
        if n is not None and cols.shape[0] != n:
            raise InvalidInput(f"Basis vectors have length {cols.shape[0]}, expected {n}")
        gram = cols.T @ cols
        if cols.shape[1] and np.max(np.abs(gram - np.eye(cols.shape[1]))) > 1e-8:
            raise InvalidInput("Basis columns are not orthonormal")
        cols.flags.writeable = False
        self._cols = cols

    @classmethod
    def full(cls, n):
        return cls(np.eye(n), n=n)

    @classmethod
    def empty(cls, n):
        return cls(np.zeros((n, 0)), n=n)

    @property
    def n(self):
        return self._cols.shape[0]

    @property
    def r(self):
        return self._cols.shape[1]

    @property
    def columns(self):
        return self._cols

    def projector(self):
        return self._cols @ self._cols.T

    def __repr__(self):
        return f"OrthoBasis(n={self.n}, r={self.r})"


class PsdCheck(NamedTuple):
    ok: bool
    min_eig: float
    witness: Optional[np.ndarray]


def as_array(M):
    """Return the symmetric ndarray behind a SymMatrix or array-like"""
    if isinstance(M, SymMatrix):
        return M.array
    a = np.asarray(M, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidMatrix(f"Expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidMatrix("Matrix has non-finite entries")
    return (a + a.T) / 2


def _jacobi(a, max_sweeps=100):
    """Cyclic Jacobi sweeps on a copy of a; returns (diagonal, rotation matrix)"""
    a = a.copy()
    n = a.shape[0]
    v = np.eye(n)
    scale = max(1.0, np.max(np.abs(a))) if n else 1.0
    for _ in range(max_sweeps):
        off = math.sqrt(np.sum(np.triu(a, 1) ** 2))
        if off <= 1e-15 * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                phi = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(phi) + math.sqrt(phi * phi + 1.0))
                if phi < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    return np.diag(a).copy(), v


def eig_sym(M):
    """
    Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations

    Args:
        M: SymMatrix or symmetric array-like

    Returns:
        (eigenvalues ascending, OrthoBasis of matching eigenvectors)

    Raises:
        InvalidMatrix: non-finite entries
    """
    a = as_array(M)
    n = a.shape[0]
    if n == 0:
        return np.zeros(0), OrthoBasis.empty(0)
    lam, v = _jacobi(a)
    order = np.argsort(lam, kind='stable')
    return lam[order], OrthoBasis(v[:, order], n=n)


def eigvals_sym(M):
    return eig_sym(M)[0]


def numeric_rank(M, tol=None):
    """Count eigenvalues with |lambda| > tol * max(1, |lambda|_max)"""
    tol = get_config().tol_rank if tol is None else tol
    lam = eigvals_sym(M)
    if lam.size == 0:
        return 0
    threshold = tol * max(1.0, float(np.max(np.abs(lam))))
    return int(np.sum(np.abs(lam) > threshold))


def psd_on_subspace(M, B: OrthoBasis, tol_psd=None) -> PsdCheck:
    """
    Test whether M is PSD on span(B)

    Returns:
        PsdCheck; on failure the witness x lies in span(B) with x^T M x < 0

    Raises:
        InvalidInput: B.n differs from the dimension of M
    """
    tol_psd = get_config().tol_psd if tol_psd is None else tol_psd
    a = as_array(M)
    if B.n != a.shape[0]:
        raise InvalidInput(f"Basis dimension {B.n} does not match matrix dimension {a.shape[0]}")
    if B.r == 0:
        return PsdCheck(True, math.inf, None)
    lam, vecs = eig_sym(B.columns.T @ a @ B.columns)
    if lam[0] >= -tol_psd:
        return PsdCheck(True, float(lam[0]), None)
    witness = B.columns @ vecs.columns[:, 0]
    return PsdCheck(False, float(lam[0]), witness)


def nullspace_basis(M, tol=None) -> OrthoBasis:
    """Eigenvectors of M whose eigenvalues satisfy |lambda| <= tol * max(1, |lambda|_max)"""
    tol = get_config().tol_rank if tol is None else tol
    a = as_array(M)
    lam, vecs = eig_sym(a)
    if lam.size == 0:
        return OrthoBasis.empty(0)
    threshold = tol * max(1.0, float(np.max(np.abs(lam))))
    keep = np.abs(lam) <= threshold
    return OrthoBasis(vecs.columns[:, keep], n=a.shape[0])


def gram_factor(X, r=None, tol=None):
    """
    Factor a PSD matrix as X = P^T P

    Args:
        X: PSD matrix
        r: expected rank (defaults to numeric_rank(X))
        tol: relative rank tolerance

    Returns:
        P with shape (r, n) and independent rows

    Raises:
        NotPSD: X has an eigenvalue below -tol_psd * max(1, |lambda|_max)
        InvalidInput: r disagrees with the numeric rank of X
    """
    cfg = get_config()
    tol = cfg.tol_rank if tol is None else tol
    a = as_array(X)
    lam, vecs = eig_sym(a)
    n = a.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    scale = max(1.0, float(np.max(np.abs(lam))))
    if lam[0] < -cfg.tol_psd * scale:
        raise NotPSD(f"Matrix has eigenvalue {lam[0]:.3e}")
    rank = int(np.sum(np.abs(lam) > tol * scale))
    if r is None:
        r = rank
    if r != rank:
        raise InvalidInput(f"Requested rank {r} but numeric rank is {rank}")
    top = vecs.columns[:, n - r:]
    return (top * np.sqrt(np.maximum(lam[n - r:], 0.0))).T


def gram(P):
    """Gram matrix P^T P of the columns of P"""
    P = np.asarray(P, dtype=float)
    return P.T @ P


def orthonormalize(vectors, n=None, tol=ORTHO_TOL) -> OrthoBasis:
    """
    Modified Gram-Schmidt with one re-orthogonalization pass

    Args:
        vectors: iterable of length-n vectors (or an n x k array of columns)
        tol: vectors whose residual norm falls below tol * (largest input norm) are dropped
    """
    arr = np.asarray(vectors, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    elif not isinstance(vectors, np.ndarray):
        arr = arr.T
    if n is None:
        n = arr.shape[0]
    if arr.size == 0:
        return OrthoBasis.empty(n)
    max_norm = max(float(np.max(np.linalg.norm(arr, axis=0))), 1e-300)
    basis = []
    for k in range(arr.shape[1]):
        w = arr[:, k].copy()
        for _ in range(2):
            for q in basis:
                w -= (q @ w) * q
        norm = np.linalg.norm(w)
        if norm > tol * max_norm:
            basis.append(w / norm)
    if not basis:
        return OrthoBasis.empty(n)
    return OrthoBasis(np.column_stack(basis), n=n)


def orth_complement(B: OrthoBasis) -> OrthoBasis:
    """Orthonormal basis of the orthogonal complement of span(B)"""
    if B.r == 0:
        return OrthoBasis.full(B.n)
    return nullspace_basis(B.projector(), tol=1e-8)


def restrict(M, B: OrthoBasis):
    """B^T M B"""
    return B.columns.T @ as_array(M) @ B.columns


def sym_unit(n, i, j):
    """E_ij = (e_i e_j^T + e_j e_i^T) / 2; E_ii = e_i e_i^T"""
    E = np.zeros((n, n))
    if i == j:
        E[i, i] = 1.0
    else:
        E[i, j] = E[j, i] = 0.5
    return E


def svec(M):
    """Stack the upper triangle, scaling off-diagonal entries by sqrt(2) so inner products match"""
    a = np.asarray(M, dtype=float)
    r = a.shape[0]
    iu = np.triu_indices(r)
    scale = np.where(iu[0] == iu[1], 1.0, math.sqrt(2.0))
    return a[iu] * scale


def smat(v, r):
    """Inverse of svec"""
    iu = np.triu_indices(r)
    scale = np.where(iu[0] == iu[1], 1.0, 1.0 / math.sqrt(2.0))
    a = np.zeros((r, r))
    a[iu] = np.asarray(v, dtype=float) * scale
    return a + np.triu(a, 1).T
