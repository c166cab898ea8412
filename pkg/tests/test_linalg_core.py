import numpy as np
import pytest

from errors import InvalidInput, InvalidMatrix, NotPSD
from linalg_core import (OrthoBasis, SymMatrix, eig_sym, gram, gram_factor, nullspace_basis, numeric_rank,
                         orth_complement, orthonormalize, psd_on_subspace, smat, svec, sym_unit)


def _random_symmetric(rng, n):
    A = rng.standard_normal((n, n))
    return (A + A.T) / 2


def test_eig_sym_matches_lapack(rng):
    M = _random_symmetric(rng, 7)
    lam, vecs = eig_sym(M)
    assert np.allclose(lam, np.linalg.eigvalsh(M), atol=1e-10)
    V = vecs.columns
    assert np.allclose(V.T @ V, np.eye(7), atol=1e-10)
    assert np.allclose(V @ np.diag(lam) @ V.T, M, atol=1e-9)


def test_eig_sym_empty_matrix():
    lam, vecs = eig_sym(np.zeros((0, 0)))
    assert lam.size == 0
    assert vecs.r == 0


def test_symmatrix_upper_triangle_is_authoritative():
    S = SymMatrix([[1.0, 2.0], [5.0, 3.0]])
    assert S[1, 0] == 2.0
    with pytest.raises(InvalidMatrix):
        SymMatrix([[1.0, 2.0, 3.0]])
    with pytest.raises(InvalidMatrix):
        SymMatrix([[np.nan]])


def test_numeric_rank_of_low_rank_gram(rng):
    P = rng.standard_normal((2, 5))
    assert numeric_rank(P.T @ P, 1e-8) == 2
    assert numeric_rank(np.zeros((3, 3)), 1e-8) == 0


def test_gram_factor_reconstructs(rng):
    P = rng.standard_normal((3, 6))
    X = P.T @ P
    F = gram_factor(X)
    assert F.shape == (3, 6)
    assert np.allclose(gram(F), X, atol=1e-9)


def test_gram_factor_rejects_indefinite_and_wrong_rank():
    with pytest.raises(NotPSD):
        gram_factor(np.diag([1.0, -1.0]))
    with pytest.raises(InvalidInput):
        gram_factor(np.eye(3), r=2)


def test_psd_on_subspace_gives_a_witness():
    M = np.diag([1.0, -1.0, 0.0])
    ok = psd_on_subspace(M, OrthoBasis([[1.0], [0.0], [0.0]]))
    assert ok.ok and ok.witness is None
    bad = psd_on_subspace(M, OrthoBasis([[0.0], [1.0], [0.0]]))
    assert not bad.ok
    assert bad.witness @ M @ bad.witness < 0
    with pytest.raises(InvalidInput):
        psd_on_subspace(M, OrthoBasis.full(2))


def test_nullspace_and_complement():
    N = nullspace_basis(np.diag([2.0, 0.0, 0.0]))
    assert N.r == 2
    assert np.allclose(N.columns[0], 0.0)
    C = orth_complement(N)
    assert C.r == 1
    assert abs(abs(C.columns[0, 0]) - 1.0) < 1e-10


def test_orthonormalize_drops_dependent_vectors():
    B = orthonormalize([[1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [1.0, 1.0, 0.0]])
    assert B.r == 2
    assert np.allclose(B.columns.T @ B.columns, np.eye(2))


def test_orthobasis_rejects_non_orthonormal_columns():
    with pytest.raises(InvalidInput):
        OrthoBasis([[1.0, 1.0], [0.0, 1.0]])


def test_svec_preserves_trace_inner_product(rng):
    A = _random_symmetric(rng, 4)
    B = _random_symmetric(rng, 4)
    assert np.isclose(svec(A) @ svec(B), np.trace(A @ B))
    assert np.allclose(smat(svec(A), 4), A)


def test_sym_unit():
    E = sym_unit(3, 0, 2)
    assert E[0, 2] == E[2, 0] == 0.5
    assert sym_unit(3, 1, 1)[1, 1] == 1.0
