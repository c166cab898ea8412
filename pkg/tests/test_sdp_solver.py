import numpy as np
import pytest

from errors import InvalidInput, MaxIterations
from sdp_solver import SDPProblem, solve_sdp


def _min_eigenvalue_problem(C):
    """maximize y subject to C - y I PSD"""
    r = C.shape[0]
    return SDPProblem(C_s=C, F_s=np.eye(r)[None, :, :], C_l=np.zeros(0), F_l=np.zeros((1, 0)), b=[1.0])


def test_minimum_eigenvalue(rng):
    A = rng.standard_normal((5, 5))
    C = (A + A.T) / 2
    result = solve_sdp(_min_eigenvalue_problem(C))
    assert result.status in ('optimal', 'inaccurate')
    assert result.y[0] == pytest.approx(np.linalg.eigvalsh(C)[0], abs=1e-7)
    assert result.primal_obj == pytest.approx(result.dual_obj, abs=1e-7)
    assert np.trace(result.X) == pytest.approx(1.0, abs=1e-7)


def test_mixed_blocks():
    # y <= 1 from the matrix block and y <= 2 from the linear block
    P = SDPProblem(C_s=[[1.0]], F_s=[[[1.0]]], C_l=[2.0], F_l=[[1.0]], b=[1.0])
    result = solve_sdp(P)
    assert result.y[0] == pytest.approx(1.0, abs=1e-7)
    assert result.x[0] == pytest.approx(0.0, abs=1e-6)


def test_shape_mismatch():
    with pytest.raises(InvalidInput):
        SDPProblem(C_s=np.eye(2), F_s=np.zeros((1, 3, 3)), C_l=np.zeros(0), F_l=np.zeros((1, 0)), b=[1.0])


def test_iteration_cap():
    with pytest.raises(MaxIterations):
        solve_sdp(_min_eigenvalue_problem(np.diag([3.0, 1.0, 2.0])), max_iters=1)
