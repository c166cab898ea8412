import numpy as np
import pytest

from errors import InvalidInput, NumericalError
from instance import SignedCompletionInstance
from linalg_core import OrthoBasis
from oracle import DualCertificate, Infeasible, InteriorPoint, RowSystem, feasibility_oracle, zero_space


def _is_psd(M, tol=1e-8):
    return np.linalg.eigvalsh((M + M.T) / 2)[0] >= -tol * max(1.0, np.max(np.abs(M)))


def test_row_system_reads_constrained_entries(rng):
    inst = SignedCompletionInstance(3, [(0, 1, 'ge', 0.2), (1, 2, 'le', 0.4)])
    rows = RowSystem(inst, OrthoBasis.full(3))
    assert rows.kinds == ['eq', 'eq', 'eq', 'ge', 'le']
    assert rows.sign(3) == 1.0 and rows.sign(4) == -1.0 and rows.sign(0) == 0.0
    omega = rng.standard_normal(rows.size)
    # Omega restricted to the full face is the stress matrix itself
    assert np.allclose(rows.restricted(omega), rows.stress(omega).matrix())


def test_interior_point_for_a_slack_edge():
    inst = SignedCompletionInstance(2, [(0, 1, 'eq', 0.5)])
    outcome = feasibility_oracle(inst)
    assert isinstance(outcome, InteriorPoint)
    assert outcome.t > 0
    assert inst.is_feasible_point(outcome.X.array, tol=1e-6)
    assert np.linalg.eigvalsh(outcome.X.array)[0] > 0


def test_certificate_for_a_degenerate_edge(cfg):
    inst = SignedCompletionInstance(2, [(0, 1, 'eq', 1.0)])
    outcome = feasibility_oracle(inst, config=cfg)
    assert isinstance(outcome, DualCertificate)
    assert outcome.objective <= cfg.tol_obj
    assert _is_psd(outcome.omega.matrix())
    assert outcome.next_face.r == 1
    # the surviving direction is (1, 1) / sqrt(2)
    v = outcome.next_face.columns[:, 0]
    assert abs(abs(v[0]) - abs(v[1])) < 1e-6 and v[0] * v[1] > 0


def test_certificate_for_the_tight_triangle(tight_triangle, cfg):
    outcome = feasibility_oracle(tight_triangle, config=cfg)
    assert isinstance(outcome, DualCertificate)
    assert outcome.next_face.r == 2
    assert outcome.omega.vertex.sum() > 0


def test_sign_rules_on_inequalities(cfg):
    # X[0, 1] <= -1 forces the antipodal pair, certified by a nonnegative le weight
    inst = SignedCompletionInstance(2, [(0, 1, 'le', -1.0)])
    outcome = feasibility_oracle(inst, config=cfg)
    assert isinstance(outcome, DualCertificate)
    assert outcome.omega.value(0, 1, 'le') >= -1e-9
    assert outcome.next_face.r == 1


def test_infeasible_triangle(infeasible_triangle):
    outcome = feasibility_oracle(infeasible_triangle)
    assert isinstance(outcome, Infeasible)
    assert outcome.objective < 0
    assert _is_psd(outcome.omega.matrix(), tol=1e-7)


def test_inconsistent_inequalities():
    inst = SignedCompletionInstance(2, [(0, 1, 'ge', 0.5), (0, 1, 'le', 0.2)])
    outcome = feasibility_oracle(inst)
    assert isinstance(outcome, Infeasible)
    assert outcome.objective < 0
    assert outcome.omega.value(0, 1, 'ge') <= 1e-9
    assert outcome.omega.value(0, 1, 'le') >= -1e-9


def test_empty_face():
    inst = SignedCompletionInstance(3)
    outcome = feasibility_oracle(inst, OrthoBasis.empty(3))
    assert isinstance(outcome, Infeasible)
    assert outcome.objective == -3.0


def test_face_dimension_mismatch():
    with pytest.raises(InvalidInput):
        feasibility_oracle(SignedCompletionInstance(3), OrthoBasis.full(2))


def test_zero_space():
    face = OrthoBasis.full(3)
    Z = zero_space(face, np.diag([0.0, 2.0, 0.0]), 1e-6)
    assert Z.r == 2
    assert np.allclose(Z.columns[1], 0.0)


def test_vanishing_polished_stress_falls_back_to_the_multiplier(tight_triangle, cfg, monkeypatch):
    monkeypatch.setattr('oracle.SIGN_CLIP', -1.0)
    monkeypatch.setattr('oracle._polish', lambda rows, omega, target: np.zeros_like(omega))
    outcome = feasibility_oracle(tight_triangle, config=cfg)
    assert isinstance(outcome, DualCertificate)
    assert np.max(np.abs(np.linalg.eigvalsh(outcome.restricted))) > 1e-6
    assert outcome.next_face.r == 2


def test_stress_vanishing_on_the_face_is_a_numerical_error(tight_triangle, cfg, monkeypatch):
    monkeypatch.setattr(RowSystem, 'restricted', lambda self, omega: np.zeros((self.r, self.r)))
    with pytest.raises(NumericalError):
        feasibility_oracle(tight_triangle, config=cfg)
