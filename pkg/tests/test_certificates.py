import json

import numpy as np
import pytest

from certificates import (NestedPSDCertificate, StressVector, load_certificate, save_certificate,
                          verify_certificate)
from errors import InstanceParseError, InvalidInput
from instance import SignedCompletionInstance

ANTIPODAL = SignedCompletionInstance(2, [(0, 1, 'eq', -1.0)])


def _antipodal_stage(scale=1.0):
    # Omega = [[1, 1], [1, 1]] with Omega[0, 1] = w(01) / 2
    return StressVector([scale, scale], ANTIPODAL.keys, [2.0 * scale])


def test_stress_matrix_uses_half_edge_weights():
    w = StressVector([1.0, 2.0, 3.0], [(0, 2, 'ge'), (0, 2, 'le')], [-1.0, 3.0])
    M = w.matrix()
    assert M[0, 2] == M[2, 0] == 1.0
    assert np.allclose(np.diag(M), [1.0, 2.0, 3.0])
    assert w.value(2, 0) == 2.0
    assert w.value(0, 2, 'le') == 3.0


def test_stress_objective_and_support():
    w = StressVector([1.0, 1.0], [(0, 1, 'eq')], [2.0])
    assert w.objective({(0, 1, 'eq'): -1.0}) == 0.0
    assert w.edge_support() == [(0, 1, 'eq')]
    assert w.stressed_vertices() == {0, 1}
    assert StressVector.zero(2, [(0, 1, 'eq')]).edge_support() == []


def test_stress_rejects_bad_data():
    with pytest.raises(InvalidInput):
        StressVector([1.0], [(0, 1, 'eq')], [])
    with pytest.raises(InvalidInput):
        StressVector([np.inf], [], [])
    with pytest.raises(InvalidInput):
        StressVector([1.0, 1.0], [(0, 1, 'eq')], [1.0]) + StressVector([1.0, 1.0], [(0, 1, 'ge')], [1.0])


def test_certificate_face_dims_must_match_stages():
    with pytest.raises(InvalidInput):
        NestedPSDCertificate(2, (_antipodal_stage(),), (2,))
    cert = NestedPSDCertificate(2, (_antipodal_stage(),), (2, 1))
    assert cert.rank == 1 and cert.reducing_stages == 1 and len(cert) == 1


def test_certificate_file(tmp_path):
    cert = NestedPSDCertificate(2, (_antipodal_stage(),), (2, 1))
    path = tmp_path / 'c.cert.json'
    save_certificate(cert, path)
    data = json.loads(path.read_text())
    assert set(data) == {'stages', 'face_dims'}
    assert data['stages'][0]['edges'] == [{'u': 0, 'v': 1, 'kind': 'eq', 'val': 2.0}]
    assert load_certificate(path) == cert


@pytest.mark.parametrize("data", [
    {'stages': []},
    {'stages': [], 'face_dims': []},
    {'stages': [{'vertex': [1.0]}], 'face_dims': [1, 0]},
    {'stages': [{'vertex': [1.0, 1.0], 'edges': [{'u': 0, 'v': 1, 'kind': 'x', 'val': 1.0}]}], 'face_dims': [2, 1]},
    {'stages': [{'vertex': [1.0], 'edges': []}], 'face_dims': [2, 1]},
])
def test_certificate_parse_errors(data):
    with pytest.raises(InstanceParseError):
        NestedPSDCertificate.from_dict(data)


def test_verify_antipodal_certificate():
    X = np.array([[1.0, -1.0], [-1.0, 1.0]])
    report = verify_certificate(ANTIPODAL, NestedPSDCertificate(2, (_antipodal_stage(),), (2, 1)), X=X)
    assert report.c1 and report.c2 and report.c3 and report.c4
    assert report.passed
    assert report.face_dims == (2, 1)
    assert report.objectives[0] == pytest.approx(0.0)


def test_verify_flags_each_condition():
    X = np.array([[1.0, -1.0], [-1.0, 1.0]])

    # wrong sign on a ge edge
    inst = SignedCompletionInstance(2, [(0, 1, 'ge', -1.0)])
    bad_sign = NestedPSDCertificate(2, (StressVector([1.0, 1.0], inst.keys, [2.0]),), (2, 1))
    assert not verify_certificate(inst, bad_sign).c1

    # indefinite stage
    indefinite = NestedPSDCertificate(2, (StressVector([1.0, 1.0], ANTIPODAL.keys, [4.0]),), (2, 1))
    assert not verify_certificate(ANTIPODAL, indefinite).c2

    # positive objective
    positive = NestedPSDCertificate(2, (StressVector([1.0, 1.0], ANTIPODAL.keys, [1.0]),), (2, 2))
    assert not verify_certificate(ANTIPODAL, positive).c3

    # a full-rank X contradicts the certified rank
    report = verify_certificate(ANTIPODAL, NestedPSDCertificate(2, (_antipodal_stage(),), (2, 1)), X=np.eye(2))
    assert report.c4 is False
    assert not report.passed


def test_verify_dimension_mismatch():
    cert = NestedPSDCertificate(3, (), (3,))
    report = verify_certificate(ANTIPODAL, cert)
    assert not report.passed
    assert report.messages


def test_verify_rejects_recorded_faces_that_disagree():
    # the stage leaves a one-dimensional face; recording (2, 2) claims rank 0
    cert = NestedPSDCertificate(2, (_antipodal_stage(),), (2, 2))
    report = verify_certificate(ANTIPODAL, cert)
    assert report.c1 and report.c2 and report.c3
    assert report.face_dims == (2, 1)
    assert not report.faces_match
    assert not report.passed
    assert any('differ from recorded' in m for m in report.messages)
