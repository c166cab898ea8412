import pytest

from certificates import verify_certificate
from errors import InfeasibleInstance, InvalidCombine, InvalidInput
from facial_reduction import (CliquePart, FRResult, augment_tightness, check_nondegeneracy, check_tightness,
                              combine_clique_sum, extend_instance, face_chain, facial_reduction, implied_entries,
                              label_singularity_degree, lift_certificate, nondegenerate_on_face,
                              restrict_certificate, singularity_degree)
from instance import SignedCompletionInstance, max_rank_solution, preprocess_degenerate, uncontract_solution
from linalg_core import numeric_rank


def _verified(inst, result):
    report = verify_certificate(inst, result.certificate, X=result.max_rank_solution)
    assert report.passed, report.messages
    return report


def test_slack_instance_needs_no_stage():
    inst = SignedCompletionInstance(2, [(0, 1, 'eq', 0.5)])
    result = facial_reduction(inst)
    assert result.sd_upper == 0
    assert result.certificate.face_dims == (2,)
    assert numeric_rank(result.max_rank_solution) == 2
    sd = singularity_degree(inst)
    assert (sd.value, sd.kind) == (0, 'exact')


def test_tight_triangle_has_one_stage(tight_triangle):
    result = facial_reduction(tight_triangle)
    assert result.sd_upper == 1
    assert result.certificate.face_dims == (3, 2)
    assert numeric_rank(result.max_rank_solution) == 2
    _verified(tight_triangle, result)
    assert singularity_degree(tight_triangle).to_dict() == {'value': 1, 'kind': 'exact', 'lower': 1}


def test_face_chain_reproduces_the_certificate(tight_triangle):
    cert = facial_reduction(tight_triangle).certificate
    assert tuple(f.r for f in face_chain(tight_triangle, cert.stages)) == cert.face_dims


def test_infeasible_instance(infeasible_triangle):
    result = facial_reduction(infeasible_triangle)
    assert result.infeasible
    assert result.max_rank_solution is None
    assert result.certificate.stages[-1].objective(infeasible_triangle.weights) < 0
    with pytest.raises(InfeasibleInstance) as info:
        singularity_degree(infeasible_triangle)
    assert info.value.certificate is not None
    with pytest.raises(InfeasibleInstance):
        max_rank_solution(infeasible_triangle)


def test_upper_bound_label_respects_lower_bound(tight_triangle):
    cert = facial_reduction(tight_triangle).certificate
    fake = FRResult(cert, None, 4)
    assert label_singularity_degree(tight_triangle, fake).kind == 'upper_bound'
    assert label_singularity_degree(tight_triangle, fake, lower_bound=4).kind == 'exact'


def test_forced_inequality_is_tight_after_augmenting():
    # X01 = X12 = 1 forces X02 = 1, so the ge row is tight everywhere
    inst = SignedCompletionInstance(3, [(0, 1, 'eq', 1.0), (1, 2, 'eq', 1.0), (0, 2, 'ge', 1.0)])
    result = facial_reduction(inst)
    augmented = augment_tightness(inst, result.certificate)
    assert augmented.reducing_stages == result.certificate.reducing_stages
    assert augmented.face_dims[-1] == result.certificate.face_dims[-1]
    assert check_tightness(inst, augmented, result.max_rank_solution) == []
    report = verify_certificate(inst, augmented, X=result.max_rank_solution)
    assert report.c1 and report.c2 and report.c3 and report.c4


def test_slack_inequality_is_never_stressed():
    inst = SignedCompletionInstance(3, [(0, 1, 'eq', 1.0), (1, 2, 'ge', -0.5)])
    result = facial_reduction(inst)
    augmented = augment_tightness(inst, result.certificate)
    assert check_tightness(inst, augmented, result.max_rank_solution) == []


def test_nondegeneracy_of_the_tight_triangle(tight_triangle):
    result = facial_reduction(tight_triangle)
    assert check_nondegeneracy(tight_triangle, result.certificate, result.max_rank_solution)
    assert nondegenerate_on_face(tight_triangle, result.certificate)


def test_nondegeneracy_fails_without_enough_rows():
    # a free rank-3 completion of a path: three diagonal rows and two edges cannot pin a 3x3 S
    inst = SignedCompletionInstance(3, [(0, 1, 'eq', 0.5), (1, 2, 'eq', 0.5)])
    result = facial_reduction(inst)
    assert not check_nondegeneracy(inst, result.certificate, result.max_rank_solution)


def test_implied_entries():
    forced = SignedCompletionInstance(3, [(0, 1, 'eq', 1.0), (1, 2, 'eq', 1.0)])
    [(u, v, value)] = implied_entries(forced)
    assert (u, v) == (0, 2)
    assert value == pytest.approx(1.0, abs=1e-6)
    free = SignedCompletionInstance(3, [(0, 1, 'eq', 0.5), (1, 2, 'eq', 0.5)])
    assert implied_entries(free) == []


def test_clique_sum_of_two_tight_triangles(tight_triangle):
    cert = facial_reduction(tight_triangle).certificate
    a = CliquePart(tight_triangle, cert, (0, 1, 2))
    b = CliquePart(tight_triangle, cert, (1, 2, 3))
    inst, combined = combine_clique_sum(a, b, (1, 2))
    assert inst.n == 4 and len(inst.constraints) == 5
    assert combined.face_dims == (4, 2)
    X = facial_reduction(inst).max_rank_solution
    assert verify_certificate(inst, combined, X=X).passed


def test_clique_sum_rejects_bad_parts(tight_triangle):
    cert = facial_reduction(tight_triangle).certificate
    a = CliquePart(tight_triangle, cert, (0, 1, 2))
    b = CliquePart(tight_triangle, cert, (1, 2, 3))
    with pytest.raises(InvalidCombine):
        combine_clique_sum(a, b, (0, 1))
    other = SignedCompletionInstance(3, [(0, 1, 'eq', 0.2), (0, 2, 'eq', -0.5), (1, 2, 'eq', -0.5)])
    with pytest.raises(InvalidCombine):
        combine_clique_sum(a, CliquePart(other, cert, (1, 2, 3)), (1, 2))


def test_extend_then_restrict(tight_triangle):
    X = facial_reduction(tight_triangle).max_rank_solution
    inst, Xg = extend_instance(tight_triangle, X, 4, (0, 1, 2), [(2, 3)])
    assert inst.weights[(2, 3, 'eq')] == 0.0
    assert inst.is_feasible_point(Xg.array, tol=1e-6)
    assert numeric_rank(Xg) == 3

    result = facial_reduction(inst)
    assert result.certificate.face_dims == (4, 3)
    sub, cert = restrict_certificate(inst, result.certificate, (0, 1, 2))
    assert sub == tight_triangle
    assert cert.face_dims == (3, 2)
    assert verify_certificate(sub, cert, X=X).passed
    with pytest.raises(InvalidInput):
        restrict_certificate(inst, result.certificate, (0, 1))


def test_extend_rejects_missing_inner_edges():
    path = SignedCompletionInstance(3, [(0, 1, 'eq', 0.5), (1, 2, 'eq', 0.5)])
    X = facial_reduction(path).max_rank_solution
    with pytest.raises(InvalidInput):
        extend_instance(path, X, 4, (0, 1, 2), [(0, 2)])


def test_lift_through_contraction():
    inst = SignedCompletionInstance(3, [(0, 1, 'eq', 1.0), (1, 2, 'eq', 0.5)])
    red = preprocess_degenerate(inst)
    reduced = facial_reduction(red.reduced)
    assert reduced.sd_upper == 0
    lifted = lift_certificate(red, reduced.certificate)
    assert len(lifted.stages) == 1
    assert lifted.face_dims == (3, 2)
    X = uncontract_solution(reduced.max_rank_solution, red)
    assert verify_certificate(inst, lifted, X=X).passed


def test_lift_through_negative_contraction():
    inst = SignedCompletionInstance(3, [(0, 1, 'le', -1.0), (1, 2, 'ge', -0.1), (0, 2, 'eq', 0.0)])
    red = preprocess_degenerate(inst)
    reduced = facial_reduction(red.reduced)
    lifted = lift_certificate(red, reduced.certificate)
    X = uncontract_solution(reduced.max_rank_solution, red)
    assert inst.is_feasible_point(X.array, tol=1e-6)
    report = verify_certificate(inst, lifted, X=X)
    assert report.passed, report.messages
