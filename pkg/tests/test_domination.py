import math

import numpy as np
import pytest

from src.core.errors import PreconditionError
from src.core.linalg import stack_factors
from src.domination.splitting import (
    CandidateSplitting, check_N_domination, finest_blocks, finest_dominated_splitting, invariance_residual,
    invariant_splittings, scan_report, tn_weak,
)

QUARTER_TURN = [[0.0, -1.0], [1.0, 0.0]]


def test_invariant_splittings_of_diagonal():
    scan = invariant_splittings(stack_factors([np.diag([0.25, 0.5, 2.0])]))
    assert scan.indices == [1, 2]
    assert scan.unresolvable == ()


def test_rotation_has_no_candidate():
    scan = invariant_splittings(stack_factors([QUARTER_TURN]))
    assert len(scan) == 0
    assert scan.unresolvable == ()


def test_equal_moduli_are_unresolvable():
    scan = invariant_splittings(stack_factors([np.eye(2)]))
    assert len(scan) == 0
    assert scan.unresolvable == (1,)


@pytest.mark.parametrize("matrix, expected", [
    (np.diag([1.0 / 3.0, 3.0]), [(1, 1)]),
    (np.diag([0.9, 1.0]), [(1, 7)]),
    (np.array(QUARTER_TURN), []),
    (np.array([[2.0, 1.0], [1.0, 1.0]]), [(1, 1)]),
    (np.diag([0.5, 1.0]), [(1, 1)]),
])
def test_finest_dominated_splitting_examples(matrix, expected):
    assert finest_dominated_splitting(stack_factors([matrix]), 10) == expected


def test_three_bundles():
    c = stack_factors([np.diag([0.25, 0.5, 2.0])])
    accepted = finest_dominated_splitting(c, 8)
    assert accepted == [(1, 1), (2, 1)]
    assert finest_blocks(3, accepted).blocks == ((1, 1), (2, 2), (3, 3))


def test_weak_contraction_needs_larger_n():
    c = stack_factors([np.diag([0.9, 1.0])])
    assert finest_dominated_splitting(c, 6) == []
    candidate = invariant_splittings(c).candidates[0]
    report = check_N_domination(c, candidate, 3, 20)
    assert report.smallest_n == 7
    assert not report.dominated
    assert report.status == "dominated from smallestN"
    assert report.worst_ratio[3] == pytest.approx(0.9 ** 3)


def test_domination_report_dict(cat_cocycle):
    candidate = invariant_splittings(cat_cocycle).candidates[0]
    doc = check_N_domination(cat_cocycle, candidate, 1, 5).to_dict()
    assert doc["status"] == "dominated"
    assert doc["smallestN"] == 1
    phi_sq = ((3.0 + math.sqrt(5.0)) / 2.0)
    assert doc["worstRatio"]["1"] == pytest.approx(phi_sq ** -2, rel=1e-9)


def test_non_invariant_splitting_rejected(cat_cocycle):
    e = (np.array([[1.0], [0.0]]),)
    f = (np.array([[0.0], [1.0]]),)
    s = CandidateSplitting(1, e, f)
    assert invariance_residual(cat_cocycle, s) > 0.1
    with pytest.raises(PreconditionError):
        check_N_domination(cat_cocycle, s, 1, 5)


def test_check_rejects_bad_horizon(cat_cocycle):
    candidate = invariant_splittings(cat_cocycle).candidates[0]
    with pytest.raises(PreconditionError):
        check_N_domination(cat_cocycle, candidate, 5, 3)


def test_periodic_cocycle_transport():
    c = stack_factors([np.diag([0.5, 2.0]), QUARTER_TURN, QUARTER_TURN])
    scan = invariant_splittings(c)
    assert scan.indices == [1]
    assert invariance_residual(c, scan.candidates[0]) < 1e-9
    assert finest_dominated_splitting(c, 10) != []


def test_tn_weak():
    long_rotation = stack_factors([QUARTER_TURN] * 10)
    assert tn_weak(long_rotation, 5, 3)
    assert not tn_weak(long_rotation, 11, 3)
    assert not tn_weak(stack_factors([[[2.0, 1.0], [1.0, 1.0]]]), 5, 3)
    with pytest.raises(PreconditionError):
        tn_weak(long_rotation, 0, 3)


def test_scan_report(cat_cocycle):
    doc = scan_report(cat_cocycle, 2)
    assert doc["period"] == 1
    assert doc["dim"] == 2
    assert [r["index"] for r in doc["candidates"]] == [1]
    assert doc["unresolvable"] == []
