import math

import numpy as np
import pytest

from src.core.errors import (
    GeometricFailureError, HsfError, NumericalError, PreconditionError, RangeError, SchemaError,
)
from src.core.linalg import (
    PeriodicCocycle, SubspaceBasis, cocycle_product, grassmann_jacobian, lagrangian_to_standard,
    log_cocycle_product, lyapunov_exponents_periodic, max_sampled_jacobian, random_lagrangian_frame,
    stack_factors, symplectic_defect, symplectic_form, top_k_log_jacobian,
)

CAT_EXPONENT = math.log((3.0 + math.sqrt(5.0)) / 2.0)


def rot(theta):
    return np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])


def test_exit_codes():
    assert PreconditionError.exit_code == 2
    assert SchemaError("x", "f").exit_code == 2
    assert NumericalError.exit_code == 3
    assert RangeError.exit_code == 3
    assert GeometricFailureError("ineq", -1.0).exit_code == 4
    assert issubclass(PreconditionError, HsfError)


def test_schema_error_names_field():
    err = SchemaError("缺少字段", "factors")
    assert err.field == "factors"
    assert "factors" in str(err)


def test_cocycle_product_examples():
    assert np.allclose(cocycle_product(stack_factors([np.eye(2)]), 7), np.eye(2))
    assert np.allclose(cocycle_product(stack_factors([np.diag([2.0, 0.5])]), 3), np.diag([8.0, 0.125]))
    c = stack_factors([np.diag([2.0, 0.5]), rot(math.pi / 2)])
    assert np.allclose(cocycle_product(c, 2), [[0.0, -0.5], [2.0, 0.0]])


def test_cocycle_product_overflow_is_range_error(cat_cocycle):
    with pytest.raises(RangeError):
        cocycle_product(cat_cocycle, 1000)


def test_log_cocycle_product_growth(cat_cocycle):
    m, log_scale = log_cocycle_product(cat_cocycle, 1000)
    assert np.linalg.norm(m, 2) == pytest.approx(1.0)
    assert log_scale / 1000 == pytest.approx(CAT_EXPONENT, rel=1e-9)


def test_singular_factor_rejected():
    with pytest.raises(PreconditionError):
        stack_factors([[[1.0, 2.0], [2.0, 4.0]]])


def test_cocycle_from_dict_round_trip(cat_cocycle):
    doc = {"dim": 2, "period": 1, "factors": [[2, 1, 1, 1]]}
    c = PeriodicCocycle.from_dict(doc)
    assert np.array_equal(c.factors[0], cat_cocycle.factors[0])
    with pytest.raises(SchemaError) as info:
        PeriodicCocycle.from_dict({"dim": 2, "factors": []})
    assert info.value.field == "period"
    with pytest.raises(SchemaError):
        PeriodicCocycle.from_dict({"dim": 2, "period": 2, "factors": [[1, 0, 0, 1]]})


def test_lyapunov_examples(cat_cocycle):
    spec = lyapunov_exponents_periodic(cat_cocycle)
    assert spec.exponents == pytest.approx((-CAT_EXPONENT, CAT_EXPONENT), abs=1e-12)
    assert lyapunov_exponents_periodic(stack_factors([rot(math.pi / 3)])).exponents == pytest.approx((0.0, 0.0),
                                                                                                     abs=1e-12)
    c = stack_factors([np.diag([4.0, 0.25]), np.diag([0.5, 2.0])])
    half_log2 = 0.5 * math.log(2.0)
    assert lyapunov_exponents_periodic(c).exponents == pytest.approx((-half_log2, half_log2), abs=1e-12)


def test_lyapunov_long_period_stays_finite():
    c = stack_factors([np.diag([3.0, 1.0 / 3.0])] * 2000)
    assert lyapunov_exponents_periodic(c).exponents == pytest.approx((-math.log(3.0), math.log(3.0)), rel=1e-9)


def _with_tail(block, tail):
    m = np.zeros((3, 3))
    m[:2, :2] = block
    m[2, 2] = tail
    return m


def test_lyapunov_rotation_block_with_wide_spread():
    c = stack_factors([_with_tail(2.0 * rot(0.7), 0.25)] * 400)
    expected = (-math.log(4.0), math.log(2.0), math.log(2.0))
    assert lyapunov_exponents_periodic(c).exponents == pytest.approx(expected, rel=1e-9)


def test_lyapunov_complex_pair_averaged_across_sweeps():
    c = stack_factors([_with_tail(np.array([[0.0, -2.0], [1.0, 0.0]]), 1e-9)] * 3)
    half_log2 = 0.5 * math.log(2.0)
    assert lyapunov_exponents_periodic(c).exponents == pytest.approx((math.log(1e-9), half_log2, half_log2),
                                                                     rel=1e-9)


def test_grassmann_jacobian_examples():
    assert grassmann_jacobian(np.eye(3), SubspaceBasis(np.eye(3)[:, :2])) == pytest.approx(1.0)
    assert grassmann_jacobian(np.diag([2.0, 3.0]), SubspaceBasis(np.array([1.0, 0.0]))) == pytest.approx(2.0)
    with pytest.raises(PreconditionError):
        SubspaceBasis(np.array([[1.0, 2.0], [2.0, 4.0], [0.0, 0.0]]))


def test_top_k_examples(rng):
    m = np.diag([3.0, 2.0, 1.0])
    assert top_k_log_jacobian(m, 0) == 0.0
    assert top_k_log_jacobian(m, 2) == pytest.approx(math.log(6.0))
    basis = SubspaceBasis(rng.standard_normal((3, 2)))
    assert grassmann_jacobian(m, basis) <= 6.0 + 1e-12


@pytest.mark.parametrize("k", [1, 2])
def test_sampled_sup_matches_top_k_3x3(rng, k):
    for i in range(5):
        m = rng.standard_normal((3, 3))
        exact = math.exp(top_k_log_jacobian(m, k))
        sampled = max_sampled_jacobian(m, k, samples=10 ** 4, seed=i)
        assert sampled <= exact * (1.0 + 1e-12)
        assert (exact - sampled) / exact < 1e-3


def test_sampled_sup_matches_top_k_4x4(rng):
    for i in range(5):
        m = rng.standard_normal((4, 4))
        exact = math.exp(top_k_log_jacobian(m, 1))
        assert (exact - max_sampled_jacobian(m, 1, samples=10 ** 4, seed=i)) / exact < 5e-2


def test_unit_determinant_extremes(rng):
    m = rng.standard_normal((4, 4))
    m /= abs(np.linalg.det(m)) ** 0.25
    assert top_k_log_jacobian(m, 0) == 0.0
    assert abs(top_k_log_jacobian(m, 4)) < 1e-9


def test_sigma_duality_identity(rng):
    for _ in range(20):
        m = rng.standard_normal((4, 4))
        for k in range(5):
            lhs = top_k_log_jacobian(m, k) - top_k_log_jacobian(np.linalg.inv(m), 4 - k)
            assert lhs == pytest.approx(math.log(abs(np.linalg.det(m))), abs=1e-9)


def test_symplectic_defect_examples():
    assert symplectic_defect(np.eye(2)) == pytest.approx(0.0)
    assert symplectic_defect(np.diag([2.0, 0.5])) == pytest.approx(0.0)
    assert symplectic_defect(np.diag([2.0, 2.0])) == pytest.approx(3.0)
    with pytest.raises(PreconditionError):
        symplectic_defect(np.eye(3))


def test_lagrangian_standard_subspace_is_identity():
    result = lagrangian_to_standard(SubspaceBasis(np.eye(4)[:, :2]))
    assert np.allclose(result.matrix, np.eye(4))
    assert result.norm == pytest.approx(1.0)


def test_lagrangian_line_in_plane():
    theta = 0.7
    result = lagrangian_to_standard(SubspaceBasis(np.array([math.cos(theta), math.sin(theta)])))
    assert np.allclose(result.matrix, rot(-theta))


def test_lagrangian_vertical_subspace():
    result = lagrangian_to_standard(SubspaceBasis(np.eye(4)[:, 2:]))
    image = result.matrix @ np.eye(4)[:, 2:]
    assert np.allclose(image[2:], 0.0, atol=1e-12)
    assert symplectic_defect(result.matrix) < 1e-8


@pytest.mark.parametrize("d", [1, 2, 3])
def test_lagrangian_random_frames(d):
    for seed in range(50):
        frame = random_lagrangian_frame(d, seed)
        result = lagrangian_to_standard(SubspaceBasis(frame))
        image = result.matrix @ frame
        assert symplectic_defect(result.matrix) < 1e-8
        assert np.linalg.norm(image[d:], 2) < 1e-8 * np.linalg.norm(image, 2)
        assert result.norm == pytest.approx(1.0)
        assert result.inverse_norm == pytest.approx(1.0)


def test_non_lagrangian_rejected():
    basis = np.eye(4)[:, [0, 2]]
    assert abs((basis.T @ symplectic_form(2) @ basis)[0, 1]) == 1.0
    with pytest.raises(PreconditionError) as info:
        lagrangian_to_standard(SubspaceBasis(basis))
    assert "ω" in str(info.value)
