import math
from dataclasses import replace

import numpy as np
import pytest

from src import config
from src.core.errors import (
    ConstructionInfeasibleError, GeometricFailureError, OutOfChartError, PreconditionError, RangeError, SchemaError,
)
from src.core.linalg import ExponentSpectrum, cyclic_shift_matrix
from src.horseshoe import (
    ConstructionParams, assemble_model, build_rectangles, coherence_residual, conformal_hausdorff_dimension,
    derive_scales, inflate_eta, iterate_containment, model_dimension, model_entropy, oscillation_profile,
    preparation_targets, prepare_params, verify_markov_crossings,
)
from src.symbolic.shift import sft_entropy

SAMPLE_POINTS = [
    (0.3, 500.0 / 1017.0),
    (-0.8, 0.1),
    (0.05, -0.37),
    (0.9, 0.999),
    (-0.2, 0.25),
    (0.0, 0.0),
]


def _params(**overrides):
    base = dict(d0=2, k=1, lam=(-1.0, 1.0), mu=(1.0, 1.0), eta=0.1, rho=1.0, n=2, ell=8, m=2, c_bound=1.0)
    base.update(overrides)
    return ConstructionParams(**base)


def test_params_validation():
    with pytest.raises(PreconditionError):
        _params(k=0)
    with pytest.raises(PreconditionError):
        _params(eta=1.0)
    with pytest.raises(PreconditionError):
        _params(mu=(2.0, 1.0))
    with pytest.raises(PreconditionError):
        _params(lam=(1.0, -1.0))
    with pytest.raises(PreconditionError):
        _params(d0=3, lam=(-1.0, 1.0, 2.0), mu=(1.0, 1.0, 1.0))


def test_params_from_dict_aliases(small_params):
    doc = {"d0": 2, "k": 1, "lambda": [-1, 1], "mu": [1, 1], "eta": 0.1, "rho": 1,
           "n": 2, "ell": 8, "m": 2, "C": 1}
    assert ConstructionParams.from_dict(doc) == small_params
    missing = dict(doc)
    del missing["eta"]
    with pytest.raises(SchemaError) as info:
        ConstructionParams.from_dict(missing)
    assert info.value.field == "eta"
    with pytest.raises(SchemaError):
        ConstructionParams.from_dict({**doc, "sigma": 1})


def test_small_scales(small_params):
    s = derive_scales(small_params)
    assert s.log_lambda_cap == pytest.approx((-8.0, 8.0))
    assert s.log_delta == pytest.approx(0.0)
    assert s.log_delta_sides == pytest.approx((0.0, -8.0))
    assert s.log_bound == pytest.approx(math.log(0.0125) + 12.0)
    assert s.L == 1017
    assert s.return_time == 14
    assert s.entropy == pytest.approx(math.log(1017) / 14)
    entropy = model_entropy(s)
    assert entropy.entropy == pytest.approx(s.entropy)
    assert entropy.gap == pytest.approx(1.0 - math.log(1017) / 14)
    assert entropy.to_dict()["gap"] == pytest.approx(s.gap)


def test_reference_entropy_gap(p100_params):
    s = derive_scales(p100_params)
    assert s.return_time == 112
    assert s.delta_target == 1.0
    assert 0.0 < s.gap <= 0.07
    assert isinstance(s.to_dict()["L"], str)


def test_long_return_entropy_gap(p100_params):
    s = derive_scales(replace(p100_params, ell=1000))
    assert s.L.bit_length() > 1400
    assert 0.0 < s.gap <= 0.015


def test_l_factor_scales_L(small_params):
    assert derive_scales(small_params, l_factor=1.0).L == 2034
    with pytest.raises(PreconditionError):
        derive_scales(small_params, l_factor=0.0)


def test_too_short_construction_is_infeasible():
    with pytest.raises(ConstructionInfeasibleError) as info:
        derive_scales(_params(n=1, ell=1))
    assert info.value.magnitude == "L"
    assert info.value.log_margin < 0.0


def test_side_larger_than_delta_is_infeasible():
    p = ConstructionParams(d0=3, k=2, lam=(-1.0, -1.0, 2.0), mu=(1e6, 1e-6, 1.0), eta=0.1, rho=1.0,
                           n=1, ell=1, m=1, c_bound=1e6)
    with pytest.raises(ConstructionInfeasibleError) as info:
        derive_scales(p)
    assert info.value.magnitude == "delta_2"


def test_capped_scales(small_params):
    s = derive_scales(small_params)
    capped = s.capped(64)
    assert capped.L == 64
    assert capped.entropy == pytest.approx(math.log(64) / 14)
    assert s.capped(10 ** 6) is s
    assert s.capped(None) is s


def test_inflated_eta_breaks_disjointness(p100_params):
    s = derive_scales(p100_params)
    inflated = inflate_eta(s, 100.0)
    assert inflated.log_L == pytest.approx(s.log_L + math.log(100.0), abs=1e-6)
    assert inflated.log_bound == s.log_bound
    with pytest.raises(GeometricFailureError) as info:
        verify_markov_crossings(assemble_model(p100_params, inflated))
    assert "两两不交" in info.value.inequality
    assert info.value.log_margin < 0.0


def test_coherence_residual_vanishes():
    p = ConstructionParams(d0=4, k=2, lam=(-1.0, -1.0, 1.0, 1.0), mu=(1.0,) * 4, eta=0.1, rho=1.0,
                           n=5, ell=100, m=2, c_bound=1.0)
    s = derive_scales(p)
    assert s.log_delta_sides == pytest.approx((0.0, -110.0, -210.0, -100.0))
    assert coherence_residual(s, 2) < 1e-9


def test_preparation_targets():
    targets = preparation_targets(ExponentSpectrum.of([-3.0, -1.0, 2.0]), 2)
    assert targets.stable_factor == pytest.approx(math.exp(-2.0))
    assert targets.unstable_factor == pytest.approx(math.exp(2.0))
    assert np.array_equal(targets.permutation, cyclic_shift_matrix(3))
    with pytest.raises(PreconditionError):
        preparation_targets(ExponentSpectrum.of([0.0, 1.0]), 1)


def test_prepare_params_is_homothetic():
    p = prepare_params(ExponentSpectrum.of([-3.0, -1.0, 4.0]), 2, eta=0.1, rho=1.0, n=5, ell=100, m=2)
    assert p.lam == pytest.approx((-2.0, -2.0, 4.0))
    assert p.conservative


def test_oscillation_profile_values():
    phi = oscillation_profile(10)
    assert float(phi(3.2)) == pytest.approx(0.2)
    assert float(phi(-0.7)) == 0.0
    assert float(phi(9.6)) == 0.0
    assert float(phi(2.5)) == pytest.approx(0.0, abs=1e-15)
    assert int(phi.branch_index(3.2)) == 3
    assert int(phi.branch_index(3.4)) == -1
    assert int(phi.branch_index(-0.1)) == 0
    with pytest.raises(PreconditionError):
        oscillation_profile(1)


def test_oscillation_profile_bounds():
    phi = oscillation_profile(5)
    xs = np.linspace(-1.0, 5.0, 240001)
    assert np.abs(phi(xs)).max() <= phi.sup_norm + 1e-12
    assert np.abs(phi.derivative(xs)).max() <= phi.derivative_bound + 1e-12
    assert phi.sup_norm == pytest.approx(64.0 / 243.0)


def test_oscillation_derivative_matches_difference_quotient():
    phi = oscillation_profile(5)
    xs = np.linspace(0.01, 3.99, 397)
    h = 1e-6
    numeric = (phi(xs + h) - phi(xs - h)) / (2.0 * h)
    assert np.allclose(numeric, phi.derivative(xs), atol=1e-4)


def test_step_through_matches_return_map(small_params):
    model = assemble_model(small_params)
    for u in SAMPLE_POINTS:
        u = np.array(u)
        stepped = model.to_normalized(model.step_through(model.to_physical(u)))
        assert np.allclose(stepped, model.return_map(u), rtol=1e-9, atol=1e-7)


HIGHER_DIM_CASES = {
    "d3k1": dict(d0=3, k=1, lam=(-2.0, 1.0, 1.0), mu=(1.0, 1.0, 1.0), n=1, ell=4),
    "d3k2": dict(d0=3, k=2, lam=(-1.0, -1.0, 2.0), mu=(1.0, 1.0, 1.0), n=1, ell=4, c_bound=3.0),
    "d4k1": dict(d0=4, k=1, lam=(-3.0, 1.0, 1.0, 1.0), mu=(1.0,) * 4, n=1, ell=2),
    "d4k2": dict(d0=4, k=2, lam=(-1.0, -1.0, 1.0, 1.0), mu=(1.0,) * 4, n=1, ell=4),
}


@pytest.mark.parametrize("case", sorted(HIGHER_DIM_CASES))
def test_step_through_matches_return_map_higher_dim(case):
    p = _params(**HIGHER_DIM_CASES[case])
    model = assemble_model(p)
    assert model.L == 1017
    on_slice = np.full(p.d0, 0.3)
    on_slice[-1] = 500.0 / 1017.0
    points = list(np.random.default_rng(7).uniform(-0.99, 0.99, size=(6, p.d0))) + [on_slice]
    for u in points:
        stepped = model.to_normalized(model.step_through(model.to_physical(u)))
        assert np.allclose(stepped, model.return_map(u), rtol=1e-9, atol=1e-6)
    j, back = model.branch_map.inverse(model.return_map(on_slice))
    assert j == 500
    assert np.allclose(back, on_slice, atol=1e-9)


def test_branch_window_is_affine(small_params):
    model = assemble_model(small_params)
    bm = model.branch_map
    c1, ck = math.exp(bm.log_coef[0]), math.exp(bm.log_coef[1])
    assert c1 * ck == pytest.approx(1.0)
    u = np.array([0.3, 500.0 / 1017.0])
    z = model.return_map(u)
    j, back = bm.inverse(z)
    assert j == 500
    assert np.allclose(back, u, atol=1e-9)
    sides = np.exp(np.array(model.scales.log_delta_sides))
    jac = model.step_jacobian(model.to_physical(u)) * sides[None, :] / sides[:, None]
    assert jac[0, 0] == pytest.approx(c1, rel=1e-6)
    assert jac[1, 1] == pytest.approx(-ck, rel=1e-6)
    assert abs(jac[0, 1]) < 1e-6
    assert abs(jac[1, 0]) < 1e-6


def test_inverse_outside_branches(small_params):
    bm = assemble_model(small_params).branch_map
    with pytest.raises(OutOfChartError):
        bm.inverse(np.array([2.0, 0.0]))


def test_return_map_rejects_points_outside_chart(small_params):
    model = assemble_model(small_params)
    with pytest.raises(OutOfChartError):
        model.return_map([1.5, 0.0])
    with pytest.raises(PreconditionError):
        model.return_map([0.0, 0.0, 0.0])


def test_switch_off_keeps_linear_part(small_params):
    model = assemble_model(small_params, switch_off=True)
    for u in SAMPLE_POINTS:
        u = np.array(u)
        assert np.allclose(model.return_map(u), u[::-1])
        stepped = model.to_normalized(model.step_through(model.to_physical(u)))
        assert np.allclose(stepped, u[::-1], atol=1e-12)
    with pytest.raises(GeometricFailureError):
        verify_markov_crossings(model)


def test_conservative_pieces(p100_params, small_params):
    assert p100_params.conservative
    assert assemble_model(p100_params).volume_defect() < 1e-9
    dissipative = _params(lam=(-1.0, 2.0))
    assert not dissipative.conservative
    assert assemble_model(dissipative).volume_defect() == pytest.approx(8.0)


def test_negative_mu_is_rejected():
    with pytest.raises(PreconditionError):
        assemble_model(_params(mu=(-1.0, 1.0)))


def test_markov_exhaustive_small(small_params):
    model = assemble_model(small_params)
    result = verify_markov_crossings(model)
    assert result.L == 1017
    assert result.exhaustive
    assert result.rows_checked == 1017
    assert result.matrix.shape == (1017, 1017)
    assert result.matrix.min() == 1
    assert result.row_margin > 0.0
    assert result.column_margin > 0.0
    assert result.window_margin == pytest.approx(math.log(0.125) - math.log(1017) - model.branch_map.log_coef[0])
    assert result.window_margin > 0.0
    assert result.to_dict()["verification"] == "exhaustive"
    assert result.to_dict()["allOnes"] is True


@pytest.mark.parametrize("case", sorted(HIGHER_DIM_CASES))
def test_markov_exhaustive_higher_dim(case):
    result = verify_markov_crossings(assemble_model(_params(**HIGHER_DIM_CASES[case])))
    assert result.exhaustive
    assert result.rows_checked == 1017
    assert result.matrix.shape == (1017, 1017)
    assert result.matrix.min() == 1
    assert result.row_margin > -config.CONTAINMENT_SLACK
    assert result.column_margin > 0.0
    assert result.window_margin == pytest.approx(math.log(2.0), abs=1e-3)


@pytest.mark.parametrize("l_factor", [1.5, 2.0, 3.0])
def test_markov_rejects_slices_outside_identity_window(small_params, l_factor):
    model = assemble_model(small_params, derive_scales(small_params, l_factor=l_factor))
    c1 = math.exp(model.branch_map.log_coef[0])
    # 像仍两两不交，只有窗口条件失败
    assert model.L * c1 < 0.5
    with pytest.raises(GeometricFailureError) as info:
        verify_markov_crossings(model)
    assert "恒等窗口" in info.value.inequality
    assert info.value.log_margin == pytest.approx(math.log(0.125 / (model.L * c1)), rel=1e-9)


def test_markov_window_rejects_dissipative_doubling():
    p = _params(lam=(-1.0, 1.5))
    model = assemble_model(p, derive_scales(p, l_factor=2.0))
    assert model.L == 4068
    with pytest.raises(GeometricFailureError) as info:
        verify_markov_crossings(model)
    assert "恒等窗口" in info.value.inequality
    assert info.value.log_margin < 0.0


def test_markov_capped_entropy(small_params):
    s = derive_scales(small_params).capped(2)
    result = verify_markov_crossings(assemble_model(small_params, s))
    assert result.matrix.tolist() == [[1, 1], [1, 1]]
    assert sft_entropy(result.transition_matrix()) == pytest.approx(math.log(2.0))


def test_markov_reference_capped(p100_params):
    s = derive_scales(p100_params).capped(64)
    result = verify_markov_crossings(assemble_model(p100_params, s), seed=1)
    assert sft_entropy(result.transition_matrix()) == pytest.approx(math.log(64.0), abs=1e-9)


def test_markov_sampled_for_huge_L(p100_params):
    result = verify_markov_crossings(assemble_model(p100_params), seed=3)
    assert not result.exhaustive
    assert result.rows_checked <= config.MARKOV_SAMPLED_ROWS + 2
    assert result.matrix is None
    with pytest.raises(RangeError):
        result.transition_matrix()


def test_markov_fails_when_L_inflated(small_params, p100_params):
    with pytest.raises(GeometricFailureError) as info:
        verify_markov_crossings(assemble_model(small_params, derive_scales(small_params, l_factor=50.0)))
    assert info.value.log_margin < 0.0
    inflated = derive_scales(p100_params, l_factor=100.0 * config.L_FACTOR)
    with pytest.raises(GeometricFailureError):
        verify_markov_crossings(assemble_model(p100_params, inflated))


def test_rectangle_slices(small_params):
    family = build_rectangles(assemble_model(small_params))
    box = family.stable_slice(10)
    assert box.center[-1] == pytest.approx(10 / 1017)
    assert math.exp(box.log_half[-1]) == pytest.approx(1.0 / (8 * 1017))
    image = family.unstable_slice(10)
    assert image.center[0] == pytest.approx(10 / 1017)


def test_iterate_containment(small_params):
    report = iterate_containment(small_params, derive_scales(small_params))
    assert report.ok
    assert report.worst_margin == pytest.approx(0.0, abs=1e-12)
    assert report.violation is None


def test_conformal_dimension_formula():
    value = conformal_hausdorff_dimension(math.log(2.0), -math.log(3.0), math.log(3.0))
    assert value == pytest.approx(1.26186, abs=1e-5)
    with pytest.raises(PreconditionError):
        conformal_hausdorff_dimension(1.0, 0.5, 1.0)


def test_model_dimension(p100_params):
    s = derive_scales(p100_params)
    dims = model_dimension(p100_params, s)
    assert dims.unstable == pytest.approx(s.entropy)
    assert dims.total == pytest.approx(2.0 * s.entropy)
    long_params = replace(p100_params, ell=10000)
    assert model_dimension(long_params, derive_scales(long_params)).unstable >= 0.999
