"""
验收检查套件

每项检查是一个同步函数，返回 CheckResult；run_suite 在线程池中并发执行，
单项失败（包括领域错误）只影响该项。
"""
import asyncio
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, Optional

import numpy as np

from .. import config
from ..core.errors import GeometricFailureError, HsfError
from ..core.linalg import (
    ExponentSpectrum, SubspaceBasis, lagrangian_to_standard, max_sampled_jacobian,
    random_lagrangian_frame, stack_factors, symplectic_defect, top_k_log_jacobian,
)
from ..domination.splitting import finest_dominated_splitting
from ..estimators.base import SymbolicSampledSystem
from ..estimators.counting import katok_entropy_estimate, tail_entropy_estimate, topological_entropy_estimate
from ..estimators.dimension import box_counting_dimension
from ..exponents.functionals import delta, sigma_k_profile
from ..horseshoe import (
    ConstructionParams, assemble_model, conformal_hausdorff_dimension, derive_scales, inflate_eta,
    model_dimension, verify_markov_crossings,
)
from ..symbolic.shift import TransitionMatrix, sft_entropy
from ..systems.catalog import cantor_horseshoe_cloud

logger = logging.getLogger(__name__)

LOG2 = math.log(2.0)
CAT_RATE = 2.0 * math.log((1.0 + math.sqrt(5.0)) / 2.0)


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    value: float
    expected: float
    tolerance: float

    @classmethod
    def near(cls, value: float, expected: float, tolerance: float) -> "CheckResult":
        return cls(abs(value - expected) <= tolerance, value, expected, tolerance)

    def to_dict(self) -> dict:
        return {"ok": bool(self.ok), "value": self.value, "expected": self.expected, "tolerance": self.tolerance}


def reference_params(ell: int = 100) -> ConstructionParams:
    """d0=2, k=1, λ=±1, μ=1, η=0.1, n=5, m=2, C=1, ρ=1"""
    return ConstructionParams(d0=2, k=1, lam=(-1.0, 1.0), mu=(1.0, 1.0), eta=0.1, rho=1.0,
                              n=5, ell=ell, m=2, c_bound=1.0)


def check_horseshoe_entropy(seed: int) -> CheckResult:
    return CheckResult.near(derive_scales(reference_params(100)).gap, 0.0, 0.07)


def check_horseshoe_entropy_long(seed: int) -> CheckResult:
    return CheckResult.near(derive_scales(reference_params(1000)).gap, 0.0, 0.015)


def check_markov_all_ones(seed: int) -> CheckResult:
    p = reference_params(100)
    s = derive_scales(p).capped(64)
    result = verify_markov_crossings(assemble_model(p, s), seed=seed)
    return CheckResult.near(sft_entropy(result.transition_matrix()), math.log(64.0), 1e-9)


def check_markov_inflated(seed: int) -> CheckResult:
    """η 放大 100 倍（L 按放大后的上界取）或 L 系数放大 100 倍后都必须在几何验证中失败"""
    p = reference_params(100)
    inflated = {
        "eta": inflate_eta(derive_scales(p), 100.0),
        "l_factor": derive_scales(p, l_factor=100.0 * config.L_FACTOR),
    }
    worst = -math.inf
    for name, s in inflated.items():
        try:
            verify_markov_crossings(assemble_model(p, s), seed=seed)
        except GeometricFailureError as e:
            worst = max(worst, float(e.log_margin))
            continue
        logger.warning(f"{name} 放大 100 倍后几何验证仍然通过")
        return CheckResult(False, 0.0, 0.0, 0.0)
    return CheckResult(True, worst, 0.0, 0.0)


def check_conservative(seed: int) -> CheckResult:
    p = reference_params(100)
    return CheckResult.near(assemble_model(p).volume_defect(), 0.0, 1e-9)


def check_delta_functional(seed: int) -> CheckResult:
    report = delta(ExponentSpectrum.of([-1.0, 2.0]))
    error = abs(report.delta_plus - 2.0) + abs(report.delta_minus - 1.0) + abs(report.delta - 1.0)
    return CheckResult(error == 0.0, error, 0.0, 0.0)


def check_grassmann_sup(seed: int) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(10):
        m = rng.standard_normal((3, 3))
        exact = math.exp(top_k_log_jacobian(m, 1))
        worst = max(worst, (exact - max_sampled_jacobian(m, 1, seed=seed + i)) / exact)
    return CheckResult.near(worst, 0.0, 1e-3)


def check_submultiplicative(seed: int) -> CheckResult:
    c = stack_factors([[[2.0, 1.0], [1.0, 1.0]]])
    values = sigma_k_profile(c, 1, 60).values
    a = {n: values[n - 1] for n in range(1, 61)}
    ok = all(a[m + n] <= a[m] + a[n] + 1e-9 for m in range(1, 31) for n in range(1, 31))
    result = CheckResult.near(a[30] / 30.0, CAT_RATE, 1e-4)
    return CheckResult(ok and result.ok, result.value, result.expected, result.tolerance)


def check_domination_verdicts(seed: int) -> CheckResult:
    strong = finest_dominated_splitting(stack_factors([np.diag([1.0 / 3.0, 3.0])]), 10)
    weak = finest_dominated_splitting(stack_factors([np.diag([0.9, 1.0])]), 10)
    rotation = finest_dominated_splitting(stack_factors([[[0.0, -1.0], [1.0, 0.0]]]), 10)
    ok = strong == [(1, 1)] and weak == [(1, 7)] and rotation == []
    return CheckResult(ok, float(weak[0][1]) if weak else math.nan, 7.0, 0.0)


def check_full_shift_entropy(seed: int) -> CheckResult:
    sys = SymbolicSampledSystem(TransitionMatrix.full(2))
    return CheckResult.near(topological_entropy_estimate(sys, [0.25], 14, seed=seed).value, LOG2, 0.03)


def check_golden_mean_entropy(seed: int) -> CheckResult:
    sys = SymbolicSampledSystem(TransitionMatrix.from_list([[1, 1], [1, 0]]))
    golden = math.log((1.0 + math.sqrt(5.0)) / 2.0)
    return CheckResult.near(topological_entropy_estimate(sys, [0.25], 14, seed=seed).value, golden, 0.03)


def check_tail_expansive(seed: int) -> CheckResult:
    sys = SymbolicSampledSystem(TransitionMatrix.full(2))
    table = tail_entropy_estimate(sys, [0.25], [0.125], 10, seed=seed)
    return CheckResult(table.h_star <= 0.03, table.h_star, 0.0, 0.03)


def check_tail_coarse(seed: int) -> CheckResult:
    sys = SymbolicSampledSystem(TransitionMatrix.full(2))
    table = tail_entropy_estimate(sys, [2.0], [0.125], 10, seed=seed)
    return CheckResult.near(table.h_star, LOG2, 0.05)


def check_katok_fair_coin(seed: int) -> CheckResult:
    sys = SymbolicSampledSystem(TransitionMatrix.full(2))
    words = sys.bernoulli_samples([0.5, 0.5], 100000, sys.cover_window(10, 0.5), seed)
    return CheckResult.near(katok_entropy_estimate(sys, words, 0.5, 10).value, LOG2, 0.07)


def check_dimension_formula(seed: int) -> CheckResult:
    value = conformal_hausdorff_dimension(LOG2, -math.log(3.0), math.log(3.0))
    return CheckResult.near(value, 1.26186, 1e-5)


def check_box_counting(seed: int) -> CheckResult:
    formula = conformal_hausdorff_dimension(LOG2, -math.log(3.0), math.log(3.0))
    result = box_counting_dimension(cantor_horseshoe_cloud(), [3.0 ** -i for i in range(1, 7)], origin=(0.0, 0.0))
    return CheckResult.near(result.value, formula, 0.08)


def check_unstable_dimension(seed: int) -> CheckResult:
    """d^u 随 ℓ 单调增且趋于 d0−k = 1: 1 − d^u ≤ (m+2n+|log(η/16)|)/(ℓ+m+2n)"""
    values = []
    excess = -math.inf
    for ell in (10 ** 3, 10 ** 4, 10 ** 5):
        p = reference_params(ell)
        value = model_dimension(p, derive_scales(p)).unstable
        bound = (p.m + 2 * p.n + abs(math.log(p.eta / 16.0))) / p.return_time
        excess = max(excess, (1.0 - value) - bound)
        values.append(value)
    monotone = all(b > a for a, b in zip(values, values[1:]))
    passed = monotone and excess <= 0.0 and values[-1] <= 1.0
    return CheckResult(passed, values[-1], 1.0, 1e-4)


def check_lagrangian(seed: int) -> CheckResult:
    worst = 0.0
    for d in (1, 2, 3):
        for i in range(100):
            frame = random_lagrangian_frame(d, seed + 1000 * d + i)
            a = lagrangian_to_standard(SubspaceBasis(frame)).matrix
            image = a @ frame
            residual = float(np.linalg.norm(image[d:], 2) / np.linalg.norm(image, 2))
            worst = max(worst, symplectic_defect(a), residual)
    return CheckResult.near(worst, 0.0, config.SYMPLECTIC_TOL)


CHECKS: Dict[str, Callable[[int], CheckResult]] = {
    "horseshoe-entropy": check_horseshoe_entropy,
    "horseshoe-entropy-long": check_horseshoe_entropy_long,
    "markov-all-ones": check_markov_all_ones,
    "markov-inflated": check_markov_inflated,
    "conservative-pieces": check_conservative,
    "delta-functional": check_delta_functional,
    "grassmann-sup": check_grassmann_sup,
    "submultiplicative": check_submultiplicative,
    "domination-verdicts": check_domination_verdicts,
    "entropy-full-shift": check_full_shift_entropy,
    "entropy-golden-mean": check_golden_mean_entropy,
    "tail-expansive": check_tail_expansive,
    "tail-coarse": check_tail_coarse,
    "katok-fair-coin": check_katok_fair_coin,
    "dimension-formula": check_dimension_formula,
    "box-counting": check_box_counting,
    "unstable-dimension": check_unstable_dimension,
    "lagrangian-normalizer": check_lagrangian,
}


def _guarded(name: str, check: Callable[[int], CheckResult], seed: int) -> dict:
    try:
        result = check(seed).to_dict()
    except HsfError as e:
        logger.error(f"检查 {name} 出错: {e}")
        return {"ok": False, "value": None, "expected": None, "tolerance": None, "error": str(e)}
    level = logging.INFO if result["ok"] else logging.WARNING
    logger.log(level, f"检查 {name}: {'通过' if result['ok'] else '未通过'} (值 {result['value']})")
    return result


async def run_suite(seed: int, checks: Optional[Dict[str, Callable[[int], CheckResult]]] = None,
                    max_workers: Optional[int] = None) -> Dict[str, dict]:
    """并发运行检查，结果按检查名排序"""
    checks = checks or CHECKS
    loop = asyncio.get_running_loop()
    with ThreadPoolExecutor(max_workers=max_workers or config.HSF_THREADS) as executor:
        tasks = [loop.run_in_executor(executor, _guarded, name, check, seed) for name, check in checks.items()]
        results = await asyncio.gather(*tasks)
    summary = dict(sorted(zip(checks, results)))
    passed = sum(1 for r in summary.values() if r["ok"])
    logger.info(f"验收检查 {passed}/{len(summary)} 通过")
    return summary
