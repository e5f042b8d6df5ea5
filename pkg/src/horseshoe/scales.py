"""
派生尺度

Λ_i、δ、δ_i、L 与熵，全部在对数域中计算。下标从0计:
稳定坐标 0..k−1，不稳定坐标 k..d0−1。
"""
import logging
import math
from dataclasses import dataclass, replace
from decimal import Decimal, localcontext
from typing import Optional, Tuple

from .. import config
from ..core.errors import ConstructionInfeasibleError, PreconditionError
from ..exponents.functionals import delta
from .params import ConstructionParams

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DerivedScales:
    log_lambda_cap: Tuple[float, ...]  # log|Λ_i|
    log_delta: float  # log δ
    log_delta_sides: Tuple[float, ...]  # log δ_i
    log_bound: float  # L 上界的对数
    L: int
    log_L: float
    return_time: int
    entropy: float
    delta_target: float  # λ 谱的 Δ

    @property
    def gap(self) -> float:
        """Δ − 熵"""
        return self.delta_target - self.entropy

    def capped(self, limit: Optional[int]) -> "DerivedScales":
        """L 截断为 min(L, limit)，limit 为 None 时不截断；更小的 L 仍满足严格上界"""
        if limit is None:
            return self
        L = min(self.L, int(limit))
        if L == self.L:
            return self
        log_L = math.log(L)
        return replace(self, L=L, log_L=log_L, entropy=log_L / self.return_time)

    def to_dict(self) -> dict:
        return {
            "logLambdaCap": list(self.log_lambda_cap),
            "logDelta": self.log_delta,
            "logDeltaSides": list(self.log_delta_sides),
            "logBound": self.log_bound,
            "L": str(self.L) if self.L.bit_length() > 53 else self.L,
            "logL": self.log_L,
            "returnTime": self.return_time,
            "entropy": self.entropy,
            "delta": self.delta_target,
            "gap": self.gap,
        }


def _floor_exp(x: float) -> int:
    """floor(e^x)，大指数时用十进制高精度"""
    if x < 700.0:
        return int(math.floor(math.exp(x)))
    with localcontext() as ctx:
        ctx.prec = int(x / math.log(10)) + 30
        return int(Decimal(x).exp())


def derive_scales(p: ConstructionParams, l_factor: Optional[float] = None) -> DerivedScales:
    """由构造参数推出尺度

    Λ_i = μ_i e^{(ℓ+n)λ_i + nλ_{i+1}}（下标模 d0），δ = C⁻¹e^{(λ_1+λ_{d0})n}ρ，
    稳定侧 δ_i = Λ_1⋯Λ_{i−1}δ，不稳定侧 δ_i = (Λ_i⋯Λ_{d0})⁻¹δ，
    L = floor(l_factor · bound)。

    Args:
        p: 构造参数
        l_factor: L 相对上界的常数因子（缺省 1/2）

    Returns:
        DerivedScales

    Raises:
        ConstructionInfeasibleError: L < 2 或某个 δ_i > δ
    """
    l_factor = config.L_FACTOR if l_factor is None else l_factor
    if l_factor <= 0.0:
        raise PreconditionError(f"l_factor 必须为正: {l_factor}")
    d0, k, lam, n, ell = p.d0, p.k, p.lam, p.n, p.ell
    log_cap = tuple(
        math.log(abs(p.mu[i])) + (ell + n) * lam[i] + n * lam[(i + 1) % d0] for i in range(d0)
    )
    log_delta = -math.log(p.c_bound) + (lam[0] + lam[-1]) * n + math.log(p.rho)

    sides = []
    for i in range(d0):
        if i < k:
            sides.append(log_delta + sum(log_cap[:i]))
        else:
            sides.append(log_delta - sum(log_cap[i:]))
    for i, side in enumerate(sides):
        if side > log_delta + 1e-9:
            raise ConstructionInfeasibleError(
                f"δ_{i + 1} > δ: log δ_{i + 1} = {side:.6g} > log δ = {log_delta:.6g}",
                magnitude=f"delta_{i + 1}",
                log_margin=log_delta - side,
            )

    log_stable = -sum(log_cap[:k])
    log_unstable = sum(log_cap[k:])
    log_bound = math.log(p.eta / 8.0) + n * (lam[k] - lam[0]) + min(log_stable, log_unstable)
    L = _floor_exp(math.log(l_factor) + log_bound)
    if L < 2:
        binding = "Λ_1⁻¹⋯Λ_k⁻¹" if log_stable <= log_unstable else "Λ_{k+1}⋯Λ_{d0}"
        raise ConstructionInfeasibleError(
            f"L = floor({l_factor}·bound) = {L} < 2: bound = (η/8)e^(n(λ_(k+1)−λ_1))·{binding} "
            f"= e^{log_bound:.6g}，参数不足以振荡",
            magnitude="L",
            log_margin=log_bound - math.log(2.0 / l_factor),
        )
    log_L = math.log(L)
    T = p.return_time
    scales = DerivedScales(
        log_lambda_cap=log_cap,
        log_delta=log_delta,
        log_delta_sides=tuple(sides),
        log_bound=log_bound,
        L=L,
        log_L=log_L,
        return_time=T,
        entropy=log_L / T,
        delta_target=delta(p.spectrum).delta,
    )
    logger.info(f"尺度推导完成: log L = {log_L:.6f}, 熵 = {scales.entropy:.6f}, Δ−熵 = {scales.gap:.6f}")
    return scales


def coherence_residual(s: DerivedScales, k: int) -> float:
    """max |log(Λ_i δ_i) − log δ_{i+1}|（i ≠ k）与 Λ_k δ_k = Λ_1⋯Λ_{d0}·δ_{k+1} 的残差"""
    cap, sides = s.log_lambda_cap, s.log_delta_sides
    d0 = len(cap)
    worst = 0.0
    for i in range(d0):
        nxt = (i + 1) % d0
        if i == k - 1:
            target = sum(cap) + sides[nxt]
        else:
            target = sides[nxt]
        worst = max(worst, abs(cap[i] + sides[i] - target))
    return worst


@dataclass(frozen=True)
class ModelEntropy:
    entropy: float  # log L/(ℓ+m+2n)
    delta: float  # λ 谱的 Δ
    gap: float  # Δ − 熵

    def to_dict(self) -> dict:
        return {"entropy": self.entropy, "delta": self.delta, "gap": self.gap}


def model_entropy(s: DerivedScales) -> ModelEntropy:
    """h_top = log L/(ℓ+m+2n) 及其与 Δ 的差"""
    h = math.log(s.L) / s.return_time
    result = ModelEntropy(entropy=h, delta=s.delta_target, gap=s.delta_target - h)
    logger.info(f"模型熵 {h:.6f}, Δ − 熵 = {result.gap:.6f}")
    return result


def inflate_eta(s: DerivedScales, factor: float, l_factor: Optional[float] = None) -> DerivedScales:
    """按 η·factor 的上界重新取 L，振荡仍用原来的 η

    上界对 η 线性，故只平移 log bound；返回的 log_bound 仍是原参数的上界。
    """
    if factor <= 0.0:
        raise PreconditionError(f"放大倍数必须为正: {factor}")
    l_factor = config.L_FACTOR if l_factor is None else l_factor
    L = _floor_exp(math.log(l_factor) + s.log_bound + math.log(factor))
    if L < 2:
        raise ConstructionInfeasibleError(f"放大后 L = {L} < 2", magnitude="L")
    log_L = math.log(L)
    return replace(s, L=L, log_L=log_L, entropy=log_L / s.return_time)
