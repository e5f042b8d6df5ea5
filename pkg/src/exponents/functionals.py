"""
指数泛函: Δ⁺、Δ⁻、Δ、子丛限制 Δ_E、分裂索引的 Δ*、Ruelle 间隙以及 σ_k 剖面。
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..core.errors import DegenerateFitError, PreconditionError
from ..core.linalg import (
    ExponentSpectrum, PeriodicCocycle, lyapunov_exponents_periodic, top_k_log_jacobian,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DeltaReport:
    """Δ 泛函的结果"""
    delta_plus: float
    delta_minus: float
    delta: float
    restricted_deltas: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        doc = {
            "deltaPlus": self.delta_plus,
            "deltaMinus": self.delta_minus,
            "delta": self.delta,
        }
        if self.restricted_deltas:
            doc["restrictedDeltas"] = dict(self.restricted_deltas)
        return doc


@dataclass(frozen=True)
class SplittingLabel:
    """按指数顺序把 {1..d₀} 划分为连续块，块以 (起, 止) 表示（含端点，从1计）"""
    blocks: Tuple[Tuple[int, int], ...]

    def validate(self, dim: int):
        expected = 1
        for start, end in self.blocks:
            if start != expected or end < start:
                raise PreconditionError(f"分裂块 {self.blocks} 不是 1..{dim} 的有序划分")
            expected = end + 1
        if expected != dim + 1:
            raise PreconditionError(f"分裂块 {self.blocks} 未覆盖 1..{dim}")

    @classmethod
    def trivial(cls, dim: int) -> "SplittingLabel":
        return cls(((1, dim),))

    @classmethod
    def from_cuts(cls, dim: int, cuts: Sequence[int]) -> "SplittingLabel":
        """由切分位置（E 的维数）得到块"""
        edges = [0] + sorted(set(cuts)) + [dim]
        return cls(tuple((a + 1, b) for a, b in zip(edges, edges[1:]) if b > a))

    @staticmethod
    def label(block: Tuple[int, int]) -> str:
        return f"{block[0]}-{block[1]}"


def _sums(values: Sequence[float]) -> Tuple[float, float]:
    plus = sum(max(v, 0.0) for v in values)
    minus = sum(max(-v, 0.0) for v in values)
    return plus, minus


def delta(spec: ExponentSpectrum) -> DeltaReport:
    """Δ = min(Σλ⁺, Σλ⁻)"""
    plus, minus = _sums(spec.exponents)
    return DeltaReport(delta_plus=plus, delta_minus=minus, delta=min(plus, minus))


def delta_restricted(spec: ExponentSpectrum, block: Tuple[int, int]) -> float:
    """Δ 作用在块 (起, 止) 对应的子谱上

    Args:
        spec: 指数谱
        block: 从1计、含端点的下标区间

    Returns:
        Δ_E
    """
    start, end = block
    if not 1 <= start <= end <= spec.dim:
        raise PreconditionError(f"块 {block} 为空或超出 1..{spec.dim}")
    plus, minus = _sums(spec.exponents[start - 1:end])
    return min(plus, minus)


def exponents_report(spec: ExponentSpectrum, splitting: Optional[SplittingLabel] = None) -> DeltaReport:
    """带各块 Δ_E 的完整报告"""
    base = delta(spec)
    if splitting is None:
        return base
    splitting.validate(spec.dim)
    restricted = {SplittingLabel.label(b): delta_restricted(spec, b) for b in splitting.blocks}
    return DeltaReport(base.delta_plus, base.delta_minus, base.delta, restricted)


@dataclass(frozen=True)
class DeltaStar:
    """有限族上的 Δ*（理论上确界的下界）"""
    value: float
    empty_family: bool
    lower_bound: bool = True


def delta_star(cocycles: Sequence[PeriodicCocycle], splittings: Sequence[SplittingLabel]) -> DeltaStar:
    """对给定周期余环及其分裂块取 Δ_E 的最大值

    空族定义为 0 并给出警告。
    """
    if len(cocycles) != len(splittings):
        raise PreconditionError(f"余环数 {len(cocycles)} 与分裂数 {len(splittings)} 不一致")
    if not cocycles:
        logger.warning("Δ* 的输入族为空，按 0 处理")
        return DeltaStar(value=0.0, empty_family=True)
    best = 0.0
    for c, s in zip(cocycles, splittings):
        s.validate(c.dim)
        spec = lyapunov_exponents_periodic(c)
        for block in s.blocks:
            best = max(best, delta_restricted(spec, block))
    return DeltaStar(value=best, empty_family=False)


def delta_star_of_spectra(spectra: Sequence[ExponentSpectrum], splittings: Sequence[SplittingLabel]) -> DeltaStar:
    """同 delta_star，但直接使用已知的指数谱"""
    if not spectra:
        logger.warning("Δ* 的输入族为空，按 0 处理")
        return DeltaStar(value=0.0, empty_family=True)
    best = 0.0
    for spec, s in zip(spectra, splittings):
        s.validate(spec.dim)
        best = max(best, max(delta_restricted(spec, b) for b in s.blocks))
    return DeltaStar(value=best, empty_family=False)


def ruelle_gap(entropy_estimate: float, spec: ExponentSpectrum) -> float:
    """Δ − 熵估计；负值说明估计违反了理论上界"""
    if entropy_estimate < 0:
        raise PreconditionError(f"熵估计必须非负: {entropy_estimate}")
    return delta(spec).delta - entropy_estimate


def entropy_upper_bounds(spec: ExponentSpectrum) -> Tuple[float, float]:
    """f 与 f⁻¹ 的 Ruelle 上界 (Σλ⁺, Σλ⁻)"""
    return _sums(spec.exponents)


@dataclass(frozen=True)
class SigmaKProfile:
    k: int
    values: Tuple[float, ...]  # a_1..a_nmax
    upper_bound: float  # inf_n a_n/n
    slope: float
    residual: float

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "a_n": list(self.values),
            "infRate": self.upper_bound,
            "slope": self.slope,
            "residual": self.residual,
        }


def sigma_k_profile(c: PeriodicCocycle, k: int, nmax: int) -> SigmaKProfile:
    """a_n = log sup_E Jac(Dfⁿ, E)，E 取遍 k 维子空间

    a_n 次可加，inf a_n/n 是 σ_k 的有限 n 上界；斜率取 n ∈ [nmax/2, nmax] 的最小二乘。
    """
    if not 0 <= k <= c.dim:
        raise PreconditionError(f"k 必须在 0..{c.dim} 之间: {k}")
    if nmax < 1:
        raise PreconditionError(f"nmax 必须为正: {nmax}")
    values: List[float] = []
    product = np.eye(c.dim)
    log_scale = 0.0
    log_det = 0.0
    for i in range(nmax):
        a = c.factor(i)
        log_det += math.log(abs(np.linalg.det(a)))
        product = a @ product
        norm = np.linalg.norm(product, 2)
        product /= norm
        log_scale += math.log(norm)
        if k == c.dim:
            values.append(log_det)
        else:
            values.append(top_k_log_jacobian(product, k) + k * log_scale)
    ns = np.arange(1, nmax + 1)
    rates = np.array(values) / ns
    lo = max(1, nmax // 2)
    window = ns >= lo
    if window.sum() < 2:
        slope, residual = float(rates[-1]), 0.0
    else:
        coeffs, res, *_ = np.polyfit(ns[window], np.array(values)[window], 1, full=True)
        slope = float(coeffs[0])
        residual = float(res[0]) if len(res) else 0.0
    return SigmaKProfile(k=k, values=tuple(values), upper_bound=float(rates.min()),
                         slope=slope, residual=residual)


def fit_slope(xs: Sequence[float], ys: Sequence[float]) -> Tuple[float, float]:
    """最小二乘斜率与残差平方和，至少需要3个点"""
    if len(xs) < 3:
        raise DegenerateFitError(f"回归至少需要3个点，实际 {len(xs)}")
    coeffs, res, *_ = np.polyfit(np.asarray(xs, float), np.asarray(ys, float), 1, full=True)
    return float(coeffs[0]), float(res[0]) if len(res) else 0.0
