"""
尺度熵估计

(n, ε)-分离集的拓扑熵、两尺度尾熵 s_f(n, δ, ε)、Katok 覆盖计数。
n 的极限用 n ∈ [nmax/2, nmax] 上的回归斜率代替。
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from .. import config
from ..core.errors import DegenerateFitError, InsufficientSamplesError, PreconditionError
from .base import SampledSystem, ScaleCount

logger = logging.getLogger(__name__)


def bowen_ball_contains(sys: SampledSystem, center, candidate, eps: float, N: int) -> bool:
    return sys.bowen_ball_contains(center, candidate, eps, N)


def max_separated_set(sys: SampledSystem, samples, n: int, delta: float, eps: float, seed: int = 0) -> ScaleCount:
    """满足 (a) 沿 n 步两两 ε-接近、(b) 某步 δ-分离的贪心族

    samples 为 None 时使用系统的缺省样本（符号系统为穷举）。
    """
    if n < 1:
        raise PreconditionError(f"n 必须 ≥ 1: {n}")
    if not 0.0 < delta < eps:
        raise PreconditionError(f"需要 0 < delta < eps: delta={delta}, eps={eps}")
    if samples is None:
        samples = sys.default_samples(seed)
    size = 0 if samples is None else sys.sample_size(samples)
    count = sys.separated_count(samples, n, delta, eps, seed)
    if count == 0:
        logger.warning("样本为空，分离族计数为 0")
    return ScaleCount(((n, float(delta), float(eps), count),), seed=seed, sample_size=size)


def fit_growth(ns: Sequence[int], counts: Sequence[int]) -> Tuple[float, float]:
    """log count 对 n 的回归斜率与残差，只用 n ≥ nmax/2 的点"""
    ns = np.asarray(ns, dtype=int)
    counts = np.asarray(counts, dtype=float)
    if (counts <= 0).any():
        raise DegenerateFitError("计数必须为正才能取对数")
    nmax = int(ns.max())
    window = ns >= nmax / 2
    if window.sum() < config.MIN_FIT_POINTS:
        raise DegenerateFitError(f"回归至少需要 {config.MIN_FIT_POINTS} 个点，实际 {int(window.sum())}")
    coeffs, res, *_ = np.polyfit(ns[window], np.log(counts[window]), 1, full=True)
    return float(coeffs[0]), float(res[0]) if len(res) else 0.0


def _count_cells(sys: SampledSystem, samples, cells: List[Tuple[int, float, float]], seed: int,
                 max_workers: Optional[int]) -> ScaleCount:
    """并行计算各 (n, δ, ε) 格点，按提交顺序合并"""
    workers = max(1, min(max_workers or config.HSF_THREADS, len(cells)))
    with ThreadPoolExecutor(max_workers=workers) as executor:
        counts = list(tqdm(
            executor.map(lambda cell: sys.separated_count(samples, cell[0], cell[1], cell[2], seed), cells),
            total=len(cells), desc="计数", disable=not config.SHOW_PROGRESS,
        ))
    size = 0 if samples is None else sys.sample_size(samples)
    records = tuple((n, float(d), float(e), int(c)) for (n, d, e), c in zip(cells, counts))
    return ScaleCount(records, seed=seed, sample_size=size)


@dataclass(frozen=True)
class EntropyEstimate:
    slopes: Dict[float, float]
    residuals: Dict[float, float]
    counts: ScaleCount

    @property
    def value(self) -> float:
        """最小尺度上的估计"""
        return self.slopes[min(self.slopes)]

    def to_dict(self) -> dict:
        return {
            "estimate": self.value,
            "slopes": {repr(e): s for e, s in self.slopes.items()},
            "residuals": {repr(e): r for e, r in self.residuals.items()},
        }


def topological_entropy_estimate(sys: SampledSystem, scales: Sequence[float], nmax: int, seed: int = 0,
                                 samples=None, max_workers: Optional[int] = None) -> EntropyEstimate:
    """每个 ε 上 (n, ε)-分离集计数的增长率

    Args:
        sys: 采样系统
        scales: 递减的正尺度
        nmax: 最大 n
        seed: 贪心顺序与采样的种子
        samples: 样本，缺省为系统自己的采样

    Returns:
        EntropyEstimate；随 ε 减小斜率应不减，不满足时只警告
    """
    scales = [float(e) for e in scales]
    if not scales or any(e <= 0 for e in scales) or any(a <= b for a, b in zip(scales, scales[1:])):
        raise PreconditionError(f"尺度必须为正且严格递减: {scales}")
    if samples is None:
        samples = sys.default_samples(seed)
    cells = [(n, e, e) for e in scales for n in range(1, nmax + 1)]
    # 拓扑计数只有分离条件: close 取无穷
    workers = max(1, min(max_workers or config.HSF_THREADS, len(cells)))
    with ThreadPoolExecutor(max_workers=workers) as executor:
        raw = list(tqdm(
            executor.map(lambda cell: sys.separated_count(samples, cell[0], cell[1], math.inf, seed), cells),
            total=len(cells), desc="分离集", disable=not config.SHOW_PROGRESS,
        ))
    size = 0 if samples is None else sys.sample_size(samples)
    counts = ScaleCount(tuple((n, d, e, int(c)) for (n, d, e), c in zip(cells, raw)),
                        seed=seed, sample_size=size).lifted("topological")
    table = counts.table()
    slopes, residuals = {}, {}
    for e in scales:
        ns = list(range(1, nmax + 1))
        slope, residual = fit_growth(ns, [table[(n, e, e)] for n in ns])
        slopes[e], residuals[e] = slope, residual
    ordered = [slopes[e] for e in scales]
    if any(b < a - 1e-12 for a, b in zip(ordered, ordered[1:])):
        logger.warning(f"斜率随 ε 减小而下降: {ordered}")
    logger.info(f"拓扑熵估计: {dict(zip(scales, ordered))}")
    return EntropyEstimate(slopes, residuals, counts)


@dataclass(frozen=True)
class TailEntropyTable:
    rates: Dict[Tuple[float, float], float]
    counts: ScaleCount
    diagonal: Tuple[float, float]

    @property
    def h_star(self) -> float:
        """最小 ε、最小 δ 处的增长率，h* 的估计"""
        return self.rates[self.diagonal]

    def slices(self) -> Dict[str, Dict[float, float]]:
        """对角点所在的两条内层切片"""
        eps_min, delta_min = self.diagonal
        return {
            "fixedEps": {d: r for (e, d), r in self.rates.items() if e == eps_min},
            "fixedDelta": {e: r for (e, d), r in self.rates.items() if d == delta_min},
        }

    def to_dict(self) -> dict:
        return {
            "hStar": self.h_star,
            "diagonal": {"eps": self.diagonal[0], "delta": self.diagonal[1]},
            "rates": [{"eps": e, "delta": d, "rate": r} for (e, d), r in sorted(self.rates.items())],
            "slices": {name: {repr(k): v for k, v in part.items()} for name, part in self.slices().items()},
        }


def tail_entropy_estimate(sys: SampledSystem, eps_list: Sequence[float], delta_list: Sequence[float],
                          nmax: int, seed: int = 0, samples=None,
                          max_workers: Optional[int] = None) -> TailEntropyTable:
    """所有 δ < ε 的 (ε, δ) 组合上 s_f(n, δ, ε) 的增长率表"""
    pairs = [(float(e), float(d)) for e in eps_list for d in delta_list if 0.0 < d < e]
    if not pairs:
        raise PreconditionError("没有满足 0 < δ < ε 的 (ε, δ) 组合")
    if samples is None:
        samples = sys.default_samples(seed)
    cells = [(n, d, e) for e, d in pairs for n in range(1, nmax + 1)]
    counts = _count_cells(sys, samples, cells, seed, max_workers).lifted("tail")
    table = counts.table()
    rates = {}
    ns = list(range(1, nmax + 1))
    for e, d in pairs:
        series = [table[(n, d, e)] for n in ns]
        if min(series) == 0:
            rates[(e, d)] = 0.0
            continue
        rates[(e, d)], _ = fit_growth(ns, series)
    eps_min = min(e for e, _ in pairs)
    delta_min = min(d for e, d in pairs if e == eps_min)
    result = TailEntropyTable(rates, counts, (eps_min, delta_min))
    logger.info(f"尾熵估计 h* ≈ {result.h_star:.6f}（ε={eps_min}, δ={delta_min}）")
    return result


def tail_vs_delta_star(table: TailEntropyTable, delta_star_value: float, tolerance: float = 0.05) -> dict:
    """h* 的估计与上界 Δ* 比较"""
    return {
        "hStar": table.h_star,
        "deltaStar": delta_star_value,
        "withinBound": table.h_star <= delta_star_value + tolerance,
    }


@dataclass(frozen=True)
class KatokEstimate:
    value: float
    residual: float
    covers: Dict[int, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"estimate": self.value, "residual": self.residual,
                "covers": {str(n): c for n, c in self.covers.items()}}


def katok_entropy_estimate(sys: SampledSystem, samples, eps: float, nmax: int,
                           max_workers: Optional[int] = None) -> KatokEstimate:
    """覆盖过半经验测度所需 Bowen 球数的增长率

    Raises:
        InsufficientSamplesError: 覆盖数超过样本数的 KATOK_SAMPLE_CEILING
    """
    if eps <= 0.0:
        raise PreconditionError(f"eps 必须为正: {eps}")
    size = sys.sample_size(samples)
    if size == 0:
        raise InsufficientSamplesError("没有样本")
    ns = list(range(1, nmax + 1))
    workers = max(1, min(max_workers or config.HSF_THREADS, len(ns)))
    with ThreadPoolExecutor(max_workers=workers) as executor:
        covers = list(executor.map(lambda n: sys.half_cover_count(samples, n, eps), ns))
    ceiling = config.KATOK_SAMPLE_CEILING * size
    for n, c in zip(ns, covers):
        if c > ceiling:
            raise InsufficientSamplesError(
                f"n={n} 时覆盖数 {c} 超过样本数 {size} 的 {config.KATOK_SAMPLE_CEILING:.0%}，请增加样本")
    # 覆盖数对 n 不减
    covers = list(np.maximum.accumulate(covers))
    value, residual = fit_growth(ns, covers)
    logger.info(f"Katok 熵估计 {value:.6f}（{size} 个样本）")
    return KatokEstimate(value, residual, dict(zip(ns, (int(c) for c in covers))))
