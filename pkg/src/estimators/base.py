"""
采样系统与尺度计数表

SampledSystem 把 systems 中的映射或符号移位接到计数定义上:
度量系统用 numba 核在轨道数组上贪心，符号系统在打包词上按位掩码分组。
"""
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .. import config
from ..core.errors import HorizonExceededError, PreconditionError
from ..symbolic.shift import (
    ShiftPoint,
    TransitionMatrix,
    enumerate_words,
    pack_words,
    position_mask,
    shift_metric,
    symbol_bits,
)
from . import kernels

logger = logging.getLogger(__name__)


class SampledSystem(ABC):
    """可在度量空间上前向求值、带种子采样器与可靠迭代上限的系统"""

    horizon: int

    def check_horizon(self, n: int):
        if n > self.horizon:
            raise HorizonExceededError(f"迭代步数 {n} 超过系统可靠上限 {self.horizon}")

    @abstractmethod
    def bowen_ball_contains(self, center, candidate, eps: float, N: int) -> bool:
        """d(fᵏx, fᵏy) < eps 对 0 ≤ k < N 成立"""

    @abstractmethod
    def separated_count(self, samples, n: int, delta: float, eps: float, seed: int) -> int:
        """两两满足 (a) d_n ≤ eps 与 (b) d_n > delta 的贪心族大小"""

    @abstractmethod
    def half_cover_count(self, samples, n: int, eps: float) -> int:
        """以样本为中心的 (n, eps)-Bowen 球覆盖过半样本所需的球数"""

    @abstractmethod
    def default_samples(self, seed: int):
        """计数时缺省使用的样本"""

    def sample_size(self, samples) -> int:
        return len(samples)


@dataclass
class MetricSampledSystem(SampledSystem):
    """前向映射 step 对 (N, d) 数组逐行作用；periods[c] > 0 表示该坐标按周期折叠"""
    step: Callable[[np.ndarray], np.ndarray]
    dim: int
    periods: Tuple[float, ...]
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]
    horizon: int = config.TORUS_HORIZON
    grid_side: Optional[int] = None
    sample_count: int = 4096
    name: str = "metric"

    def __post_init__(self):
        if len(self.periods) != self.dim or len(self.lower) != self.dim or len(self.upper) != self.dim:
            raise PreconditionError("periods/lower/upper 的长度必须等于维数")
        self._periods = np.asarray(self.periods, dtype=float)

    def distance(self, a, b) -> float:
        diff = np.abs(np.asarray(a, float) - np.asarray(b, float))
        periodic = self._periods > 0
        folded = diff % np.where(periodic, self._periods, 1.0)
        diff = np.where(periodic, np.minimum(folded, self._periods - folded), diff)
        return float(diff.max())

    def sample(self, count: int, seed: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        lo, hi = np.asarray(self.lower), np.asarray(self.upper)
        return lo + (hi - lo) * rng.random((count, self.dim))

    def grid(self, side: int) -> np.ndarray:
        """每维 side 个格心组成的网格"""
        axes = [lo + (hi - lo) * (np.arange(side) + 0.5) / side for lo, hi in zip(self.lower, self.upper)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def default_samples(self, seed: int) -> np.ndarray:
        if self.grid_side:
            return self.grid(self.grid_side)
        return self.sample(self.sample_count, seed)

    def orbits(self, points: np.ndarray, n: int) -> np.ndarray:
        """(N, n, d) 的前 n 个迭代（含第 0 步）"""
        self.check_horizon(n)
        points = np.asarray(points, dtype=float).reshape(-1, self.dim)
        out = np.empty((points.shape[0], n, self.dim))
        x = points
        for k in range(n):
            out[:, k, :] = x
            if k + 1 < n:
                x = self.step(x)
        return np.ascontiguousarray(out)

    def bowen_ball_contains(self, center, candidate, eps: float, N: int) -> bool:
        if N < 1 or eps <= 0.0:
            raise PreconditionError(f"需要 N ≥ 1 且 eps > 0: N={N}, eps={eps}")
        orb = self.orbits(np.vstack([center, candidate]), N)
        return bool(kernels.orbit_distance(orb, 0, 1, N, self._periods, eps) < eps)

    def separated_count(self, samples, n: int, delta: float, eps: float, seed: int) -> int:
        samples = np.asarray(samples, dtype=float).reshape(-1, self.dim)
        if samples.shape[0] == 0:
            return 0
        orb = self.orbits(samples, n)
        order = np.random.default_rng(seed).permutation(samples.shape[0]).astype(np.int64)
        close = eps if math.isfinite(eps) else np.inf
        return int(kernels.greedy_family(orb, order, n, close, delta, self._periods))

    def half_cover_count(self, samples, n: int, eps: float) -> int:
        samples = np.asarray(samples, dtype=float).reshape(-1, self.dim)
        orb = self.orbits(samples, n)
        adj = kernels.ball_adjacency(orb, n, eps, self._periods)
        return int(kernels.greedy_half_cover(adj, samples.shape[0] // 2))


def _radius_le(scale: float) -> int:
    """d ≤ scale ⟺ 在 |k| ≤ r 上一致，r = ceil(log2(1/scale)) − 1；r < 0 表示无约束"""
    if not math.isfinite(scale):
        return -1
    return int(math.ceil(math.log2(1.0 / scale))) - 1


def _radius_lt(scale: float) -> int:
    """d < scale ⟺ 在 |k| ≤ floor(log2(1/scale)) 上一致"""
    return int(math.floor(math.log2(1.0 / scale)))


@dataclass
class SymbolicSampledSystem(SampledSystem):
    """有限型子移位，度量 2^{−min|k|}；词的第 0 列对应位置 −r"""
    matrix: TransitionMatrix
    horizon: int = config.MAX_WORD_BITS
    name: str = "shift"

    @property
    def alphabet(self) -> int:
        return self.matrix.size

    def _window(self, n: int, radius: int) -> int:
        length = n + 2 * max(radius, 0)
        if length * symbol_bits(self.alphabet) > config.MAX_WORD_BITS:
            raise HorizonExceededError(f"窗口长度 {length} 超出 {config.MAX_WORD_BITS} 位打包上限")
        return length

    def default_samples(self, seed: int):
        # None 表示按尺度需要的窗口穷举
        return None

    def cover_window(self, n: int, eps: float) -> int:
        """开 (n, eps)-Bowen 球对应柱集的词长"""
        return self._window(n, _radius_lt(eps))

    def bernoulli_samples(self, probs: Sequence[float], count: int, length: int, seed: int) -> np.ndarray:
        """i.i.d. 词样本，仅适用于满移位"""
        if any(not self.matrix.allows(a, b) for a in range(self.alphabet) for b in range(self.alphabet)):
            raise PreconditionError("Bernoulli 样本只适用于满移位")
        probs = np.asarray(probs, dtype=float)
        if probs.shape != (self.alphabet,) or abs(probs.sum() - 1.0) > 1e-12 or (probs < 0).any():
            raise PreconditionError(f"概率向量无效: {probs}")
        rng = np.random.default_rng(seed)
        return rng.choice(self.alphabet, size=(count, length), p=probs).astype(np.int64)

    def bowen_ball_contains(self, center: ShiftPoint, candidate: ShiftPoint, eps: float, N: int) -> bool:
        if N < 1 or eps <= 0.0:
            raise PreconditionError(f"需要 N ≥ 1 且 eps > 0: N={N}, eps={eps}")
        return all(shift_metric(center.shift(k), candidate.shift(k)) < eps for k in range(N))

    def separated_count(self, samples, n: int, delta: float, eps: float, seed: int) -> int:
        """按 close 掩码分组（"在闭邻域内"是等价关系），取最大组中 sep 掩码下不同的词数"""
        if not delta < eps:
            raise PreconditionError(f"需要 delta < eps: delta={delta}, eps={eps}")
        r_sep = _radius_le(delta)
        r_close = _radius_le(eps)
        if r_sep < 0:
            # 距离不会超过 1 ≤ delta
            return 1 if samples is None or len(samples) else 0
        length = self._window(n, r_sep)
        if samples is None:
            words = enumerate_words(self.matrix, length)
        else:
            words = np.asarray(samples, dtype=np.int64)
            if words.shape[0] == 0:
                return 0
            if words.shape[1] < length:
                raise PreconditionError(f"样本词长 {words.shape[1]} 短于需要的窗口 {length}")
            words = words[:, :length]
        codes = pack_words(words, self.alphabet)
        # 窗口第 0 列是位置 −r_sep
        sep_mask = np.uint64(position_mask(0, length - 1, length, self.alphabet))
        keyed = codes & sep_mask
        if r_close < 0:
            return int(np.unique(keyed).shape[0])
        shift = r_sep - r_close
        close_mask = np.uint64(position_mask(shift, shift + n - 1 + 2 * r_close, length, self.alphabet))
        groups = pd.DataFrame({"close": codes & close_mask, "sep": keyed})
        return int(groups.groupby("close")["sep"].nunique().max())

    def half_cover_count(self, samples, n: int, eps: float) -> int:
        """开 Bowen 球是柱集；按柱集分组，从最大组起累加直到过半"""
        words = np.asarray(samples, dtype=np.int64)
        radius = _radius_lt(eps)
        if radius < 0:
            return 1
        length = self._window(n, radius)
        if words.shape[1] < length:
            raise PreconditionError(f"样本词长 {words.shape[1]} 短于需要的窗口 {length}")
        codes = pack_words(words[:, :length], self.alphabet)
        _, sizes = np.unique(codes, return_counts=True)
        covered = np.cumsum(np.sort(sizes)[::-1])
        return int(np.searchsorted(covered, words.shape[0] // 2, side="right") + 1)


@dataclass(frozen=True)
class ScaleCount:
    """(n, δ, ε) → 计数；贪心族给出的是真实最大值的下界"""
    records: Tuple[Tuple[int, float, float, int], ...]
    seed: int = 0
    sample_size: int = 0
    algorithm: str = "greedy"
    lower_bound: bool = True

    def table(self) -> Dict[Tuple[int, float, float], int]:
        return {(n, d, e): c for n, d, e, c in self.records}

    def count(self, n: int, delta: float, eps: float) -> int:
        return self.table()[(n, delta, eps)]

    def lifted(self, kind: str = "topological") -> "ScaleCount":
        """单调包络

        topological: (n, ε)-分离族对 n′ ≥ n、ε′ ≤ ε 仍分离，取 n′ ≤ n、ε′ ≥ ε 上的最大值；
        tail: 对 δ′ ≥ δ、ε′ ≤ ε 的族仍可用，取这些格点上的最大值。
        """
        table = self.table()
        lifted = []
        changed = 0
        for n, d, e, c in self.records:
            if kind == "topological":
                best = max(v for (n2, d2, e2), v in table.items() if n2 <= n and e2 >= e and d2 >= d)
            elif kind == "tail":
                best = max(v for (n2, d2, e2), v in table.items() if n2 == n and d2 >= d and e2 <= e)
            else:
                raise PreconditionError(f"未知的包络类型: {kind}")
            changed += best != c
            lifted.append((n, d, e, best))
        if changed:
            logger.warning(f"{changed} 个贪心计数被单调包络抬高")
        return ScaleCount(tuple(lifted), self.seed, self.sample_size, self.algorithm + "+lifted", self.lower_bound)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(list(self.records), columns=["n", "delta", "eps", "count"])
        return frame.sort_values(["eps", "delta", "n"], ascending=[False, False, True]).reset_index(drop=True)
