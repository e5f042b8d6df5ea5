"""
有限型子移位

转移矩阵、精确熵、柱集计数、移位度量，以及供计数核使用的词枚举与打包。
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .. import config
from ..core.errors import NumericalError, PreconditionError, SchemaError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TransitionMatrix:
    """0/1 转移矩阵，entries[a][b] = 1 表示 a 后可接 b"""
    entries: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        arr = np.array(self.entries)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
            raise PreconditionError(f"转移矩阵必须是非空方阵: {arr.shape}")
        if not np.isin(arr, (0, 1)).all():
            raise PreconditionError("转移矩阵只能包含 0/1")
        if (arr.sum(axis=1) == 0).any() or (arr.sum(axis=0) == 0).any():
            raise PreconditionError("转移矩阵存在全零行或全零列")
        object.__setattr__(self, "entries", tuple(tuple(int(x) for x in row) for row in arr))

    @classmethod
    def from_list(cls, rows, field: str = "matrix") -> "TransitionMatrix":
        try:
            return cls(tuple(tuple(int(x) for x in row) for row in rows))
        except (TypeError, ValueError) as e:
            raise SchemaError(f"转移矩阵无法解析: {e}", field) from e

    @classmethod
    def full(cls, size: int) -> "TransitionMatrix":
        return cls(tuple(tuple(1 for _ in range(size)) for _ in range(size)))

    @property
    def size(self) -> int:
        return len(self.entries)

    def array(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int64)

    def allows(self, a: int, b: int) -> bool:
        return self.entries[a][b] == 1


def _perron_root(a: np.ndarray) -> float:
    """不可约非负矩阵的 Perron 根: 对 I + A 做幂迭代（本原化）"""
    size = a.shape[0]
    b = np.eye(size) + a
    v = np.ones(size) / size
    root = 0.0
    for _ in range(config.PERRON_MAX_ITER):
        w = b @ v
        new_root = float(w.sum() / v.sum())
        w /= w.sum()
        if abs(new_root - root) <= config.PERRON_TOL * new_root:
            return new_root - 1.0
        v, root = w, new_root
    raise NumericalError(f"幂迭代在 {config.PERRON_MAX_ITER} 次内未收敛")


def strongly_connected_components(t: TransitionMatrix) -> Tuple[int, np.ndarray]:
    return connected_components(csr_matrix(t.array()), directed=True, connection="strong")


def sft_entropy(t: TransitionMatrix) -> float:
    """h_top = log Perron 根；可约矩阵取主导不可约分量并警告"""
    count, labels = strongly_connected_components(t)
    a = t.array().astype(float)
    if count == 1:
        return math.log(_perron_root(a))
    logger.warning(f"转移矩阵可约（{count} 个强连通分量），取主导分量的熵")
    best = 0.0
    for comp in range(count):
        idx = np.flatnonzero(labels == comp)
        sub = a[np.ix_(idx, idx)]
        if sub.sum() == 0:
            continue
        best = max(best, _perron_root(sub))
    if best <= 0.0:
        raise NumericalError("转移矩阵没有非平凡的不可约分量")
    return math.log(best)


def cylinder_count(t: TransitionMatrix, n: int) -> int:
    """长度为 n 的可容许词数 1ᵀTⁿ⁻¹1（大整数精确计算）"""
    if n < 1:
        raise PreconditionError(f"词长必须 ≥ 1: {n}")
    base = np.array(t.entries, dtype=object)
    result = np.identity(t.size, dtype=object)
    power = n - 1
    while power:
        if power & 1:
            result = result.dot(base)
        base = base.dot(base)
        power >>= 1
    return int(sum(int(x) for x in result.flatten()))


@dataclass(frozen=True)
class ShiftPoint:
    """双向无穷符号序列: 有限窗口 + 最终周期的左右尾

    位置 p < offset 取 left_period（向左周期延拓，left_period[-1] 在 offset−1 处），
    offset ≤ p < offset+len(window) 取窗口，其余取 right_period。
    """
    window: Tuple[int, ...]
    offset: int = 0
    left_period: Tuple[int, ...] = (0,)
    right_period: Tuple[int, ...] = (0,)

    def __post_init__(self):
        if not self.left_period or not self.right_period:
            raise PreconditionError("尾部周期不能为空")
        object.__setattr__(self, "window", tuple(int(s) for s in self.window))

    @classmethod
    def from_word(cls, word: Sequence[int], offset: int = 0, tail: int = 0) -> "ShiftPoint":
        return cls(tuple(word), offset, (tail,), (tail,))

    def symbol(self, p: int) -> int:
        rel = p - self.offset
        if rel < 0:
            lp = self.left_period
            return lp[(rel % len(lp))]
        if rel < len(self.window):
            return self.window[rel]
        rp = self.right_period
        return rp[(rel - len(self.window)) % len(rp)]

    def shift(self, k: int = 1) -> "ShiftPoint":
        """σᵏ: (σx)_p = x_{p+1}"""
        return ShiftPoint(self.window, self.offset - k, self.left_period, self.right_period)

    def extent(self) -> Tuple[int, int]:
        return self.offset, self.offset + len(self.window)

    def is_admissible(self, t: TransitionMatrix) -> bool:
        lo, hi = self.extent()
        span = len(self.left_period) + len(self.right_period)
        return all(t.allows(self.symbol(p), self.symbol(p + 1)) for p in range(lo - span, hi + span))


def shift_metric(x: ShiftPoint, y: ShiftPoint) -> float:
    """d(x, y) = 2^{−min{|k| : x_k ≠ y_k}}，相等时为 0

    两点在窗口外都是周期的，扫描到窗口范围外再加上两尾周期的最小公倍数即可判定相等。
    """
    lo = min(x.extent()[0], y.extent()[0])
    hi = max(x.extent()[1], y.extent()[1])
    tails = math.lcm(len(x.left_period), len(y.left_period), len(x.right_period), len(y.right_period))
    reach = max(abs(lo), abs(hi)) + tails + 1
    for k in range(reach + 1):
        if x.symbol(k) != y.symbol(k) or x.symbol(-k) != y.symbol(-k):
            return 2.0 ** (-k)
    return 0.0


def enumerate_words(t: TransitionMatrix, length: int) -> np.ndarray:
    """所有长度为 length 的可容许词，形状 (count, length)"""
    if length < 1:
        raise PreconditionError(f"词长必须 ≥ 1: {length}")
    a = t.array()
    words = np.arange(t.size, dtype=np.int64).reshape(-1, 1)
    for _ in range(length - 1):
        last = words[:, -1]
        pieces = []
        for b in range(t.size):
            keep = a[last, b] == 1
            if keep.any():
                ext = np.full((int(keep.sum()), 1), b, dtype=np.int64)
                pieces.append(np.hstack([words[keep], ext]))
        words = np.vstack(pieces)
        # 保持字典序
        order = np.lexsort(words.T[::-1])
        words = words[order]
    return words


def symbol_bits(alphabet: int) -> int:
    return max(1, int(math.ceil(math.log2(alphabet))))


def pack_words(words: np.ndarray, alphabet: int) -> np.ndarray:
    """把每个词打包成 uint64，第 p 个符号占第 p·b..p·b+b−1 位"""
    bits = symbol_bits(alphabet)
    length = words.shape[1]
    if length * bits > config.MAX_WORD_BITS:
        raise PreconditionError(f"词长 {length} 超出 {config.MAX_WORD_BITS} 位打包上限")
    codes = np.zeros(words.shape[0], dtype=np.uint64)
    for p in range(length):
        codes |= words[:, p].astype(np.uint64) << np.uint64(p * bits)
    return codes


def position_mask(first: int, last: int, length: int, alphabet: int) -> int:
    """覆盖窗口内位置 first..last（相对窗口起点，含端点，自动截断）的位掩码"""
    bits = symbol_bits(alphabet)
    first, last = max(first, 0), min(last, length - 1)
    mask = 0
    for p in range(first, last + 1):
        mask |= ((1 << bits) - 1) << (p * bits)
    return mask
