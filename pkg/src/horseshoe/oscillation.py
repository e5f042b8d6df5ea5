"""
振荡剖面 Φ

在每个单元 [j−1/2, j+1/2] 上，中间 |t| ≤ 1/4 为恒等 t，两侧用奇 Hermite 三次多项式
在 |t| = 1/2 处光滑降到 0（C¹）。x ≤ −1/2 与 x ≥ L−1/2 时取 0。
‖Φ‖∞ 与 max|Φ′| 与 L 无关。
"""
from dataclasses import dataclass

import numpy as np

from ..core.errors import PreconditionError

# 在 s = 1/9 处取得 max p = 64/243
_SUP_NORM = 64.0 / 243.0
# |p′(s)| 在 s = 5/9 处取 16/9
_DERIVATIVE_BOUND = 16.0 / 9.0


def _cell(t: np.ndarray) -> np.ndarray:
    a = np.abs(t)
    s = (a - 0.25) * 4.0
    tail = (3.0 * s ** 3 - 5.0 * s ** 2 + s + 1.0) / 4.0
    return np.where(a <= 0.25, t, np.sign(t) * tail)


def _cell_derivative(t: np.ndarray) -> np.ndarray:
    a = np.abs(t)
    s = (a - 0.25) * 4.0
    return np.where(a <= 0.25, 1.0, 9.0 * s ** 2 - 10.0 * s + 1.0)


@dataclass(frozen=True)
class OscillationProfile:
    L: int

    def __post_init__(self):
        if int(self.L) < 1:
            raise PreconditionError(f"L 必须 ≥ 1: {self.L}")

    def _split(self, x):
        x = np.asarray(x, dtype=float)
        j = np.floor(x + 0.5)
        inside = (x > -0.5) & (x < float(self.L) - 0.5)
        return x - j, inside

    def __call__(self, x):
        t, inside = self._split(x)
        return np.where(inside, _cell(t), 0.0)

    def derivative(self, x):
        t, inside = self._split(x)
        return np.where(inside, _cell_derivative(t), 0.0)

    @property
    def sup_norm(self) -> float:
        return _SUP_NORM

    @property
    def derivative_bound(self) -> float:
        return _DERIVATIVE_BOUND

    def branch_index(self, x) -> np.ndarray:
        """x 落在第 j 个恒等窗口 |x − j| ≤ 1/4 时返回 j，否则 −1"""
        t, inside = self._split(x)
        j = np.floor(np.asarray(x, dtype=float) + 0.5)
        return np.where(inside & (np.abs(t) <= 0.25), j, -1).astype(np.int64)


def oscillation_profile(L: int) -> OscillationProfile:
    if int(L) < 2:
        raise PreconditionError(f"振荡剖面需要 L ≥ 2: {L}")
    return OscillationProfile(int(L))
