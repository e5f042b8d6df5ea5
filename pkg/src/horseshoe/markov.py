"""
Markov 矩形族与穿越验证

归一化坐标下 R = [−1,1]^{d0}，稳定切片 R^s_j 在最后一个坐标上为 [(j ± 1/8)/L]，
R^u_j 为 R^s_j 在分支 j 下的像。所有区间用 (中心, log 半边长) 表示，半边长外舍入。
切片须落在振荡 Φ 的恒等窗口 |s − j| ≤ 1/4 内，f^T 在 R^s_j 上才等于分支映射 j。
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from .. import config
from ..core.errors import GeometricFailureError, PreconditionError, RangeError
from ..symbolic.shift import TransitionMatrix
from .model import AffineHorseshoeModel, BranchMap
from .params import ConstructionParams
from .scales import DerivedScales

logger = logging.getLogger(__name__)

_EPS = float(np.finfo(float).eps)
_CHUNK = 4096


@dataclass(frozen=True)
class Box:
    center: Tuple[float, ...]
    log_half: Tuple[float, ...]


@dataclass(frozen=True)
class RectangleFamily:
    """R 与其 L 个稳定/不稳定切片"""
    d0: int
    k: int
    L: int
    branch_map: BranchMap

    @property
    def ambient(self) -> Box:
        return Box(tuple(0.0 for _ in range(self.d0)), tuple(0.0 for _ in range(self.d0)))

    @property
    def log_slice_half(self) -> float:
        return -math.log(8.0) - math.log(self.L)

    def stable_slice(self, j: int) -> Box:
        center = [0.0] * self.d0
        half = [0.0] * self.d0
        center[-1] = j / self.L
        half[-1] = self.log_slice_half
        return Box(tuple(center), tuple(half))

    def unstable_slice(self, j: int) -> Box:
        return image_box(self.branch_map, j, self.stable_slice(j))


def build_rectangles(model: AffineHorseshoeModel) -> RectangleFamily:
    p = model.params
    return RectangleFamily(p.d0, p.k, model.L, model.branch_map)


def image_box(bm: BranchMap, j: int, box: Box) -> Box:
    """轴对齐盒在分支 j 下的像（对坐标置换加伸缩，仍是轴对齐盒）"""
    center, half = [], []
    for i in range(bm.dim):
        src = bm.source[i]
        c_in = box.center[src]
        if bm.shifted[i]:
            c_in = c_in - j / bm.L
        if c_in == 0.0:
            c = bm.branch_offset(i, j)
        else:
            log_scale = bm.log_coef[i] + math.log(abs(c_in))
            if log_scale > config.LOG_RANGE_LIMIT:
                raise RangeError(f"像中心超出可表示范围: log = {log_scale:.3g}")
            c = bm.sign[i] * math.copysign(math.exp(log_scale), c_in) + bm.branch_offset(i, j)
        center.append(c)
        half.append(bm.log_coef[i] + box.log_half[src])
    return Box(tuple(center), tuple(half))


def _outward(log_half: float) -> Tuple[float, float]:
    """对数半边长的 (下界, 上界)"""
    pad = config.OUTWARD_ULPS * _EPS * max(1.0, abs(log_half))
    return log_half - pad, log_half + pad


def _rooms(bm: BranchMap, i: int, j: int, center: float) -> float:
    """min(1 − c, 1 + c)；坐标 0 的中心 j/L 用整数精确计算"""
    if i == 0:
        L = bm.L
        up = (L - j) / L - bm.offset[0]
        low = 1.0 + j / L + bm.offset[0]
        return min(up, low)
    return 1.0 - abs(center)


@dataclass(frozen=True)
class RowOutcome:
    j: int
    margin: float
    failure: Optional[Tuple[str, float]] = None


def _check_row(family: RectangleFamily, j: int) -> RowOutcome:
    """稳定方向包含于 R，除最后一个坐标外的不稳定方向穿越 [−1,1]"""
    bm = family.branch_map
    img = family.unstable_slice(j)
    slack = config.CONTAINMENT_SLACK
    worst = math.inf
    # 最后一个坐标由列检查负责
    for i in range(family.d0 - 1):
        low, high = _outward(img.log_half[i])
        if i < family.k:
            room = _rooms(bm, i, j, img.center[i])
            if room <= 0.0:
                return RowOutcome(j, -math.inf, (f"稳定坐标 {i + 1} 的像中心越出 R", -math.inf))
            margin = math.log(room) - high
            if margin < -slack:
                return RowOutcome(j, margin, (f"f^T(R^s_j) 的稳定坐标 {i + 1} 包含于 [−1,1]", margin))
        else:
            margin = low - math.log1p(abs(img.center[i]))
            if margin < -slack:
                return RowOutcome(j, margin, (f"f^T(R^s_j) 的不稳定坐标 {i + 1} 穿越 [−1,1]", margin))
        worst = min(worst, margin)
    return RowOutcome(j, worst)


def _crossing_margins(family: RectangleFamily, j: int, positions: np.ndarray) -> np.ndarray:
    """R^u_j 的最后一个坐标覆盖各 R^s_{j'} 的对数裕度，positions 为各列中心 j'/L"""
    img = family.unstable_slice(j)
    low, _ = _outward(img.log_half[-1])
    L = family.L
    targets = np.abs(positions - img.center[-1]) + 1.0 / (8.0 * L)
    return low - np.log(targets)


def _sample_rows(L: int, count: int, seed: int) -> List[int]:
    rng = np.random.default_rng(seed)
    draws = rng.integers(0, 2 ** 53, size=count)
    picked = {0, L - 1}
    picked.update((L * int(x)) >> 53 for x in draws)
    return sorted(picked)



@dataclass(frozen=True)
class MarkovVerification:
    L: int
    rows_checked: int
    exhaustive: bool
    row_margin: float
    column_margin: float
    disjoint_margin: float
    window_margin: float
    matrix: Optional[np.ndarray] = None

    @property
    def verification(self) -> str:
        return "exhaustive" if self.exhaustive else "sampled"

    @property
    def all_ones(self) -> bool:
        return self.matrix is None or bool(self.matrix.all())

    def transition_matrix(self) -> TransitionMatrix:
        if self.matrix is None:
            raise RangeError(f"L = {self.L} 超过显式矩阵上限 {config.MARKOV_MATRIX_CAP}")
        return TransitionMatrix(tuple(tuple(int(x) for x in row) for row in self.matrix))

    def to_dict(self) -> dict:
        return {
            "L": str(self.L) if self.L.bit_length() > 53 else self.L,
            "verification": self.verification,
            "rowsChecked": self.rows_checked,
            "allOnes": self.all_ones,
            "rowMargin": self.row_margin,
            "columnMargin": self.column_margin,
            "disjointMargin": self.disjoint_margin,
            "windowMargin": self.window_margin,
        }


def window_margin(model: AffineHorseshoeModel) -> float:
    """R^s_j 落在 Φ 的恒等窗口 |s − j| ≤ 1/4 内的对数裕度: log(1/4 − r/8) − log L − log c₁"""
    r, _ = model.raw_coefficients()
    room = 0.25 - r / 8.0
    if room <= 0.0:
        return -math.inf
    return math.log(room) - math.log(model.L) - model.branch_map.log_coef[0]


def verify_markov_crossings(model: AffineHorseshoeModel, rects: Optional[RectangleFamily] = None, seed: int = 0,
                            max_workers: Optional[int] = None) -> MarkovVerification:
    """验证每个 R^u_j 在稳定方向包含于 R、在不稳定方向穿越每个 R^s_{j'}

    先检查切片像两两不交、切片位于振荡的恒等窗口内（否则分支映射不是 f^T 的限制）。
    L ≤ MARKOV_EXHAUSTIVE_CAP 时逐行检查，否则检查两端点与 MARKOV_SAMPLED_ROWS 个随机行。
    像在 j 上仿射变化，区间的凸性使两端点的结论覆盖中间各行。
    L ≤ MARKOV_MATRIX_CAP 时转移矩阵逐项由 (j, j') 的穿越结果给出。

    Raises:
        GeometricFailureError: 第一个被违反的不等式
    """
    if model.switched_off:
        raise GeometricFailureError("振荡已关闭，切片像不穿越", -math.inf)
    family = rects or build_rectangles(model)
    if family.L != model.L or family.branch_map != model.branch_map:
        raise PreconditionError("矩形族与模型的尺度不一致")
    L = family.L
    bm = family.branch_map
    slack = config.CONTAINMENT_SLACK

    disjoint = -math.log(2.0) - math.log(L) - bm.log_coef[0]
    if disjoint <= 0.0:
        raise GeometricFailureError("R^u_j 两两不交: c₁ < 1/(2L)", disjoint)
    window = window_margin(model)
    if window < -slack:
        raise GeometricFailureError("R^s_j 位于 Φ 的恒等窗口内: L·c₁ + r/8 ≤ 1/4", window)

    exhaustive = L <= config.MARKOV_EXHAUSTIVE_CAP
    if exhaustive:
        rows = range(L)
        columns = range(L)
        positions = np.arange(L) / L
    else:
        rows = _sample_rows(L, config.MARKOV_SAMPLED_ROWS, seed)
        columns = [0, L - 1]
        positions = np.array([0.0, (L - 1) / L])
        logger.info(f"L = {L} 超过逐行上限，抽样验证 {len(rows)} 行")

    chunks = [list(rows[i:i + _CHUNK]) for i in range(0, len(rows), _CHUNK)]
    workers = max(1, min(max_workers or config.HSF_THREADS, len(chunks)))
    with ThreadPoolExecutor(max_workers=workers) as executor:
        results = list(tqdm(
            executor.map(lambda chunk: [_check_row(family, j) for j in chunk], chunks),
            total=len(chunks), desc="Markov 行", disable=not config.SHOW_PROGRESS,
        ))
    outcomes = [o for chunk in results for o in chunk]
    for outcome in outcomes:
        if outcome.failure is not None:
            inequality, margin = outcome.failure
            raise GeometricFailureError(inequality, margin, slice_index=outcome.j)
    row_margin = min(o.margin for o in outcomes)

    matrix = None
    if L <= config.MARKOV_MATRIX_CAP:
        matrix = np.zeros((L, L), dtype=np.int8)
        column_rows = range(L)
    else:
        column_rows = (rows[0], rows[-1])
    column_margin = math.inf
    for j in column_rows:
        margins = _crossing_margins(family, j, positions)
        crossed = margins >= -slack
        if not crossed.all():
            col = int(np.argmin(crossed))
            raise GeometricFailureError(f"f^T(R^s_j) 的最后一个坐标覆盖 R^s_{columns[col]}",
                                        float(margins[col]), slice_index=j)
        if matrix is not None:
            matrix[j] = crossed
        column_margin = min(column_margin, float(margins.min()))

    logger.info(f"Markov 验证通过: L={L}, 检查 {len(outcomes)} 行, 行裕度 {row_margin:.3g}, 窗口裕度 {window:.3g}")
    return MarkovVerification(L=L, rows_checked=len(outcomes), exhaustive=exhaustive,
                              row_margin=row_margin, column_margin=column_margin,
                              disjoint_margin=disjoint, window_margin=window, matrix=matrix)


@dataclass(frozen=True)
class ContainmentReport:
    ok: bool
    worst_margin: float
    violation: Optional[Tuple[int, int]] = None  # (j, 坐标)


def iterate_containment(p: ConstructionParams, s: DerivedScales) -> ContainmentReport:
    """0 ≤ j ≤ ℓ 时 ∏[−δ_i e^{jλ_i}, δ_i e^{jλ_i}] 留在坐标卡内

    前 d0−1 个坐标以 δ 为界，最后一个坐标以 ρ 为界。
    """
    steps = np.arange(p.ell + 1, dtype=float)
    limits = np.full(p.d0, s.log_delta)
    limits[-1] = math.log(p.rho)
    log_sides = np.array(s.log_delta_sides)[None, :] + steps[:, None] * np.array(p.lam)[None, :]
    margins = limits[None, :] - log_sides
    worst = float(margins.min())
    if worst < -config.CONTAINMENT_SLACK:
        j, i = np.unravel_index(int(np.argmin(margins)), margins.shape)
        logger.warning(f"迭代 {j} 步后坐标 {i + 1} 越出坐标卡，对数裕度 {worst:.3g}")
        return ContainmentReport(False, worst, (int(j), int(i)))
    return ContainmentReport(True, worst)
