"""
盒计数维数
"""
import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np

from ..core.errors import PreconditionError
from ..exponents.functionals import fit_slope

logger = logging.getLogger(__name__)

MIN_POINTS = 1000
MIN_SCALES = 4


@dataclass(frozen=True)
class BoxDimension:
    value: float
    residual: float
    counts: Dict[float, int]

    def to_dict(self) -> dict:
        return {"dimension": self.value, "residual": self.residual,
                "counts": {repr(r): c for r, c in self.counts.items()}}


def box_counting_dimension(points, scales: Sequence[float], origin: Optional[Sequence[float]] = None) -> BoxDimension:
    """log N(r) 对 log(1/r) 的最小二乘斜率

    盒子编号为 floor((p − origin)/r)，origin 缺省为点云各坐标的最小值。
    """
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    if points.shape[0] < MIN_POINTS:
        raise PreconditionError(f"点云至少需要 {MIN_POINTS} 个点，实际 {points.shape[0]}")
    scales = sorted({float(r) for r in scales}, reverse=True)
    if len(scales) < MIN_SCALES or any(r <= 0 for r in scales):
        raise PreconditionError(f"至少需要 {MIN_SCALES} 个正尺度: {scales}")
    if scales[0] / scales[-1] < 10.0:
        raise PreconditionError(f"尺度需跨越一个数量级: {scales[0]} / {scales[-1]}")
    base = points.min(axis=0) if origin is None else np.asarray(origin, dtype=float)

    counts = {}
    for r in scales:
        boxes = np.floor((points - base) / r).astype(np.int64)
        counts[r] = int(np.unique(boxes, axis=0).shape[0])
    xs = [float(np.log(1.0 / r)) for r in scales]
    ys = [float(np.log(counts[r])) for r in scales]
    slope, residual = fit_slope(xs, ys)
    logger.info(f"盒计数维数 {slope:.6f}（残差 {residual:.3g}）")
    return BoxDimension(slope, residual, counts)
