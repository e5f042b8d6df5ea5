"""
轨道工具: 迭代、链式法则微分、周期轨道的验证与定位
"""
import logging
from typing import List, Optional, Sequence

import numpy as np

from .. import config
from ..core.errors import NumericalError, OutOfChartError, PreconditionError
from ..core.linalg import PeriodicCocycle
from .catalog import DynamicalSystem

logger = logging.getLogger(__name__)


def iterate(sys: DynamicalSystem, x, n: int):
    """fⁿ(x)，n < 0 时用逆"""
    for _ in range(abs(n)):
        x = sys.evaluate(x) if n > 0 else sys.inverse_evaluate(x)
    return x


def orbit_differential(sys: DynamicalSystem, x, n: int) -> np.ndarray:
    """Dfⁿ(x) = Df(f^{n−1}x)⋯Df(x)"""
    if n < 0:
        raise PreconditionError(f"n 必须 ≥ 0: {n}")
    jac = np.eye(sys.dim)
    for _ in range(n):
        jac = sys.differential(x) @ jac
        x = sys.evaluate(x)
    return jac


def periodic_orbit_cocycle(sys: DynamicalSystem, orbit_points: Sequence) -> PeriodicCocycle:
    """沿已验证的周期轨道收集微分

    相邻两点要求 d(f(p_i), p_{i+1}) < PERIODIC_CLOSURE_TOL，末点回到首点。
    """
    points = [np.asarray(p, dtype=float) for p in orbit_points]
    if not points:
        raise PreconditionError("轨道点列为空")
    period = len(points)
    worst = 0.0
    for i, p in enumerate(points):
        image = sys.evaluate(p)
        worst = max(worst, sys.distance(image, points[(i + 1) % period]))
    if worst >= config.PERIODIC_CLOSURE_TOL:
        raise PreconditionError(f"轨道不闭合: 闭合缺陷 {worst:.3e} ≥ {config.PERIODIC_CLOSURE_TOL:.0e}")
    return PeriodicCocycle(tuple(sys.differential(p) for p in points))


def _residual(sys: DynamicalSystem, x: np.ndarray, period: int) -> np.ndarray:
    """fˡ(x) − x，周期坐标折叠到 (−p/2, p/2]"""
    diff = iterate(sys, x, period) - x
    per = np.asarray(sys.periods())
    periodic = per > 0
    wrapped = diff - np.where(periodic, per * np.round(diff / np.where(periodic, per, 1.0)), 0.0)
    return wrapped


def _minimal_period(sys: DynamicalSystem, x: np.ndarray, period: int) -> int:
    for q in range(1, period):
        if period % q == 0 and sys.distance(iterate(sys, x, q), x) < config.PERIODIC_CLOSURE_TOL:
            return q
    return period


def locate_periodic_orbit(sys: DynamicalSystem, period: int, seed: int = 0,
                          starts: Optional[int] = None) -> List[np.ndarray]:
    """多起点阻尼 Newton 求 fˡ(x) = x，返回最小周期恰为 period 的轨道点列

    Raises:
        NumericalError: 所有起点都未收敛
    """
    if period < 1:
        raise PreconditionError(f"周期必须 ≥ 1: {period}")
    starts = starts or config.NEWTON_STARTS
    rng = np.random.default_rng(seed)
    eye = np.eye(sys.dim)
    per = np.asarray(sys.periods())
    periodic = per > 0
    for attempt in range(starts):
        # 周期坐标在 [0, p) 内取起点，其余坐标在坐标卡 [−1, 1] 内取
        draw = rng.random(sys.dim)
        x = np.where(periodic, draw * per, 2.0 * draw - 1.0)
        try:
            res = _residual(sys, x, period)
        except OutOfChartError:
            continue
        for _ in range(config.NEWTON_MAX_ITER):
            norm = float(np.abs(res).max())
            if norm < config.PERIODIC_CLOSURE_TOL * 1e-2:
                break
            try:
                jac = orbit_differential(sys, x, period) - eye
                step = np.linalg.solve(jac, -res)
            except (np.linalg.LinAlgError, OutOfChartError):
                break
            # 步长减半直到残差下降
            t = 1.0
            while t > 1e-6:
                trial = x + t * step
                trial = np.where(periodic, trial % np.where(periodic, per, 1.0), trial)
                try:
                    trial_res = _residual(sys, trial, period)
                except OutOfChartError:
                    t /= 2.0
                    continue
                if float(np.abs(trial_res).max()) < norm:
                    x, res = trial, trial_res
                    break
                t /= 2.0
            else:
                break
        if float(np.abs(res).max()) >= config.PERIODIC_CLOSURE_TOL:
            continue
        if _minimal_period(sys, x, period) != period:
            continue
        orbit = [x]
        for _ in range(period - 1):
            orbit.append(sys.evaluate(orbit[-1]))
        logger.info(f"第 {attempt + 1} 个起点收敛到周期 {period} 轨道，闭合缺陷 {float(np.abs(res).max()):.2e}")
        return orbit
    raise NumericalError(f"{starts} 个起点均未找到最小周期为 {period} 的轨道")
