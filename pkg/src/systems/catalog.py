"""
系统目录

环面自同构、标准映射、刚性旋转、移位空间与马蹄模型的局部坐标卡。
每个系统给出精确的求值、微分与逆。环面坐标每步模 1。
"""
import logging
import math
from abc import ABC, abstractmethod
from typing import Optional, Sequence, Tuple

import numpy as np

from .. import config
from ..core.errors import OutOfChartError, PreconditionError, SchemaError
from ..core.linalg import as_square_matrix
from ..estimators.base import MetricSampledSystem, SampledSystem, SymbolicSampledSystem
from ..horseshoe.model import AffineHorseshoeModel, assemble_model
from ..horseshoe.params import ConstructionParams
from ..horseshoe.scales import derive_scales
from ..symbolic.shift import ShiftPoint, TransitionMatrix

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


class DynamicalSystem(ABC):
    """可逆映射 f 及其精确微分"""
    kind: str = ""
    dim: int = 0
    conservative: bool = False

    @abstractmethod
    def evaluate(self, x):
        pass

    @abstractmethod
    def inverse_evaluate(self, x):
        pass

    @abstractmethod
    def differential(self, x) -> np.ndarray:
        pass

    def periods(self) -> Tuple[float, ...]:
        """各坐标的周期，0 表示不折叠"""
        return tuple(0.0 for _ in range(self.dim))

    def distance(self, a, b) -> float:
        diff = np.abs(np.asarray(a, float) - np.asarray(b, float))
        per = np.asarray(self.periods())
        periodic = per > 0
        folded = diff % np.where(periodic, per, 1.0)
        return float(np.where(periodic, np.minimum(folded, per - folded), diff).max())

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        return np.array([self.evaluate(p) for p in points])

    def as_sampled(self, grid_side: Optional[int] = None, sample_count: int = 4096) -> SampledSystem:
        raise PreconditionError(f"{self.kind} 不提供采样适配器")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "dim": self.dim, "conservative": self.conservative}


class TorusSystem(DynamicalSystem):
    """[0,1)^d 上的映射"""

    def periods(self) -> Tuple[float, ...]:
        return tuple(1.0 for _ in range(self.dim))

    def _check_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise PreconditionError(f"点的维数应为 {self.dim}: {x.shape}")
        return x

    def as_sampled(self, grid_side: Optional[int] = None, sample_count: int = 4096) -> MetricSampledSystem:
        return MetricSampledSystem(
            step=self.evaluate_many, dim=self.dim, periods=self.periods(),
            lower=tuple(0.0 for _ in range(self.dim)), upper=tuple(1.0 for _ in range(self.dim)),
            horizon=config.TORUS_HORIZON, grid_side=grid_side, sample_count=sample_count, name=self.kind,
        )


class ToralAutomorphism(TorusSystem):
    kind = "toral-automorphism"
    conservative = True

    def __init__(self, matrix):
        m = as_square_matrix(matrix, "matrix")
        if not np.array_equal(m, np.round(m)):
            raise PreconditionError("环面自同构矩阵必须是整数矩阵")
        det = round(float(np.linalg.det(m)))
        if abs(det) != 1:
            raise PreconditionError(f"环面自同构要求 |det| = 1，实际 {det}")
        self.matrix = m.astype(np.int64)
        self.inverse_matrix = np.round(np.linalg.inv(m)).astype(np.int64)
        self.dim = m.shape[0]

    def evaluate(self, x):
        return (self.matrix @ self._check_point(x)) % 1.0

    def evaluate_many(self, points):
        return (np.asarray(points, float) @ self.matrix.T) % 1.0

    def inverse_evaluate(self, x):
        return (self.inverse_matrix @ self._check_point(x)) % 1.0

    def differential(self, x) -> np.ndarray:
        return self.matrix.astype(float)

    def to_dict(self) -> dict:
        return {**super().to_dict(), "matrix": self.matrix.tolist()}


class StandardMap(TorusSystem):
    """y′ = y + (K/2π) sin 2πx，x′ = x + y′（均模 1）

    微分 [[1 + K cos 2πx, 1], [K cos 2πx, 1]]，坐标顺序 (x, y)。
    """
    kind = "standard-map"
    conservative = True
    dim = 2

    def __init__(self, K: float):
        self.K = float(K)

    def evaluate_many(self, points):
        points = np.asarray(points, float)
        x, y = points[:, 0], points[:, 1]
        y_new = y + self.K / TWO_PI * np.sin(TWO_PI * x)
        return np.stack([(x + y_new) % 1.0, y_new % 1.0], axis=1)

    def evaluate(self, x):
        return self.evaluate_many(self._check_point(x)[None, :])[0]

    def inverse_evaluate(self, x):
        x_new, y_new = self._check_point(x)
        x_old = (x_new - y_new) % 1.0
        y_old = (y_new - self.K / TWO_PI * math.sin(TWO_PI * x_old)) % 1.0
        return np.array([x_old, y_old])

    def differential(self, x) -> np.ndarray:
        c = self.K * math.cos(TWO_PI * self._check_point(x)[0])
        return np.array([[1.0 + c, 1.0], [c, 1.0]])

    def to_dict(self) -> dict:
        return {**super().to_dict(), "K": self.K}


class Rotation(TorusSystem):
    kind = "rotation"
    conservative = True

    def __init__(self, angles: Sequence[float]):
        self.angles = np.atleast_1d(np.asarray(angles, dtype=float))
        self.dim = self.angles.shape[0]

    def evaluate(self, x):
        return (self._check_point(x) + self.angles) % 1.0

    def evaluate_many(self, points):
        return (np.asarray(points, float) + self.angles) % 1.0

    def inverse_evaluate(self, x):
        return (self._check_point(x) - self.angles) % 1.0

    def differential(self, x) -> np.ndarray:
        return np.eye(self.dim)

    def to_dict(self) -> dict:
        return {**super().to_dict(), "angles": self.angles.tolist()}


class ShiftSystem(DynamicalSystem):
    """有限型子移位上的左移 σ"""
    kind = "shift"
    dim = 0

    def __init__(self, matrix: TransitionMatrix):
        self.matrix = matrix

    def evaluate(self, x: ShiftPoint) -> ShiftPoint:
        return x.shift(1)

    def inverse_evaluate(self, x: ShiftPoint) -> ShiftPoint:
        return x.shift(-1)

    def differential(self, x) -> np.ndarray:
        raise PreconditionError("移位空间没有微分")

    def as_sampled(self, grid_side: Optional[int] = None, sample_count: int = 4096) -> SymbolicSampledSystem:
        return SymbolicSampledSystem(self.matrix, name=self.kind)

    def to_dict(self) -> dict:
        return {**super().to_dict(), "matrix": [list(row) for row in self.matrix.entries]}


class AffineHorseshoeSystem(DynamicalSystem):
    """马蹄模型的一次回归，归一化坐标卡 [−1,1]^{d0} 内求值"""
    kind = "affine-horseshoe"

    def __init__(self, model: AffineHorseshoeModel):
        self.model = model
        self.dim = model.d0
        self.conservative = model.params.conservative

    def _check_chart(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.shape != (self.dim,):
            raise PreconditionError(f"点的维数应为 {self.dim}: {u.shape}")
        if np.any(np.abs(u) > 1.0 + config.CONTAINMENT_SLACK):
            raise OutOfChartError(f"点不在坐标卡 [−1,1]^{self.dim} 内: {u}")
        return u

    def evaluate(self, u):
        return self.model.return_map(self._check_chart(u))

    def inverse_evaluate(self, z):
        _, u = self.model.branch_map.inverse(self._check_chart(z))
        return self._check_chart(u)

    def differential(self, u) -> np.ndarray:
        """一般公式；在分支窗口内 Φ′ = 1 给出分支的线性部分"""
        u = self._check_chart(u)
        model = self.model
        bm = model.branch_map
        k, d0 = model.params.k, self.dim
        jac = np.zeros((d0, d0))
        for i in range(d0):
            jac[i, bm.source[i]] = bm.sign[i] * math.exp(bm.log_coef[i])
        r, a_coef = model.raw_coefficients()
        ck = math.exp(bm.log_coef[k])
        if model.switched_off:
            c1 = phi_prime = 0.0
        else:
            c1 = math.exp(bm.log_coef[0])
            phi_prime = float(model.profile.derivative(model.L * (r * u[d0 - 1] + c1 * u[k - 1])))
        jac[0, :] = 0.0
        jac[k, :] = 0.0
        jac[0, d0 - 1] += r * (1.0 - phi_prime)
        jac[0, k - 1] += c1 * (2.0 - phi_prime)
        jac[k, d0 - 1] += -ck * phi_prime * r
        jac[k, k - 1] += a_coef - ck * phi_prime * c1
        return jac

    def to_dict(self) -> dict:
        return {**super().to_dict(), "L": str(self.model.L), "params": self.model.params.to_dict()}


def build_system(doc: dict) -> DynamicalSystem:
    """由 {"kind": ..., "params": {...}} 构造系统"""
    if not isinstance(doc, dict) or "kind" not in doc:
        raise SchemaError("系统描述缺少 kind", "kind")
    kind = doc["kind"]
    params = doc.get("params", {})
    if not isinstance(params, dict):
        raise SchemaError("params 必须是对象", "params")
    try:
        if kind == "toral-automorphism":
            return ToralAutomorphism(params["matrix"])
        if kind == "standard-map":
            return StandardMap(params["K"])
        if kind == "rotation":
            return Rotation(params.get("angles", params.get("angle")))
        if kind == "shift":
            return ShiftSystem(TransitionMatrix.from_list(params["matrix"], "params.matrix"))
        if kind == "affine-horseshoe":
            p = ConstructionParams.from_dict(params["construction"])
            s = derive_scales(p, params.get("lFactor"))
            if params.get("lCap") is not None:
                s = s.capped(int(params["lCap"]))
            return AffineHorseshoeSystem(assemble_model(p, s))
    except KeyError as e:
        raise SchemaError("系统参数缺少字段", f"params.{e.args[0]}") from e
    except TypeError as e:
        raise SchemaError(f"系统参数类型错误: {e}", "params") from e
    raise SchemaError(f"未知的系统类型: {kind}", "kind")


def cantor_horseshoe_cloud(branches: int = 2, contraction: float = 1.0 / 3.0, depth: int = 8,
                           dim: int = 2) -> np.ndarray:
    """共形仿射马蹄的极限集: dim 个一维 Cantor 集之积，取第 depth 层区间的中心"""
    if branches < 2 or not 0.0 < contraction * branches <= 1.0:
        raise PreconditionError(f"需要 branches ≥ 2 且 branches·contraction ≤ 1: {branches}, {contraction}")
    if depth < 1 or dim < 1:
        raise PreconditionError(f"depth 与 dim 必须 ≥ 1: {depth}, {dim}")
    step = (1.0 - contraction) / (branches - 1)
    left = np.zeros(1)
    for level in range(depth):
        offsets = np.arange(branches) * step * contraction ** level
        left = (left[:, None] + offsets[None, :]).ravel()
    centers = left + contraction ** depth / 2.0
    mesh = np.meshgrid(*([centers] * dim), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)
