"""
仿射马蹄模型

物理坐标下按顺序复合的各段：ℓ 步线性伸缩、第一剪切、n 步、转移置换、振荡、n 步、
第二剪切加平移。归一化坐标 u_i = x_i/δ_i 下，回归映射在每个分支上是闭式仿射的。
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .. import config
from ..core.errors import NumericalError, OutOfChartError, PreconditionError, RangeError
from ..core.linalg import cyclic_shift_matrix
from .oscillation import OscillationProfile
from .params import ConstructionParams
from .scales import DerivedScales, derive_scales

logger = logging.getLogger(__name__)

# 超过该 L 时切片宽度低于双精度分辨率，无法逐点求值
POINTWISE_L_LIMIT = 2 ** 52


@dataclass(frozen=True)
class AffinePiece:
    name: str
    matrix: np.ndarray
    offset: np.ndarray
    repeat: int = 1
    steps: int = 0

    def apply(self, x: np.ndarray) -> np.ndarray:
        for _ in range(self.repeat):
            x = self.matrix @ x + self.offset
        return x

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        return np.linalg.matrix_power(self.matrix, self.repeat)

    @property
    def log_abs_det(self) -> float:
        sign, logdet = np.linalg.slogdet(self.matrix)
        if sign == 0:
            return -math.inf
        return self.repeat * float(logdet)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": "affine",
            "matrix": self.matrix.tolist(),
            "offset": self.offset.tolist(),
            "repeat": self.repeat,
            "steps": self.steps,
        }


@dataclass(frozen=True)
class OscillationPiece:
    """x_out −= A·Φ(B·x_in)，A·B = η"""
    name: str
    coordinate_in: int
    coordinate_out: int
    log_amplitude: float
    log_inner: float
    profile: OscillationProfile
    steps: int = 0

    @property
    def active(self) -> bool:
        return self.log_amplitude > -math.inf

    def apply(self, x: np.ndarray) -> np.ndarray:
        if not self.active:
            return x
        x = x.copy()
        arg = math.exp(self.log_inner) * x[self.coordinate_in]
        x[self.coordinate_out] -= math.exp(self.log_amplitude) * float(self.profile(arg))
        return x

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        jac = np.eye(x.shape[0])
        if self.active:
            arg = math.exp(self.log_inner) * x[self.coordinate_in]
            slope = math.exp(self.log_amplitude + self.log_inner)
            jac[self.coordinate_out, self.coordinate_in] = -slope * float(self.profile.derivative(arg))
        return jac

    @property
    def log_abs_det(self) -> float:
        # 单位下三角
        return 0.0

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": "oscillation",
            "coordinateIn": self.coordinate_in,
            "coordinateOut": self.coordinate_out,
            "logAmplitude": self.log_amplitude if self.active else None,
            "logInnerScale": self.log_inner,
            "L": str(self.profile.L) if self.profile.L.bit_length() > 53 else self.profile.L,
            "supNorm": self.profile.sup_norm,
            "derivativeBound": self.profile.derivative_bound,
            "branch": "|s - j| <= 1/4 (j = 0..L-1), s = exp(logInnerScale) * x[coordinateIn]",
            "steps": self.steps,
        }


@dataclass(frozen=True)
class BranchMap:
    """归一化坐标下分支 j 的闭式: z_i = sign_i·e^{g_i}·(u_{src_i} − shift_i·j/L) + offset_i (+ j/L 于坐标 0)"""
    source: Tuple[int, ...]
    log_coef: Tuple[float, ...]
    sign: Tuple[int, ...]
    shifted: Tuple[bool, ...]
    offset: Tuple[float, ...]
    L: int

    @property
    def dim(self) -> int:
        return len(self.source)

    def branch_offset(self, i: int, j: int) -> float:
        base = self.offset[i]
        return base + j / self.L if i == 0 else base

    def apply(self, j: int, u: np.ndarray) -> np.ndarray:
        z = np.empty(self.dim)
        for i in range(self.dim):
            v = u[self.source[i]]
            if self.shifted[i]:
                v = v - j / self.L
            z[i] = self.sign[i] * math.exp(self.log_coef[i]) * v + self.branch_offset(i, j)
        return z

    def inverse(self, z: np.ndarray) -> Tuple[int, np.ndarray]:
        """由坐标 0 读出分支 j 并逐坐标回解"""
        j = int(round(self.L * (z[0] - self.offset[0])))
        if not 0 <= j < self.L:
            raise OutOfChartError(f"逆像不在任何分支内: j={j}")
        u = np.empty(self.dim)
        for i in range(self.dim):
            v = (z[i] - self.branch_offset(i, j)) / (self.sign[i] * math.exp(self.log_coef[i]))
            if self.shifted[i]:
                v = v + j / self.L
            u[self.source[i]] = v
        return j, u

    def to_dict(self) -> dict:
        return {
            "source": list(self.source),
            "logCoefficient": list(self.log_coef),
            "sign": list(self.sign),
            "shifted": list(self.shifted),
            "offset": list(self.offset),
        }


def _normalized_offset(a: float, log_side: float) -> float:
    if a == 0.0:
        return 0.0
    log_value = math.log(abs(a)) - log_side
    if log_value > config.LOG_RANGE_LIMIT:
        raise RangeError(f"平移 a/δ_i 超出可表示范围: log = {log_value:.3g}")
    return math.copysign(math.exp(log_value), a)


def build_branch_map(p: ConstructionParams, s: DerivedScales) -> BranchMap:
    d0, k, lam, n = p.d0, p.k, p.lam, p.n
    cap, sides = s.log_lambda_cap, s.log_delta_sides
    source, log_coef, sign, shifted = [], [], [], []
    for i in range(d0):
        if i == 0:
            source.append(k - 1)
            log_coef.append(-math.log(p.eta) + n * (lam[0] - lam[k]) + cap[k - 1] + sides[k - 1] - s.log_delta)
            sign.append(1)
            shifted.append(False)
        elif i == k:
            source.append(d0 - 1)
            log_coef.append(math.log(p.eta) + n * (lam[k] - lam[0]) + s.log_delta - sides[k])
            sign.append(-1)
            shifted.append(True)
        else:
            source.append(i - 1)
            log_coef.append(cap[i - 1] + sides[i - 1] - sides[i])
            sign.append(1)
            shifted.append(False)
    offset = tuple(_normalized_offset(p.translation[i], sides[i]) for i in range(d0))
    return BranchMap(tuple(source), tuple(log_coef), tuple(sign), tuple(shifted), offset, s.L)


@dataclass(frozen=True)
class AffineHorseshoeModel:
    params: ConstructionParams
    scales: DerivedScales
    pieces: Tuple[object, ...]
    branch_map: BranchMap
    switched_off: bool = False
    profile: OscillationProfile = field(default=None)

    @property
    def d0(self) -> int:
        return self.params.d0

    @property
    def L(self) -> int:
        return self.scales.L

    def step_through(self, x) -> np.ndarray:
        """物理坐标下逐段复合（ℓ 较小时使用）"""
        x = np.asarray(x, dtype=float).copy()
        if x.shape != (self.d0,):
            raise PreconditionError(f"点的维数应为 {self.d0}: {x.shape}")
        for piece in self.pieces:
            x = piece.apply(x)
        if not np.all(np.isfinite(x)):
            raise NumericalError("逐段复合溢出")
        return x

    def step_jacobian(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).copy()
        jac = np.eye(self.d0)
        for piece in self.pieces:
            jac = piece.jacobian(x) @ jac
            x = piece.apply(x)
        return jac

    def to_normalized(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) / np.exp(np.array(self.scales.log_delta_sides))

    def to_physical(self, u) -> np.ndarray:
        return np.asarray(u, dtype=float) * np.exp(np.array(self.scales.log_delta_sides))

    def raw_coefficients(self):
        p, s = self.params, self.scales
        cap, sides = s.log_lambda_cap, s.log_delta_sides
        k, d0 = p.k, p.d0
        r = math.exp(cap[d0 - 1] + sides[d0 - 1] - s.log_delta)
        a_coef = math.exp(cap[k - 1] + sides[k - 1] - sides[k])
        return r, a_coef

    def return_map(self, u) -> np.ndarray:
        """归一化坐标下的一次回归 f^T"""
        if self.L > POINTWISE_L_LIMIT:
            raise RangeError(f"L = {self.L} 过大，切片宽度低于双精度分辨率")
        u = np.asarray(u, dtype=float)
        if u.shape != (self.d0,):
            raise PreconditionError(f"点的维数应为 {self.d0}: {u.shape}")
        if np.any(np.abs(u) > 1.0 + config.CONTAINMENT_SLACK):
            raise OutOfChartError(f"点不在 [−1,1]^{self.d0} 内: {u}")
        k, d0 = self.params.k, self.d0
        bm = self.branch_map
        c1 = math.exp(bm.log_coef[0])
        ck = math.exp(bm.log_coef[k])
        r, a_coef = self.raw_coefficients()
        if self.switched_off:
            c1 = phi = 0.0
        else:
            arg = self.L * (r * u[d0 - 1] + c1 * u[k - 1])
            j = int(self.profile.branch_index(arg))
            if j >= 0:
                return bm.apply(j, u)
            phi = float(self.profile(arg))
        z = bm.apply(0, u)
        z[0] = r * u[d0 - 1] + 2.0 * c1 * u[k - 1] - phi / self.L + bm.offset[0]
        z[k] = a_coef * u[k - 1] - ck * phi / self.L + bm.offset[k]
        return z

    def piece_determinants(self) -> List[Tuple[str, float]]:
        """每段的 log|det|"""
        return [(piece.name, piece.log_abs_det) for piece in self.pieces]

    def volume_defect(self) -> float:
        return max(abs(v) for _, v in self.piece_determinants())

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "scales": self.scales.to_dict(),
            "switchedOff": self.switched_off,
            "pieces": [piece.to_dict() for piece in self.pieces],
            "branchMap": self.branch_map.to_dict(),
            "pieceLogDeterminants": {name: value for name, value in self.piece_determinants()},
        }


def _linear_step(lam, repeat: int, name: str) -> AffinePiece:
    d0 = len(lam)
    return AffinePiece(name, np.diag(np.exp(np.array(lam))), np.zeros(d0), repeat=repeat, steps=repeat)


def assemble_model(p: ConstructionParams, s: Optional[DerivedScales] = None,
                   switch_off: bool = False) -> AffineHorseshoeModel:
    """组装仿射马蹄模型

    Args:
        p: 构造参数（μ_i 必须为正）
        s: 派生尺度，缺省时由 derive_scales(p) 计算
        switch_off: 关闭两个剪切与振荡，只保留线性部分与平移

    Returns:
        AffineHorseshoeModel
    """
    if any(m <= 0.0 for m in p.mu):
        raise PreconditionError("组装模型要求 μ_i > 0（转移的定向与切片编号一致）")
    s = s or derive_scales(p)
    d0, k, lam, n = p.d0, p.k, p.lam, p.n
    profile = OscillationProfile(s.L)

    shear1 = np.eye(d0)
    shear2 = np.eye(d0)
    if not switch_off:
        shear1[d0 - 1, k - 1] = (math.exp(n * (lam[k - 1] - lam[d0 - 1]) - math.log(p.eta))
                                 * p.mu[k - 1] / p.mu[d0 - 1])
        shear2[0, k] = math.exp(n * (lam[0] - lam[k]) - math.log(p.eta))
    transit = cyclic_shift_matrix(d0) @ np.diag(p.mu)
    log_amplitude = -math.inf if switch_off else math.log(p.eta) - n * lam[0] + s.log_delta - s.log_L

    pieces = (
        _linear_step(lam, p.ell, "linear-ell"),
        AffinePiece("shear-1", shear1, np.zeros(d0)),
        _linear_step(lam, n, "linear-n-1"),
        AffinePiece("transit", transit, np.zeros(d0), steps=p.m),
        OscillationPiece("oscillation", 0, k, log_amplitude, n * lam[0] + s.log_L - s.log_delta, profile),
        _linear_step(lam, n, "linear-n-2"),
        AffinePiece("shear-2", shear2, np.array(p.translation)),
    )
    bm = build_branch_map(p, s)
    logger.info(f"组装马蹄模型: d0={d0}, k={k}, L={s.L}, 回归时间 T={p.return_time}, switch_off={switch_off}")
    return AffineHorseshoeModel(p, s, pieces, bm, switched_off=switch_off, profile=profile)
