"""
线性代数核心

周期余环乘积、周期谱、Grassmann 雅可比、外幂范数、辛检查与 Lagrange 子空间的标准化。
所有增长量都在对数域中计算，不直接形成 A^n。
"""
import logging
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from .. import config
from .errors import NumericalError, PreconditionError, RangeError, SchemaError

logger = logging.getLogger(__name__)


def as_square_matrix(entries, name: str = "matrix") -> np.ndarray:
    """把输入转换为有限的 d₀×d₀ 浮点矩阵"""
    m = np.array(entries, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise PreconditionError(f"{name} 必须是非空方阵, 实际形状 {m.shape}")
    if not np.all(np.isfinite(m)):
        raise PreconditionError(f"{name} 含有非有限元素")
    return m


@dataclass(frozen=True)
class PeriodicCocycle:
    """周期为 ℓ 的可逆矩阵序列 A_1..A_ℓ（沿周期轨道的切映射）"""
    factors: Tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.factors) == 0:
            raise PreconditionError("余环至少需要一个因子")
        mats = tuple(as_square_matrix(f, f"factors[{i}]") for i, f in enumerate(self.factors))
        dim = mats[0].shape[0]
        for i, m in enumerate(mats):
            if m.shape[0] != dim:
                raise PreconditionError(f"factors[{i}] 维数 {m.shape[0]} 与 {dim} 不一致")
            sv = scipy.linalg.svdvals(m)
            if sv[-1] <= sv[0] * config.RANK_TOL:
                raise PreconditionError(f"factors[{i}] 不可逆 (最小奇异值 {sv[-1]:.3e})")
            m.setflags(write=False)
        object.__setattr__(self, "factors", mats)

    @property
    def period(self) -> int:
        return len(self.factors)

    @property
    def dim(self) -> int:
        return self.factors[0].shape[0]

    def factor(self, step: int) -> np.ndarray:
        """第 step 步（从0计）使用的因子"""
        return self.factors[step % self.period]

    def rotated(self, shift: int) -> "PeriodicCocycle":
        """循环平移因子序列"""
        s = shift % self.period
        return PeriodicCocycle(self.factors[s:] + self.factors[:s])

    def repeated(self, times: int) -> "PeriodicCocycle":
        """把同一周期重复 times 次"""
        return PeriodicCocycle(self.factors * times)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "period": self.period,
            "factors": [f.tolist() for f in self.factors],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PeriodicCocycle":
        """按 {"dim", "period", "factors"} 格式解析"""
        for key in ("dim", "period", "factors"):
            if key not in doc:
                raise SchemaError("余环文档缺少字段", key)
        dim, period, raw = doc["dim"], doc["period"], doc["factors"]
        if not isinstance(raw, list) or len(raw) != period:
            raise SchemaError(f"factors 长度应为 period={period}", "factors")
        factors = []
        for i, f in enumerate(raw):
            arr = np.array(f, dtype=float)
            if arr.size != dim * dim:
                raise SchemaError(f"因子应有 {dim * dim} 个元素", f"factors[{i}]")
            factors.append(arr.reshape(dim, dim))
        return cls(tuple(factors))


@dataclass(frozen=True)
class SubspaceBasis:
    """子空间的列基（d₀×k）"""
    vectors: np.ndarray

    def __post_init__(self):
        v = np.array(self.vectors, dtype=float)
        if v.ndim == 1:
            v = v.reshape(-1, 1)
        if v.ndim != 2 or not 1 <= v.shape[1] <= v.shape[0]:
            raise PreconditionError(f"子空间基形状非法: {v.shape}")
        sv = scipy.linalg.svdvals(v)
        if sv[-1] <= max(sv[0], 1.0) * config.RANK_TOL:
            raise PreconditionError(f"子空间基秩亏 (最小奇异值 {sv[-1]:.3e})")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @property
    def ambient_dim(self) -> int:
        return self.vectors.shape[0]

    @property
    def k(self) -> int:
        return self.vectors.shape[1]

    def orthonormal(self) -> np.ndarray:
        q, _ = np.linalg.qr(self.vectors)
        return q


def _check_log_range(log_value: float, what: str):
    if log_value > config.LOG_RANGE_LIMIT:
        raise RangeError(f"{what} 的对数量级 {log_value:.1f} 超出可表示范围，请使用对数域运算")


def cocycle_product(c: PeriodicCocycle, n: int) -> np.ndarray:
    """n 步乘积 A_n…A_1（循环使用因子）

    Args:
        c: 周期余环
        n: 步数, n=0 时返回单位阵

    Returns:
        乘积矩阵
    """
    if n < 0:
        raise PreconditionError(f"步数必须非负: {n}")
    bound = sum(math.log(np.linalg.norm(c.factor(i), 2)) for i in range(n))
    _check_log_range(bound, f"{n} 步乘积")
    product = np.eye(c.dim)
    for i in range(n):
        product = c.factor(i) @ product
    return product


def log_cocycle_product(c: PeriodicCocycle, n: int, start: int = 0) -> Tuple[np.ndarray, float]:
    """对数域乘积: 返回 (M, s) 使 A_{start+n}…A_{start+1} = e^s · M 且 ‖M‖₂ = 1"""
    if n < 0:
        raise PreconditionError(f"步数必须非负: {n}")
    product = np.eye(c.dim)
    log_scale = 0.0
    for i in range(n):
        product = c.factor(start + i) @ product
        norm = np.linalg.norm(product, 2)
        product = product / norm
        log_scale += math.log(norm)
    return product, log_scale


def _qr_sweep(c: PeriodicCocycle, q: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """沿周期做一轮 QR: A_ℓ…A_1·Q₀ = Q_ℓ·R_ℓ…R_1

    Returns:
        (Q_ℓ, Σ log|diag R_i|, 归一化的 R_ℓ…R_1, 其对数尺度)
    """
    log_diag = np.zeros(c.dim)
    r_total = np.eye(c.dim)
    log_scale = 0.0
    for a in c.factors:
        q, r = np.linalg.qr(a @ q)
        with np.errstate(divide="ignore"):
            log_diag += np.log(np.abs(np.diag(r)))
        r_total = r @ r_total
        norm = np.linalg.norm(r_total, 2)
        r_total = r_total / norm
        log_scale += math.log(norm)
    if not np.all(np.isfinite(log_diag)):
        raise NumericalError("周期乘积出现零特征值")
    return q, log_diag, r_total, log_scale


def _settled_log_moduli(previous: np.ndarray, current: np.ndarray) -> Optional[np.ndarray]:
    """相邻两轮对角对数一致则返回结果; 连续不稳定的下标（复共轭块）取块内和的平均"""
    tol = config.PERIOD_SWEEP_TOL
    steady = np.abs(current - previous) <= tol * np.maximum(1.0, np.abs(current))
    result = current.copy()
    i = 0
    while i < len(current):
        if steady[i]:
            i += 1
            continue
        j = i
        while j < len(current) and not steady[j]:
            j += 1
        total = float(current[i:j].sum())
        if j - i < 2 or abs(total - float(previous[i:j].sum())) > tol * max(1.0, abs(total)):
            return None
        result[i:j] = total / (j - i)
        i = j
    return result


def period_log_moduli(c: PeriodicCocycle) -> np.ndarray:
    """周期乘积 A_ℓ…A_1 各特征值模长的对数

    对数模长跨度不超过 config.DIRECT_EIG_SPREAD 时直接求相似矩阵 R·Q_ℓ 的平衡特征值;
    否则做周期 QR 迭代（Q_ℓ 回绕为下一轮的 Q₀），不组装乘积矩阵，避免小特征值下溢。
    """
    q, log_diag, r_total, log_scale = _qr_sweep(c, np.eye(c.dim))
    if log_diag.max() - log_diag.min() <= config.DIRECT_EIG_SPREAD:
        similar = r_total @ q
        try:
            balanced, _ = scipy.linalg.matrix_balance(similar, permute=True, scale=True)
            eig = scipy.linalg.eigvals(balanced)
        except (np.linalg.LinAlgError, ValueError) as e:
            raise NumericalError(f"特征值求解失败: {e}") from e
        if not np.all(np.isfinite(eig)):
            raise NumericalError("特征值求解产生非有限结果")
        moduli = np.abs(eig)
        if np.any(moduli == 0.0):
            raise NumericalError("周期乘积出现零特征值")
        return np.log(moduli) + log_scale

    previous = log_diag
    for _ in range(config.PERIOD_MAX_SWEEPS):
        q, log_diag, _, _ = _qr_sweep(c, q)
        settled = _settled_log_moduli(previous, log_diag)
        if settled is not None:
            return settled
        previous = log_diag
    raise NumericalError(f"周期 QR 迭代 {config.PERIOD_MAX_SWEEPS} 轮后对角对数仍未稳定")


@dataclass(frozen=True)
class ExponentSpectrum:
    """非降排序的 Lyapunov 指数（nats/步）"""
    exponents: Tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(x) for x in self.exponents)
        if len(values) == 0:
            raise PreconditionError("指数谱不能为空")
        if any(not math.isfinite(x) for x in values):
            raise PreconditionError("指数谱含非有限值")
        if any(b < a for a, b in zip(values, values[1:])):
            raise PreconditionError(f"指数谱必须非降排序: {values}")
        object.__setattr__(self, "exponents", values)

    @classmethod
    def of(cls, values: Iterable[float]) -> "ExponentSpectrum":
        return cls(tuple(sorted(float(v) for v in values)))

    @property
    def dim(self) -> int:
        return len(self.exponents)

    def to_list(self) -> List[float]:
        return list(self.exponents)


def lyapunov_exponents_periodic(c: PeriodicCocycle) -> ExponentSpectrum:
    """周期点的 Lyapunov 指数: (1/ℓ)·log|eig(A_ℓ…A_1)|，按代数重数排序"""
    exps = period_log_moduli(c) / c.period
    return ExponentSpectrum.of(exps.tolist())


def grassmann_jacobian(m: np.ndarray, e: SubspaceBasis) -> float:
    """m 限制在 span(e) 上的 k 维体积膨胀因子 √det(BᵀMᵀMB)/√det(BᵀB)"""
    m = as_square_matrix(m)
    if e.ambient_dim != m.shape[0]:
        raise PreconditionError(f"子空间维数 {e.ambient_dim} 与矩阵维数 {m.shape[0]} 不一致")
    sv = scipy.linalg.svdvals(m @ e.orthonormal())
    return float(np.prod(sv))


def top_k_log_jacobian(m: np.ndarray, k: int) -> float:
    """前 k 个奇异值的对数和，等于 k 维子空间上 Jacobian 的上确界的对数"""
    m = as_square_matrix(m)
    d = m.shape[0]
    if not 0 <= k <= d:
        raise PreconditionError(f"k 必须在 0..{d} 之间: {k}")
    if k == 0:
        return 0.0
    try:
        sv = scipy.linalg.svdvals(m)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"奇异值分解失败: {e}") from e
    return float(np.sum(np.log(sv[:k])))


def sample_grassmannian(d: int, k: int, samples: int, seed: int) -> np.ndarray:
    """均匀抽样 k 维子空间: 高斯框架的 QR 正交化

    Returns:
        形状 (samples, d, k) 的正交标架数组
    """
    if not 1 <= k <= d:
        raise PreconditionError(f"k 必须在 1..{d} 之间: {k}")
    rng = np.random.default_rng(seed)
    frames = rng.standard_normal((samples, d, k))
    q, r = np.linalg.qr(frames)
    # 固定符号使分布与 QR 实现无关
    signs = np.sign(np.diagonal(r, axis1=1, axis2=2))
    signs[signs == 0] = 1.0
    return q * signs[:, None, :]


def max_sampled_jacobian(m: np.ndarray, k: int, samples: int = config.DEFAULT_GRASSMANN_SAMPLES,
                         seed: int = 0) -> float:
    """抽样子空间上 grassmann_jacobian 的最大值（采样预言机）"""
    m = as_square_matrix(m)
    frames = sample_grassmannian(m.shape[0], k, samples, seed)
    images = np.einsum("ij,sjk->sik", m, frames)
    sv = np.linalg.svd(images, compute_uv=False)
    return float(np.max(np.prod(sv, axis=1)))


def symplectic_form(d: int) -> np.ndarray:
    """J = [[0, I], [−I, 0]]"""
    eye = np.eye(d)
    zero = np.zeros((d, d))
    return np.block([[zero, eye], [-eye, zero]])


def symplectic_defect(m: np.ndarray) -> float:
    """‖MᵀJM − J‖₂，为 0 当且仅当 M 是辛矩阵"""
    m = as_square_matrix(m)
    if m.shape[0] % 2:
        raise PreconditionError(f"辛检查要求偶数维, 实际 {m.shape[0]}")
    j = symplectic_form(m.shape[0] // 2)
    return float(np.linalg.norm(m.T @ j @ m - j, 2))


def isotropy_defect(basis: np.ndarray) -> Tuple[float, Tuple[int, int]]:
    """max |ω(e_i, e_j)| 及其位置"""
    d = basis.shape[0] // 2
    omega = basis.T @ symplectic_form(d) @ basis
    idx = np.unravel_index(np.argmax(np.abs(omega)), omega.shape)
    return float(abs(omega[idx])), (int(idx[0]), int(idx[1]))


@dataclass(frozen=True)
class LagrangianNormalizer:
    """把 Lagrange 子空间送到 ℝ^d×{0}^d 的辛矩阵及其范数"""
    matrix: np.ndarray
    norm: float
    inverse_norm: float


def lagrangian_to_standard(basis: SubspaceBasis, tol: Optional[float] = None) -> LagrangianNormalizer:
    """构造辛矩阵 A 使 A·span(basis) = ℝ^d×{0}^d

    先用极分解把标架正交化为 Q = [X; Y]，U = X + iY 是酉矩阵，
    S = [[X, −Y], [Y, X]] 既正交又辛且 S·(ℝ^d×0) = L，取 A = Sᵀ。

    Args:
        basis: 2d×d 的基
        tol: ω(e_i, e_j) 的绝对容差

    Returns:
        LagrangianNormalizer，范数均为 1
    """
    tol = config.LAGRANGIAN_TOL if tol is None else tol
    b = np.asarray(basis.vectors)
    two_d, d = b.shape
    if two_d != 2 * d:
        raise PreconditionError(f"Lagrange 子空间需要 2d×d 的基, 实际 {b.shape}")
    defect, (i, j) = isotropy_defect(b)
    if defect > tol:
        raise PreconditionError(f"子空间不是 Lagrange 的: ω(e_{i + 1}, e_{j + 1}) = {defect:.3e}")
    q, _ = scipy.linalg.polar(b)
    unitary = q[:d] + 1j * q[d:]
    # 消去残余的非酉部分
    unitary, _ = scipy.linalg.polar(unitary)
    x, y = unitary.real, unitary.imag
    s = np.block([[x, -y], [y, x]])
    a = s.T
    return LagrangianNormalizer(
        matrix=a,
        norm=float(np.linalg.norm(a, 2)),
        inverse_norm=float(np.linalg.norm(s, 2)),
    )


def random_lagrangian_frame(d: int, seed: int) -> np.ndarray:
    """随机 Lagrange 标架: 随机酉矩阵的 [Re; Im] 再乘随机可逆矩阵"""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    u, _ = np.linalg.qr(z)
    frame = np.vstack([u.real, u.imag])
    return frame @ (rng.standard_normal((d, d)) + 2.0 * np.eye(d))


def principal_angle_sine(a: np.ndarray, b: np.ndarray) -> float:
    """两个同维子空间之间最大主角的正弦"""
    angles = scipy.linalg.subspace_angles(a, b)
    return float(np.sin(np.max(angles))) if angles.size else 0.0


def restricted_log_norms(m: np.ndarray, basis: np.ndarray) -> Tuple[float, float]:
    """m 在正交基张成子空间上的 log‖·‖ 与 log m(·)（最小伸缩）"""
    sv = scipy.linalg.svdvals(m @ basis)
    return float(math.log(sv[0])), float(math.log(sv[-1]))


def cyclic_shift_matrix(d: int) -> np.ndarray:
    """坐标循环置换 E_i → E_{i+1}（下标模 d）"""
    p = np.zeros((d, d))
    for i in range(d):
        p[(i + 1) % d, i] = 1.0
    return p


def stack_factors(factors: Sequence[np.ndarray]) -> PeriodicCocycle:
    return PeriodicCocycle(tuple(np.asarray(f, dtype=float) for f in factors))
