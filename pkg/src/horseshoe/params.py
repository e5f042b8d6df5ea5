"""
马蹄构造的输入参数与预处理目标
"""
import logging
import math
from dataclasses import dataclass, asdict
from typing import Optional, Tuple

import numpy as np

from ..core.errors import PreconditionError, SchemaError
from ..core.linalg import ExponentSpectrum, cyclic_shift_matrix
from ..exponents.functionals import delta

logger = logging.getLogger(__name__)

_HOMOTHETY_TOL = 1e-12


@dataclass(frozen=True)
class ConstructionParams:
    """构造参数 (λ_i, μ_i, η, ρ, n, ℓ, m, k, C) 与平移向量 a

    λ 必须已经预处理为齐次伸缩: 稳定块常数且为负，不稳定块常数且为正。
    """
    d0: int
    k: int
    lam: Tuple[float, ...]
    mu: Tuple[float, ...]
    eta: float
    rho: float
    n: int
    ell: int
    m: int
    c_bound: float
    translation: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "lam", tuple(float(x) for x in self.lam))
        object.__setattr__(self, "mu", tuple(float(x) for x in self.mu))
        if self.translation is None:
            object.__setattr__(self, "translation", tuple(0.0 for _ in range(self.d0)))
        else:
            object.__setattr__(self, "translation", tuple(float(x) for x in self.translation))
        self.validate()

    def validate(self):
        d0, k = self.d0, self.k
        if d0 < 2 or not 1 <= k < d0:
            raise PreconditionError(f"需要 d0 ≥ 2 且 1 ≤ k < d0: d0={d0}, k={k}")
        for name in ("lam", "mu", "translation"):
            if len(getattr(self, name)) != d0:
                raise PreconditionError(f"{name} 的长度应为 d0={d0}")
        stable, unstable = self.lam[:k], self.lam[k:]
        if not (stable[0] < 0 < unstable[0]):
            raise PreconditionError(f"λ 不是鞍型: 稳定块 {stable}, 不稳定块 {unstable}")
        if max(stable) - min(stable) > _HOMOTHETY_TOL or max(unstable) - min(unstable) > _HOMOTHETY_TOL:
            raise PreconditionError("λ 未预处理为齐次伸缩（稳定块/不稳定块需各自为常数）")
        if any(m == 0.0 for m in self.mu):
            raise PreconditionError("μ_i 必须非零")
        if not 0.0 < self.eta < 1.0:
            raise PreconditionError(f"η 必须在 (0, 1) 内: {self.eta}")
        if self.rho <= 0.0:
            raise PreconditionError(f"ρ 必须为正: {self.rho}")
        if min(self.n, self.ell, self.m) < 1:
            raise PreconditionError(f"n, ℓ, m 必须 ≥ 1: n={self.n}, ℓ={self.ell}, m={self.m}")
        worst = max(max(abs(m), 1.0 / abs(m)) for m in self.mu)
        if self.c_bound <= 0.0 or worst > self.c_bound * (1.0 + 1e-12):
            raise PreconditionError(f"C={self.c_bound} 不能界住 max(|μ_i|, |μ_i|⁻¹) = {worst}")

    @property
    def return_time(self) -> int:
        return self.ell + self.m + 2 * self.n

    @property
    def spectrum(self) -> ExponentSpectrum:
        return ExponentSpectrum(self.lam)

    @property
    def conservative(self) -> bool:
        """Σλ = 0 且 ∏|μ| = 1 时构造保体积"""
        return (abs(sum(self.lam)) <= 1e-12
                and abs(sum(math.log(abs(m)) for m in self.mu)) <= 1e-12)

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["lam"] = list(self.lam)
        doc["mu"] = list(self.mu)
        doc["translation"] = list(self.translation)
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "ConstructionParams":
        """解析参数文档；lambda/lam、C/Cbound/c_bound 均可"""
        aliases = {"lambda": "lam", "Cbound": "c_bound", "C": "c_bound", "a": "translation"}
        data = {aliases.get(key, key): value for key, value in doc.items()}
        required = ("d0", "k", "lam", "mu", "eta", "rho", "n", "ell", "m", "c_bound")
        for key in required:
            if key not in data:
                raise SchemaError("构造参数缺少字段", key)
        unknown = set(data) - set(required) - {"translation"}
        if unknown:
            raise SchemaError("构造参数含未知字段", sorted(unknown)[0])
        try:
            return cls(
                d0=int(data["d0"]), k=int(data["k"]),
                lam=tuple(data["lam"]), mu=tuple(data["mu"]),
                eta=float(data["eta"]), rho=float(data["rho"]),
                n=int(data["n"]), ell=int(data["ell"]), m=int(data["m"]),
                c_bound=float(data["c_bound"]),
                translation=tuple(data["translation"]) if data.get("translation") is not None else None,
            )
        except (TypeError, ValueError) as e:
            if isinstance(e, PreconditionError):
                raise
            raise SchemaError(f"构造参数类型错误: {e}") from e


@dataclass(frozen=True)
class PreparationTargets:
    stable_factor: float
    unstable_factor: float
    permutation: np.ndarray


def preparation_targets(spec: ExponentSpectrum, k: int) -> PreparationTargets:
    """齐次伸缩因子 exp(−Δ⁻/k)、exp(Δ⁺/(d₀−k)) 与循环置换矩阵"""
    d0 = spec.dim
    if not 1 <= k < d0:
        raise PreconditionError(f"需要 1 ≤ k < d₀: k={k}, d₀={d0}")
    report = delta(spec)
    if report.delta_minus == 0.0 or report.delta_plus == 0.0:
        raise PreconditionError("轨道不是鞍型: Δ⁻ 或 Δ⁺ 为 0")
    return PreparationTargets(
        stable_factor=math.exp(-report.delta_minus / k),
        unstable_factor=math.exp(report.delta_plus / (d0 - k)),
        permutation=cyclic_shift_matrix(d0),
    )


def prepare_params(spec: ExponentSpectrum, k: int, eta: float, rho: float, n: int, ell: int, m: int,
                   mu: Optional[Tuple[float, ...]] = None, c_bound: float = 1.0) -> ConstructionParams:
    """由任意鞍型谱生成齐次伸缩化的构造参数（μ 缺省为 1）"""
    targets = preparation_targets(spec, k)
    lam_s = math.log(targets.stable_factor)
    lam_u = math.log(targets.unstable_factor)
    lam = tuple([lam_s] * k + [lam_u] * (spec.dim - k))
    mu = mu or tuple(1.0 for _ in range(spec.dim))
    return ConstructionParams(d0=spec.dim, k=k, lam=lam, mu=mu, eta=eta, rho=rho,
                              n=n, ell=ell, m=m, c_bound=c_bound)
