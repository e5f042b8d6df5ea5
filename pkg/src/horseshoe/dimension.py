"""
共形马蹄的 Hausdorff 维数
"""
import logging
from dataclasses import dataclass

from ..core.errors import PreconditionError
from ..exponents.functionals import delta
from .params import ConstructionParams
from .scales import DerivedScales

logger = logging.getLogger(__name__)


def conformal_hausdorff_dimension(h: float, lam_s: float, lam_u: float) -> float:
    """dim = h/|λ^s| + h/λ^u，稳定/不稳定方向均为共形"""
    if h < 0.0:
        raise PreconditionError(f"熵不能为负: {h}")
    if lam_s >= 0.0 or lam_u <= 0.0:
        raise PreconditionError(f"需要 λ^s < 0 < λ^u: λ^s={lam_s}, λ^u={lam_u}")
    return h / abs(lam_s) + h / lam_u


@dataclass(frozen=True)
class ModelDimension:
    stable: float
    unstable: float

    @property
    def total(self) -> float:
        return self.stable + self.unstable

    def to_dict(self) -> dict:
        return {"stable": self.stable, "unstable": self.unstable, "total": self.total}


def model_dimension(p: ConstructionParams, s: DerivedScales) -> ModelDimension:
    """模型马蹄的 (d^s, d^u)

    齐次伸缩后 λ^s = −Δ⁻/k, λ^u = Δ⁺/(d0−k)。
    d^u = (d0−k)·h/Δ⁺，ℓ → ∞ 时 h → Δ，d^u → d0−k。
    """
    report = delta(p.spectrum)
    lam_s = -report.delta_minus / p.k
    lam_u = report.delta_plus / (p.d0 - p.k)
    h = s.entropy
    conformal_hausdorff_dimension(h, lam_s, lam_u)
    return ModelDimension(stable=h / abs(lam_s), unstable=h / lam_u)
