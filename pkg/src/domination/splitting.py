"""
控制分裂

沿周期余环判定候选分裂是否 N-控制，求最细控制分裂，并判别 T,N-弱轨道。
候选分裂只取周期乘积特征值模长簇之间的切分。
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import scipy.linalg

from .. import config
from ..core.errors import NumericalError, PreconditionError
from ..core.linalg import PeriodicCocycle, log_cocycle_product, principal_angle_sine
from ..exponents.functionals import SplittingLabel

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CandidateSplitting:
    """E ⊕ F，index = dim E；每个轨道点一组正交基"""
    index: int
    basis_e: Tuple[np.ndarray, ...]
    basis_f: Tuple[np.ndarray, ...]

    @property
    def dim(self) -> int:
        return self.basis_e[0].shape[0]


@dataclass(frozen=True)
class SplittingScan:
    """invariant_splittings 的结果，含无法分辨的切分位置"""
    candidates: Tuple[CandidateSplitting, ...]
    unresolvable: Tuple[int, ...] = ()

    def __iter__(self):
        return iter(self.candidates)

    def __len__(self):
        return len(self.candidates)

    @property
    def indices(self) -> List[int]:
        return [s.index for s in self.candidates]


@dataclass(frozen=True)
class DominationReport:
    index: int
    n_start: int
    horizon: int
    smallest_n: Optional[int]
    log_ratios: Dict[int, float] = field(default_factory=dict)
    certificate_period: Optional[int] = None

    @property
    def worst_ratio(self) -> Dict[int, float]:
        return {n: math.exp(v) for n, v in self.log_ratios.items()}

    @property
    def dominated(self) -> bool:
        """在 n_start 处 N-控制"""
        return self.smallest_n is not None and self.smallest_n <= self.n_start

    @property
    def status(self) -> str:
        if self.smallest_n is None:
            return "undetermined up to horizon"
        return "dominated" if self.dominated else "dominated from smallestN"

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "N": self.n_start,
            "horizon": self.horizon,
            "smallestN": self.smallest_n,
            "status": self.status,
            "certificatePeriod": self.certificate_period,
            "worstRatio": {str(n): r for n, r in self.worst_ratio.items()},
        }


def _invariant_basis(product: np.ndarray, threshold: float, below: bool) -> Tuple[np.ndarray, int]:
    """实 Schur 分解把模长在阈值一侧的特征值排到左上，返回对应的不变子空间"""
    if below:
        select = lambda re, im: math.hypot(re, im) < threshold  # noqa: E731
    else:
        select = lambda re, im: math.hypot(re, im) > threshold  # noqa: E731
    try:
        _, z, sdim = scipy.linalg.schur(product, output="real", sort=select)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalError(f"Schur 分解失败: {e}") from e
    return z[:, :sdim], sdim


def _transport(c: PeriodicCocycle, basis: np.ndarray) -> Tuple[np.ndarray, ...]:
    """沿轨道推送子空间: E_j = A_j E_{j−1}（每步正交化）"""
    frames = [basis]
    for j in range(1, c.period):
        q, _ = np.linalg.qr(c.factor(j - 1) @ frames[-1])
        frames.append(q)
    return tuple(frames)


def invariance_residual(c: PeriodicCocycle, s: CandidateSplitting) -> float:
    """max_j sin∠(A_j E_j, E_{j+1})，E 与 F 一起取最大"""
    worst = 0.0
    for frames in (s.basis_e, s.basis_f):
        for j in range(c.period):
            image = c.factor(j) @ frames[j]
            worst = max(worst, principal_angle_sine(image, frames[(j + 1) % c.period]))
    return worst


def invariant_splittings(c: PeriodicCocycle) -> SplittingScan:
    """周期乘积的广义特征空间按模长分组，每个簇间切分给出一个候选

    Args:
        c: 周期余环

    Returns:
        SplittingScan；模长相对差小于 MODULUS_GAP_TOL 的切分列入 unresolvable
    """
    product, _ = log_cocycle_product(c, c.period)
    try:
        eig = scipy.linalg.eigvals(product)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"特征值求解失败: {e}") from e
    order = sorted(range(len(eig)), key=lambda i: (abs(eig[i]), eig[i].real, eig[i].imag))
    eig = eig[order]
    log_moduli = np.log(np.abs(eig))
    gap = math.log1p(config.MODULUS_GAP_TOL)

    candidates = []
    unresolvable = []
    d = c.dim
    for i in range(1, d):
        diff = log_moduli[i] - log_moduli[i - 1]
        if diff > gap:
            threshold = math.exp(0.5 * (log_moduli[i] + log_moduli[i - 1]))
            basis_e, dim_e = _invariant_basis(product, threshold, below=True)
            basis_f, dim_f = _invariant_basis(product, threshold, below=False)
            if dim_e != i or dim_f != d - i:
                raise NumericalError(f"切分 {i} 处 Schur 重排维数不符: {dim_e}+{dim_f}")
            s = CandidateSplitting(i, _transport(c, basis_e), _transport(c, basis_f))
            residual = invariance_residual(c, s)
            if residual > config.INVARIANCE_TOL:
                logger.warning(f"切分 {i} 的不变性残差 {residual:.2e} 超出容差，列为无法分辨")
                unresolvable.append(i)
                continue
            candidates.append(s)
        else:
            conjugate_pair = (
                abs(eig[i].imag) > 0
                and abs(eig[i] - np.conj(eig[i - 1])) <= 1e-12 * max(1.0, abs(eig[i]))
            )
            if not conjugate_pair:
                unresolvable.append(i)
    if unresolvable:
        logger.warning(f"模长簇过近，无法分辨的切分位置: {unresolvable}")
    return SplittingScan(tuple(candidates), tuple(unresolvable))


def _log_ratio_profile(c: PeriodicCocycle, s: CandidateSplitting, horizon: int) -> np.ndarray:
    """log worstRatio(n), n = 1..horizon（对所有轨道点取最大）"""
    worst = np.full(horizon, -np.inf)
    for j in range(c.period):
        w_e = s.basis_e[j].copy()
        w_f = s.basis_f[j].copy()
        acc_e = acc_f = 0.0
        for n in range(1, horizon + 1):
            a = c.factor(j + n - 1)
            w_e = a @ w_e
            w_f = a @ w_f
            sv_e = scipy.linalg.svdvals(w_e)
            sv_f = scipy.linalg.svdvals(w_f)
            log_e = acc_e + math.log(sv_e[0])
            log_f = acc_f + math.log(sv_f[-1])
            worst[n - 1] = max(worst[n - 1], log_e - log_f)
            # 重新归一化，保持对数域
            acc_e += math.log(sv_e[0])
            acc_f += math.log(sv_f[0])
            w_e /= sv_e[0]
            w_f /= sv_f[0]
    return worst


def check_N_domination(c: PeriodicCocycle, s: CandidateSplitting, N: int, horizon: int) -> DominationReport:
    """检验 ‖Dfⁿu‖ ≤ ‖Dfⁿv‖/2 对 N ≤ n ≤ horizon 成立，并用次乘性证明更大的 n

    worstRatio 满足 r(n+p) ≤ r(n)·r(p)；若 r(p) < 1 且 r ≤ 1/2 在 [n₀, n₀+p−1] 上成立，
    则对所有 n ≥ n₀ 成立。p 取周期的倍数。
    """
    if N < 1 or horizon < N:
        raise PreconditionError(f"需要 1 ≤ N ≤ horizon, 实际 N={N}, horizon={horizon}")
    if s.dim != c.dim or len(s.basis_e) != c.period:
        raise PreconditionError("候选分裂与余环的维数或周期不一致")
    residual = invariance_residual(c, s)
    if residual > config.INVARIANCE_TOL:
        raise PreconditionError(f"分裂不是不变的: 残差 {residual:.3e}")

    profile = _log_ratio_profile(c, s, horizon)
    limit = math.log(config.DOMINATION_RATIO) + 1e-12
    periods = [q * c.period for q in range(1, config.CERTIFY_PERIODS + 1) if q * c.period <= horizon]
    contracting = [p for p in periods if profile[p - 1] < 0.0]

    smallest = None
    certificate = None
    # 从右向左找 r ≤ 1/2 在 [n₀, horizon] 上成立的最小 n₀
    ok_from = horizon + 1
    for n in range(horizon, N - 1, -1):
        if profile[n - 1] <= limit:
            ok_from = n
        else:
            break
    for n0 in range(ok_from, horizon + 1):
        usable = [p for p in contracting if n0 + p - 1 <= horizon]
        if usable:
            smallest, certificate = n0, usable[0]
            break
    if smallest is None:
        logger.info(f"切分 {s.index} 在 horizon={horizon} 内无法确认控制")
    log_ratios = {n: float(profile[n - 1]) for n in range(N, horizon + 1)}
    return DominationReport(index=s.index, n_start=N, horizon=horizon, smallest_n=smallest,
                            log_ratios=log_ratios, certificate_period=certificate)


def _default_horizon(c: PeriodicCocycle, n_max: int) -> int:
    return n_max + config.CERTIFY_PERIODS * c.period


def finest_dominated_splitting(c: PeriodicCocycle, Nmax: int,
                               max_workers: Optional[int] = None) -> List[Tuple[int, int]]:
    """所有在某个 N ≤ Nmax 处控制的切分 (index, smallestN)，按 index 排序"""
    if Nmax < 1:
        raise PreconditionError(f"Nmax 必须 ≥ 1: {Nmax}")
    scan = invariant_splittings(c)
    if not scan.candidates:
        return []
    horizon = _default_horizon(c, Nmax)
    workers = min(max_workers or config.HSF_THREADS, len(scan.candidates))
    with ThreadPoolExecutor(max_workers=workers) as executor:
        reports = list(executor.map(lambda s: check_N_domination(c, s, 1, horizon), scan.candidates))
    accepted = [(r.index, r.smallest_n) for r in reports
                if r.smallest_n is not None and r.smallest_n <= Nmax]
    return sorted(accepted)


def finest_blocks(dim: int, accepted: List[Tuple[int, int]]) -> SplittingLabel:
    """由接受的切分得到最细控制分裂的块"""
    return SplittingLabel.from_cuts(dim, [index for index, _ in accepted])


def tn_weak(c: PeriodicCocycle, T: int, N: int) -> bool:
    """周期 ≥ T 且没有任何 N-控制分裂"""
    if T < 1 or N < 1:
        raise PreconditionError(f"T, N 必须 ≥ 1: T={T}, N={N}")
    if c.period < T:
        return False
    return not finest_dominated_splitting(c, N)


def scan_report(c: PeriodicCocycle, N: int, horizon: Optional[int] = None) -> dict:
    """domination-scan 的单条输出"""
    scan = invariant_splittings(c)
    horizon = horizon or _default_horizon(c, N)
    reports = [check_N_domination(c, s, N, horizon).to_dict() for s in scan.candidates]
    return {
        "period": c.period,
        "dim": c.dim,
        "candidates": reports,
        "unresolvable": list(scan.unresolvable),
    }
