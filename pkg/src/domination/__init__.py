"""
控制分裂
"""
from .splitting import (
    CandidateSplitting, SplittingScan, DominationReport, invariant_splittings,
    invariance_residual, check_N_domination, finest_dominated_splitting, finest_blocks,
    tn_weak, scan_report,
)

__all__ = [
    'CandidateSplitting', 'SplittingScan', 'DominationReport', 'invariant_splittings',
    'invariance_residual', 'check_N_domination', 'finest_dominated_splitting', 'finest_blocks',
    'tn_weak', 'scan_report',
]
