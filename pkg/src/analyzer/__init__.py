from .suite import CHECKS, CheckResult, reference_params, run_suite

__all__ = [
    "CHECKS",
    "CheckResult",
    "reference_params",
    "run_suite",
]
