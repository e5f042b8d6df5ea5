from .base import SampledSystem, MetricSampledSystem, SymbolicSampledSystem, ScaleCount
from .counting import (
    bowen_ball_contains,
    max_separated_set,
    fit_growth,
    EntropyEstimate,
    topological_entropy_estimate,
    TailEntropyTable,
    tail_entropy_estimate,
    tail_vs_delta_star,
    KatokEstimate,
    katok_entropy_estimate,
)
from .dimension import BoxDimension, box_counting_dimension

__all__ = [
    "SampledSystem",
    "MetricSampledSystem",
    "SymbolicSampledSystem",
    "ScaleCount",
    "bowen_ball_contains",
    "max_separated_set",
    "fit_growth",
    "EntropyEstimate",
    "topological_entropy_estimate",
    "TailEntropyTable",
    "tail_entropy_estimate",
    "tail_vs_delta_star",
    "KatokEstimate",
    "katok_entropy_estimate",
    "BoxDimension",
    "box_counting_dimension",
]
