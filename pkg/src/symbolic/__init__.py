"""
符号动力学
"""
from .shift import (
    TransitionMatrix, ShiftPoint, sft_entropy, cylinder_count, shift_metric,
    strongly_connected_components, enumerate_words, symbol_bits, pack_words, position_mask,
)

__all__ = [
    'TransitionMatrix', 'ShiftPoint', 'sft_entropy', 'cylinder_count', 'shift_metric',
    'strongly_connected_components', 'enumerate_words', 'symbol_bits', 'pack_words',
    'position_mask',
]
