"""
线性代数核心与错误类型
"""
from .errors import (
    HsfError, PreconditionError, SchemaError, OutOfChartError, HorizonExceededError,
    DegenerateFitError, InsufficientSamplesError, NumericalError, RangeError,
    ConstructionInfeasibleError, GeometricFailureError,
)
from .linalg import (
    PeriodicCocycle, SubspaceBasis, ExponentSpectrum, LagrangianNormalizer,
    as_square_matrix, cocycle_product, log_cocycle_product, lyapunov_exponents_periodic,
    grassmann_jacobian, top_k_log_jacobian, sample_grassmannian, max_sampled_jacobian,
    symplectic_form, symplectic_defect, isotropy_defect, lagrangian_to_standard,
    random_lagrangian_frame, principal_angle_sine, restricted_log_norms, cyclic_shift_matrix,
    stack_factors, period_log_moduli,
)

__all__ = [
    'HsfError', 'PreconditionError', 'SchemaError', 'OutOfChartError', 'HorizonExceededError',
    'DegenerateFitError', 'InsufficientSamplesError', 'NumericalError', 'RangeError',
    'ConstructionInfeasibleError', 'GeometricFailureError',
    'PeriodicCocycle', 'SubspaceBasis', 'ExponentSpectrum', 'LagrangianNormalizer',
    'as_square_matrix', 'cocycle_product', 'log_cocycle_product', 'lyapunov_exponents_periodic',
    'grassmann_jacobian', 'top_k_log_jacobian', 'sample_grassmannian', 'max_sampled_jacobian',
    'symplectic_form', 'symplectic_defect', 'isotropy_defect', 'lagrangian_to_standard',
    'random_lagrangian_frame', 'principal_angle_sine', 'restricted_log_norms',
    'cyclic_shift_matrix', 'stack_factors', 'period_log_moduli',
]
