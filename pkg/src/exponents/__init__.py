"""
指数泛函
"""
from .functionals import (
    DeltaReport, SplittingLabel, DeltaStar, SigmaKProfile,
    delta, delta_restricted, exponents_report, delta_star, delta_star_of_spectra,
    ruelle_gap, entropy_upper_bounds, sigma_k_profile, fit_slope,
)

__all__ = [
    'DeltaReport', 'SplittingLabel', 'DeltaStar', 'SigmaKProfile',
    'delta', 'delta_restricted', 'exponents_report', 'delta_star', 'delta_star_of_spectra',
    'ruelle_gap', 'entropy_upper_bounds', 'sigma_k_profile', 'fit_slope',
]
