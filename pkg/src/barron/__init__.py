"""Spectral Barron scales, Fourier-multiplier inverse problems and shallow-network approximation."""
from .spectral import (
    InterpolationTriple,
    SpectralFunction,
    apply_bracket_power,
    apply_resolvent,
    barron_norm,
    bracket,
    evaluate,
    interpolation_gap,
    l2_norm,
    multiply,
)
from .rates import FitResult, RateReport, fit_rate, make_rng

__version__ = "0.1.0"
