"""Numerical toolkit for a long-wave Benard-Marangoni thin-film model.

Covers the full analysis pipeline around the Turing instability of the pure
conduction state (h, theta) = (1, 1): dispersion relations and critical
Marangoni numbers, amplitude-equation coefficients on square and hexagonal
Fourier lattices, reduced travelling-front ODEs with heteroclinic orbits,
physical-field reconstruction of patterns and fronts, and a pseudo-spectral
simulator of the full quasilinear system used as a validation oracle.
"""

__version__ = "0.1.0"

from .coeffs import beta_of_g, hex_coefficients, square_coefficients
from .linear import (
    FluidParams,
    Regime,
    classify_regime,
    critical_monotonic,
    critical_oscillatory,
    kappa,
)
from .reduced import ReducedParams, fixed_points, heteroclinic

__all__ = [
    "FluidParams",
    "Regime",
    "ReducedParams",
    "__version__",
    "beta_of_g",
    "classify_regime",
    "critical_monotonic",
    "critical_oscillatory",
    "fixed_points",
    "heteroclinic",
    "hex_coefficients",
    "kappa",
    "square_coefficients",
]
