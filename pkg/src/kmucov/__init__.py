"""Coverage probability of Poisson downlink networks under kappa-mu shadowed fading.

The dispatching entry point is ``kmucov.coverage.coverage``; the submodule
name is left unshadowed here.
"""
from .coverage import (
    CoverageQuery,
    CoverageResult,
    Method,
    NetworkModel,
    conditional_coverage,
    coverage_approx,
    coverage_exact,
    g_function,
    g_taylor,
    rician_terms,
)
from .errors import ConvergenceError, DomainError, MethodError, TruncationError
from .fading import INFINITE, FadingParams, GammaMixture, mixture_weights, special_case, tail_mass
from .mcsim import SimConfig, SimEstimate, estimate_coverage

__version__ = "0.1.0"

__all__ = [
    "INFINITE",
    "ConvergenceError",
    "CoverageQuery",
    "CoverageResult",
    "DomainError",
    "FadingParams",
    "GammaMixture",
    "Method",
    "MethodError",
    "NetworkModel",
    "SimConfig",
    "SimEstimate",
    "TruncationError",
    "conditional_coverage",
    "coverage_approx",
    "coverage_exact",
    "estimate_coverage",
    "g_function",
    "g_taylor",
    "mixture_weights",
    "rician_terms",
    "special_case",
    "tail_mass",
]
