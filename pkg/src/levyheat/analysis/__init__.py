"""Norms, regression and Monte Carlo experiments built on the scheme."""

from .experiments import (
    ConvergenceResult,
    LyapunovEstimate,
    MCConfig,
    TruncationResult,
    check_intermittency_preset,
    convergence_study,
    dyadic_ladder,
    estimate_lyapunov,
    estimate_path_exponent,
    truncation_study,
)
from .fitting import OrderFit, bootstrap_counts, fit_power_law
from .sobolev import discrete_sobolev_norm, oscillation_product, step_function_sobolev_norm

__all__ = [
    "ConvergenceResult",
    "LyapunovEstimate",
    "MCConfig",
    "OrderFit",
    "TruncationResult",
    "bootstrap_counts",
    "check_intermittency_preset",
    "convergence_study",
    "discrete_sobolev_norm",
    "dyadic_ladder",
    "estimate_lyapunov",
    "estimate_path_exponent",
    "fit_power_law",
    "oscillation_product",
    "step_function_sobolev_norm",
    "truncation_study",
]
