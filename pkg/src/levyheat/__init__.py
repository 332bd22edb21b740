"""
Fully discrete theta schemes for the stochastic heat equation on the unit
circle driven by pure-jump Levy space-time white noise.
"""

from importlib.metadata import PackageNotFoundError, version as _version

from . import analysis
from .errors import (
    AlignmentError,
    ConfigurationError,
    DivergenceError,
    DomainError,
    FitError,
    InfiniteMomentError,
    InvalidGridError,
    InvalidParameterError,
    LevyHeatError,
    PrecisionError,
)
from .green import (
    GreenEvalConfig,
    discrete_green_G1,
    discrete_green_G2,
    green_initial_error,
    green_kernel_table,
    green_l2_error,
    green_p_bound,
    green_p_integral,
    heat_green,
    heat_green_image,
    heat_green_spectral,
    step_alpha,
)
from .noise import (
    JumpBatch,
    JumpLog,
    LevyMeasure,
    LevyNoiseSpec,
    NoiseField,
    center_drift,
    coarsen,
    moment_m_lambda,
    sample,
    sample_batch,
    truncate,
)
from .scheme import (
    Coefficient,
    InitialCondition,
    SolutionField,
    evolve,
    mild_evaluate,
    run,
    solve_implicit,
    step,
)
from .spectral import (
    GridSpec,
    SpectralData,
    StabilityReport,
    amplification,
    default_r_bound,
    dft_forward,
    dft_inverse,
    eigenvalues,
    kappa_n,
    laplacian,
    stability_check,
    step_index,
)

try:
    __version__ = _version("artifact")
except PackageNotFoundError:  # pragma: no cover
    __version__ = "0.1.0"
