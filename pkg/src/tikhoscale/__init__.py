"""Multiscale Tikhonov regularisation for first-kind integral equations."""

from .errors import InputError, NumericError, UnsupportedOperationError
from .galerkin import (
    Assembly,
    DiscreteSystem,
    Grid,
    assemble_system,
    build_matrix,
    coarse_indices,
    data_coefficients,
    delta_sq,
    downsample_matrix,
    make_grid,
)
from .multiscale import (
    MultiscaleConfig,
    MultiscaleSolver,
    NoiseFree,
    RegularizedSolution,
    White,
    relative_error,
    run_noise_free,
    run_with_noise,
    solve_truncated,
)
from .problem import (
    KernelSpec,
    SourceSpec,
    element_integral_exact,
    exact_element_matrix,
    kernel_eval,
    kernel_norm_sq,
    source_eval,
)
from .regparam import (
    LambdaEstimate,
    Method,
    SearchConfig,
    estimate_lambda,
    estimate_lambda_tilde,
    eta,
    filter_factor,
    functional_value,
    objective_value,
    scale_lambda,
    unscale_lambda,
)
from .spectral import (
    PicardRow,
    SpectralSystem,
    SVDFactors,
    decompose,
    factorize,
    numerical_rank,
    picard_table,
)

from .experiment import ExperimentConfig, ExperimentError, gen_noise, load_config, run_experiment, synthesize_data

__version__ = "0.1.0"
