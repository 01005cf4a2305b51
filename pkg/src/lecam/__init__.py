"""Distances between finite-population sampling experiments and Gaussian limits.

The package compares three experiments built from drawing n items out of a
population of N split into weighted categories: sampling without replacement
(multivariate hypergeometric), sampling with replacement (multinomial), and
the matching multivariate normal.  It provides exact pmfs and samplers, local
expansions of the log-likelihood ratio with certified residual scans, total
variation and Hellinger computations for the raw and jittered laws, explicit
closed-form bound pieces, and Markov-kernel constructions that turn the
distance computations into two-sided comparison (deficiency) bounds.
"""

from .distances import (
    DEFAULT_QUAD_ORDER,
    HYPERGEOMETRIC,
    MULTINOMIAL,
    GaussianLaw,
    HellingerResult,
    JitteredLaw,
    TailCheck,
    TVBoundParts,
    TVResult,
    build_gaussian,
    gaussian_log_density,
    hellinger_discrete,
    tail_probability_check,
    tv_bound_parts,
    tv_discrete,
    tv_jittered_discrete_pair,
    tv_jittered_vs_gaussian,
    tv_monte_carlo,
)
from .errors import LecamError, RegimeError, SupportCapError, ValidationError
from .expansion import (
    ExpansionResult,
    ResidualScan,
    expand,
    expansion_order1,
    expansion_order2,
    first_order_bracket,
    log_ratio_exact,
    residual_scan,
    second_order_bracket,
    second_order_term,
)
from .kernels import (
    KERNEL_KINDS,
    DataProcessingResult,
    DeficiencyReport,
    KernelTag,
    apply_jitter,
    apply_kernel,
    apply_round,
    data_processing_check,
    deficiency_upper_bounds,
    independent_gaussian,
    sqrt_vst_pushforward,
    sqrt_vst_target,
)
from .lattice import (
    DEFAULT_SUPPORT_CAP,
    SUPPORT_CAP_ENV,
    ExperimentParams,
    LatticePoint,
    RatioClass,
    count_vector_matrix,
    count_vector_size,
    enumerate_support,
    in_truncated_set,
    point_in_support,
    support_cap,
    support_matrix,
    support_size,
    validate_params,
    weight_ratio,
)
from .numerics import (
    SlopeFit,
    fit_loglog_slope,
    log_binomial,
    log_factorial,
    make_generator,
    split_seed,
)
from .pmf import (
    MomentSummary,
    hypergeometric_log_pmf,
    hypergeometric_log_pmf_matrix,
    hypergeometric_moments,
    multinomial_log_pmf,
    multinomial_log_pmf_matrix,
    multinomial_moments,
    sample_hypergeometric,
    sample_multinomial,
)
from .records import ScanRecord, read_csv, records_to_json, write_csv

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_QUAD_ORDER",
    "DEFAULT_SUPPORT_CAP",
    "HYPERGEOMETRIC",
    "KERNEL_KINDS",
    "MULTINOMIAL",
    "SUPPORT_CAP_ENV",
    "DataProcessingResult",
    "DeficiencyReport",
    "ExpansionResult",
    "ExperimentParams",
    "GaussianLaw",
    "HellingerResult",
    "JitteredLaw",
    "KernelTag",
    "LatticePoint",
    "LecamError",
    "MomentSummary",
    "RatioClass",
    "RegimeError",
    "ResidualScan",
    "ScanRecord",
    "SlopeFit",
    "SupportCapError",
    "TVBoundParts",
    "TVResult",
    "TailCheck",
    "ValidationError",
    "apply_jitter",
    "apply_kernel",
    "apply_round",
    "build_gaussian",
    "count_vector_matrix",
    "count_vector_size",
    "data_processing_check",
    "deficiency_upper_bounds",
    "enumerate_support",
    "expand",
    "expansion_order1",
    "expansion_order2",
    "first_order_bracket",
    "fit_loglog_slope",
    "gaussian_log_density",
    "hellinger_discrete",
    "hypergeometric_log_pmf",
    "hypergeometric_log_pmf_matrix",
    "hypergeometric_moments",
    "in_truncated_set",
    "independent_gaussian",
    "log_binomial",
    "log_factorial",
    "log_ratio_exact",
    "make_generator",
    "multinomial_log_pmf",
    "multinomial_log_pmf_matrix",
    "multinomial_moments",
    "point_in_support",
    "read_csv",
    "records_to_json",
    "residual_scan",
    "sample_hypergeometric",
    "sample_multinomial",
    "second_order_bracket",
    "second_order_term",
    "split_seed",
    "sqrt_vst_pushforward",
    "sqrt_vst_target",
    "support_cap",
    "support_matrix",
    "support_size",
    "tail_probability_check",
    "tv_bound_parts",
    "tv_discrete",
    "tv_jittered_discrete_pair",
    "tv_jittered_vs_gaussian",
    "tv_monte_carlo",
    "validate_params",
    "weight_ratio",
    "write_csv",
]
