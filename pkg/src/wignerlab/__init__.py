"""Simulation and verification lab for resolvent-trace fluctuations of
Wigner matrices whose entries have a Pareto tail with exponent between 2 and 4.

The package samples calibrated heavy-tailed ensembles, measures fluctuations
of Tr (z - A)^{-1} across replicates, and compares variance scaling,
Gaussianity, and covariance against the limiting kernel computed by
double quadrature.
"""

from wignerlab.heavytail import (
    DistSpec,
    TruncationParams,
    calibrate,
    char_fn,
    sample,
    truncation_params,
)
from wignerlab.ensemble import EnsembleConfig, MatrixSample, build_matrix, exceedance_stats
from wignerlab.semicircle import KPoint, g_sc, g_sc_prime, k_point
from wignerlab.spectral import (
    SpectralTrace,
    diag_concentration,
    eigenvalues,
    fk_statistic,
    leave_one_out,
    quadratic_form_stats,
    resolvent_diag,
    trace_resolvent,
)
from wignerlab.kernel import (
    KernelValue,
    QuadratureParams,
    covariance_weight,
    evaluate_C,
    evaluate_C_oracle,
    integrand_dd,
)
from wignerlab.experiments import (
    ExperimentReport,
    RunPlan,
    empirical_covariance,
    gaussianity_stats,
    run_ensemble,
    variance_scaling_fit,
)

__version__ = "0.1.0"

__all__ = [
    "DistSpec",
    "TruncationParams",
    "calibrate",
    "sample",
    "truncation_params",
    "char_fn",
    "EnsembleConfig",
    "MatrixSample",
    "build_matrix",
    "exceedance_stats",
    "KPoint",
    "g_sc",
    "g_sc_prime",
    "k_point",
    "SpectralTrace",
    "eigenvalues",
    "trace_resolvent",
    "resolvent_diag",
    "leave_one_out",
    "fk_statistic",
    "quadratic_form_stats",
    "diag_concentration",
    "QuadratureParams",
    "KernelValue",
    "covariance_weight",
    "integrand_dd",
    "evaluate_C",
    "evaluate_C_oracle",
    "RunPlan",
    "ExperimentReport",
    "run_ensemble",
    "variance_scaling_fit",
    "empirical_covariance",
    "gaussianity_stats",
    "__version__",
]
