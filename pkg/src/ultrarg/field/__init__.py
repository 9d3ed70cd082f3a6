"""Cutoff Gaussian field, interacting measure and two-point observables."""

from .covariance import CovarianceError, CovarianceModel, cov_value, wick_constants, wick_eval
from .mcmc import MCMCError, MultiscaleMetropolis, mcmc_sample
from .observables import (
    Correlator,
    empirical_two_point,
    exact_two_point,
    fourier_exact,
    fourier_two_point,
    l1_mass,
    shell_products,
    slope_fit,
)
from .sampling import (
    FieldConfig,
    MultiscaleCoords,
    action,
    coordinate_count,
    draw_coords,
    level_sizes,
    sample_gaussian,
    sample_gaussian_batch,
    synthesize,
    synthesize_batch,
)

__all__ = [
    "CovarianceError",
    "CovarianceModel",
    "cov_value",
    "wick_constants",
    "wick_eval",
    "MCMCError",
    "MultiscaleMetropolis",
    "mcmc_sample",
    "Correlator",
    "empirical_two_point",
    "exact_two_point",
    "fourier_exact",
    "fourier_two_point",
    "l1_mass",
    "shell_products",
    "slope_fit",
    "FieldConfig",
    "MultiscaleCoords",
    "action",
    "coordinate_count",
    "draw_coords",
    "level_sizes",
    "sample_gaussian",
    "sample_gaussian_batch",
    "synthesize",
    "synthesize_batch",
]
