"""Structural constants, kernels and Harnack verification for Kolmogorov-type operators."""
from .constants import ConstantsReport, pipeline
from .covariance import CovariancePoly, compute_b_B, covariance_poly, eigen_bounds, invert_C
from .errors import ConfigError, HypothesisViolation, InfeasibleDiscretization, VerificationFailure
from .fields import CoefficientField, make_field, random_h1_fields, validate_field
from .geometry import Box, Cylinder, membership, named_cylinders, unit_ball_measure
from .group import (BlockStructure, Point, build_structure, compose, dilate, inverse, matrix_E,
                    norm_B, prototype, sigma_bounds)
from .kernels import (KernelParams, apply_LA_to_kernel, gamma0, gamma_sb, h1_kernel, h2_kernel,
                      kernel_derivatives, kernel_params)
from .potentials import RegionE, potential, strip_bound
from .solver import growth_experiment, harnack_experiment, oscillation_experiment, solve
from .verification import run_suite

__all__ = [
    "BlockStructure", "Point", "build_structure", "prototype", "matrix_E", "compose", "inverse",
    "dilate", "norm_B", "sigma_bounds",
    "CovariancePoly", "covariance_poly", "invert_C", "compute_b_B", "eigen_bounds",
    "KernelParams", "kernel_params", "h1_kernel", "h2_kernel", "gamma0", "gamma_sb",
    "kernel_derivatives", "apply_LA_to_kernel",
    "Box", "Cylinder", "membership", "named_cylinders", "unit_ball_measure",
    "RegionE", "potential", "strip_bound",
    "ConstantsReport", "pipeline",
    "CoefficientField", "make_field", "random_h1_fields", "validate_field",
    "solve", "growth_experiment", "oscillation_experiment", "harnack_experiment",
    "run_suite",
    "ConfigError", "HypothesisViolation", "InfeasibleDiscretization", "VerificationFailure",
]
