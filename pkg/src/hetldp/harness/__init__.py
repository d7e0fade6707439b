"""Monte Carlo experiments, privacy audits and exact oracles."""
from .audit import AuditResult, audit_all, audit_duchi, audit_laplace, audit_rr, audit_rr_monte_carlo
from .config import BudgetSpec, ConfigError, DataSpec, ExperimentConfig, Mechanism
from .oracle import ExactCdf, dkw_band, rr_exact_error_cdf
from .report import REPORT_COLUMNS, SimulationResult, simulate
from .trials import (
    AffineFit,
    BoundRow,
    ErrorSample,
    affine_fit,
    bound_comparison,
    empirical_quantile,
    lower_shape,
    matrix_seed,
    reference_shape,
    run_trials,
    trial_inputs,
)

__all__ = [
    "AffineFit", "AuditResult", "BoundRow", "BudgetSpec", "ConfigError", "DataSpec", "ErrorSample",
    "ExactCdf", "ExperimentConfig", "Mechanism", "REPORT_COLUMNS", "SimulationResult", "affine_fit",
    "audit_all", "audit_duchi", "audit_laplace", "audit_rr", "audit_rr_monte_carlo", "bound_comparison",
    "dkw_band", "empirical_quantile", "lower_shape", "matrix_seed", "reference_shape", "rr_exact_error_cdf",
    "run_trials", "simulate", "trial_inputs",
]
