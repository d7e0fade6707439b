"""Locally private estimation with heterogeneous per-user privacy budgets.

Mean estimation on [-1, 1] (Laplace noise, randomized response), on the
Euclidean ball (hemisphere randomizer) and distribution learning over a
finite domain (one-sparse random projection reports), each aggregated with
budget-dependent weights. The :mod:`hetldp.harness` package runs Monte Carlo
experiments and privacy audits; :mod:`hetldp.cli` is the command line.
"""
from ._backend import BACKEND
from .core import (
    DomainError,
    InputError,
    PrivacyBudgets,
    WeightScheme,
    WeightVector,
    epsilon_squared_weights,
    keep_probability,
    laplace_weights,
    rr_inverse_variance_weights,
    rr_scale,
)
from .dist_learn import learn_distribution
from .multidim_mech import BallPoint, duchi_privatize, multidim_estimate
from .sampling import RngHandle
from .scalar_mech import laplace_estimate, laplace_privatize, rr_estimate, rr_privatize

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BallPoint", "DomainError", "InputError", "PrivacyBudgets", "RngHandle", "WeightScheme",
    "WeightVector", "__version__", "duchi_privatize", "epsilon_squared_weights", "keep_probability",
    "laplace_estimate", "laplace_privatize", "laplace_weights", "learn_distribution", "multidim_estimate",
    "rr_estimate", "rr_inverse_variance_weights", "rr_privatize", "rr_scale",
]
