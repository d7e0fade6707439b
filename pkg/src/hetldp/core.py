"""Privacy budgets, debiasing constants and aggregation weights.

Every mechanism in the package aggregates per-user reports with a weighted
sum. The three weighting schemes differ only in the per-user score that is
normalized:

* ``LAPLACE_INVERSE``: ``(1 + 1/eps**2) ** -1``
* ``RR_INVERSE_VARIANCE``: ``1 / c(eps)**2`` with ``c`` from :func:`rr_scale`
* ``EPSILON_SQUARED``: ``eps**2``

All three behave like ``eps**2`` for small budgets; scores are computed
relative to the largest budget so that normalization never underflows.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

import numpy as np


class DomainError(ValueError):
    """A parameter lies outside the domain of the requested operation."""


class InputError(ValueError):
    """Data handed to a mechanism or estimator violates its contract."""


class WeightScheme(str, enum.Enum):
    LAPLACE_INVERSE = "laplace_inverse"
    RR_INVERSE_VARIANCE = "rr_inverse_variance"
    EPSILON_SQUARED = "epsilon_squared"


def _readonly(values: Iterable[float] | np.ndarray) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PrivacyBudgets:
    """Per-user privacy parameters ``(eps_1, ..., eps_n)``.

    Budgets above 1 are accepted (the mechanisms remain private) but the
    error bounds are only stated for ``eps_i <= 1``; :attr:`above_one`
    records whether any user falls outside that regime.
    """

    epsilons: np.ndarray

    def __init__(self, epsilons: Iterable[float] | np.ndarray):
        arr = _readonly(epsilons)
        if arr.size == 0:
            raise DomainError("at least one privacy budget is required")
        bad = ~np.isfinite(arr) | (arr <= 0)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise DomainError(f"epsilon[{i}] = {arr[i]!r} must be positive and finite")
        object.__setattr__(self, "epsilons", arr)

    @classmethod
    def homogeneous(cls, epsilon: float, n: int) -> "PrivacyBudgets":
        return cls(np.full(n, float(epsilon)))

    def __len__(self) -> int:
        return int(self.epsilons.size)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PrivacyBudgets):
            return NotImplemented
        return np.array_equal(self.epsilons, other.epsilons)

    def __hash__(self) -> int:
        return hash(self.epsilons.tobytes())

    @property
    def n(self) -> int:
        return len(self)

    @property
    def above_one(self) -> bool:
        return bool((self.epsilons > 1.0).any())

    @cached_property
    def sum_squares(self) -> float:
        return math.fsum(float(e) * float(e) for e in self.epsilons)


@dataclass(frozen=True)
class WeightVector:
    weights: np.ndarray
    scheme: WeightScheme = field(default=WeightScheme.EPSILON_SQUARED)

    def __post_init__(self):
        object.__setattr__(self, "weights", _readonly(self.weights))

    def __len__(self) -> int:
        return int(self.weights.size)


def _check_epsilon(epsilon: float) -> float:
    eps = float(epsilon)
    if not math.isfinite(eps) or eps <= 0:
        raise DomainError(f"epsilon must be positive and finite, got {epsilon!r}")
    return eps


def rr_scale(epsilon: float) -> float:
    """Debiasing constant ``(e^eps + 1) / (e^eps - 1)`` of randomized response.

    Evaluated as ``1 / tanh(eps / 2)``, which is the same quantity without
    the cancellation in ``e^eps - 1`` at small ``eps``.
    """
    return 1.0 / math.tanh(_check_epsilon(epsilon) / 2.0)


def rr_scales(epsilons: np.ndarray) -> np.ndarray:
    """Vectorized :func:`rr_scale` for validated budgets."""
    return 1.0 / np.tanh(np.asarray(epsilons, dtype=np.float64) / 2.0)


def keep_probability(epsilons):
    """``e^eps / (e^eps + 1)``, the probability randomized response keeps its input."""
    eps = np.asarray(epsilons, dtype=np.float64)
    out = 1.0 / (1.0 + np.exp(-eps))
    return float(out) if out.ndim == 0 else out


def _normalize(scores: np.ndarray, scheme: WeightScheme) -> WeightVector:
    total = math.fsum(scores.tolist())
    return WeightVector(scores / total, scheme)


def laplace_weights(budgets: PrivacyBudgets) -> WeightVector:
    eps = budgets.epsilons
    top = float(eps.max())
    # eps^2 / (1 + eps^2), rescaled by the largest budget
    rel = eps / top
    scores = rel * rel * ((1.0 + top * top) / (1.0 + eps * eps))
    return _normalize(scores, WeightScheme.LAPLACE_INVERSE)


def rr_inverse_variance_weights(budgets: PrivacyBudgets) -> WeightVector:
    t = np.tanh(budgets.epsilons / 2.0)
    rel = t / float(t.max())
    return _normalize(rel * rel, WeightScheme.RR_INVERSE_VARIANCE)


def epsilon_squared_weights(budgets: PrivacyBudgets) -> WeightVector:
    rel = budgets.epsilons / float(budgets.epsilons.max())
    return _normalize(rel * rel, WeightScheme.EPSILON_SQUARED)


def weighted_sum(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """``sum_i w_i * values[..., i]`` over the last axis.

    One code path for a single report vector and for a stack of trials, so
    both give bit-identical results row by row.
    """
    return np.sum(np.asarray(values) * weights, axis=-1)


def uniform_weights(n: int) -> np.ndarray:
    """Equal weights; the heterogeneity-blind baseline."""
    return np.full(n, 1.0 / n)


WEIGHT_FUNCTIONS = {
    WeightScheme.LAPLACE_INVERSE: laplace_weights,
    WeightScheme.RR_INVERSE_VARIANCE: rr_inverse_variance_weights,
    WeightScheme.EPSILON_SQUARED: epsilon_squared_weights,
}


def check_beta(beta: float) -> float:
    b = float(beta)
    if not 0.0 < b < 1.0:
        raise DomainError(f"beta must lie in (0, 1), got {beta!r}")
    return b


def scalar_bound_shape(budgets: PrivacyBudgets, beta: float) -> float:
    """``min(log(1/beta) / sum(eps^2), 1)``: constant-free reference curve."""
    b = check_beta(beta)
    return min(math.log(1.0 / b) / budgets.sum_squares, 1.0)
