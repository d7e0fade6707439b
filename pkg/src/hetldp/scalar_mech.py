"""One-dimensional mean estimation: Laplace noise and randomized response.

Users privatize independently; the server returns a weighted sum of the
reports. Laplace reports are weighted by ``(1 + 1/eps^2)^-1`` and randomized
response reports are debiased by ``c_i`` and weighted by ``1/c_i^2``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import sampling
from ._backend import kernels
from .core import (
    DomainError,
    InputError,
    PrivacyBudgets,
    WeightScheme,
    _check_epsilon,
    keep_probability,
    laplace_weights,
    rr_inverse_variance_weights,
    rr_scales,
    scalar_bound_shape,
    weighted_sum,
)
from .sampling import RngHandle


class ScalarMechanism(str, enum.Enum):
    LAPLACE = "laplace"
    RR = "rr"


@dataclass(frozen=True)
class ScalarReport:
    value: float
    epsilon: float
    mechanism: ScalarMechanism


@dataclass(frozen=True)
class ScalarReports:
    """Reports of ``n`` users stored column-wise; user ``i`` is row ``i``."""

    values: np.ndarray
    epsilons: np.ndarray
    mechanism: ScalarMechanism

    def __len__(self) -> int:
        return int(self.values.shape[0])

    def __getitem__(self, i: int) -> ScalarReport:
        return ScalarReport(float(self.values[i]), float(self.epsilons[i]), self.mechanism)

    @classmethod
    def from_reports(cls, reports: Sequence[ScalarReport]) -> "ScalarReports":
        if not reports:
            raise InputError("no reports")
        kinds = {r.mechanism for r in reports}
        if len(kinds) != 1:
            raise InputError(f"mixed mechanisms in reports: {sorted(k.value for k in kinds)}")
        return cls(
            np.array([r.value for r in reports], dtype=np.float64),
            np.array([r.epsilon for r in reports], dtype=np.float64),
            kinds.pop(),
        )


ReportsLike = Union[ScalarReports, Sequence[ScalarReport]]


@dataclass(frozen=True)
class ScalarEstimate:
    """Server output. ``theta_raw`` is the unclamped weighted sum.

    ``clamped`` is set when clamping to [-1, 1] changed the value;
    ``zero_fallback`` when the trivial estimate 0 was returned because the
    reference bound already reaches 1.
    """

    theta_hat: float
    theta_raw: float
    clamped: bool
    budgets_used: PrivacyBudgets
    scheme: WeightScheme
    zero_fallback: bool = False


# ----------------------------------------------------------------- privatize


def laplace_values(x, epsilons, uniforms):
    """``x + Lap(2/eps)`` given one uniform per user (broadcasting)."""
    return np.asarray(x, dtype=np.float64) + sampling.laplace_inverse_cdf(uniforms, 2.0 / np.asarray(epsilons))


def rr_values(x, epsilons, uniforms):
    """Keep ``x`` when the uniform falls below ``e^eps/(e^eps+1)``, else flip it."""
    x = np.asarray(x, dtype=np.float64)
    return np.where(uniforms < keep_probability(epsilons), x, -x)


def _check_interval(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    bad = ~(np.abs(arr) <= 1.0)
    if bad.any():
        i = int(np.flatnonzero(bad.reshape(-1))[0])
        raise InputError(f"value {arr.reshape(-1)[i]!r} at index {i} lies outside [-1, 1]")
    return arr


def _check_binary(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    bad = ~((arr == 1.0) | (arr == -1.0))
    if bad.any():
        i = int(np.flatnonzero(bad.reshape(-1))[0])
        raise InputError(f"value {arr.reshape(-1)[i]!r} at index {i} is not -1 or +1")
    return arr


def laplace_privatize(x: float, epsilon: float, rng: RngHandle) -> ScalarReport:
    eps = _check_epsilon(epsilon)
    xv = _check_interval(x)
    y = laplace_values(xv.reshape(1), np.array([eps]), rng.uniforms(1))
    return ScalarReport(float(y[0]), eps, ScalarMechanism.LAPLACE)


def rr_privatize(x: float, epsilon: float, rng: RngHandle) -> ScalarReport:
    eps = _check_epsilon(epsilon)
    xv = _check_binary(x)
    y = rr_values(xv.reshape(1), np.array([eps]), rng.uniforms(1))
    return ScalarReport(float(y[0]), eps, ScalarMechanism.RR)


def privatize_batch(
    mechanism: ScalarMechanism, xs, budgets: PrivacyBudgets, seed: int
) -> ScalarReports:
    """Privatize user ``i`` on stream ``i`` of ``seed``.

    Equivalent to calling the single-user privatizer with
    ``RngHandle(seed, i)`` for every user.
    """
    mechanism = ScalarMechanism(mechanism)
    xs = _check_interval(xs) if mechanism is ScalarMechanism.LAPLACE else _check_binary(xs)
    if xs.shape != (budgets.n,):
        raise InputError(f"{xs.shape[0] if xs.ndim else 1} values for {budgets.n} budgets")
    u = kernels.uniform_draws(sampling.stream_keys(seed, budgets.n), 0, 1)[:, 0]
    fn = laplace_values if mechanism is ScalarMechanism.LAPLACE else rr_values
    return ScalarReports(fn(xs, budgets.epsilons, u), budgets.epsilons.copy(), mechanism)


# ------------------------------------------------------------------ estimate


def _coerce(reports: ReportsLike, budgets: PrivacyBudgets, expected: ScalarMechanism) -> ScalarReports:
    batch = reports if isinstance(reports, ScalarReports) else ScalarReports.from_reports(reports)
    if batch.mechanism is not expected:
        raise InputError(f"expected {expected.value} reports, got {batch.mechanism.value}")
    if len(batch) != budgets.n:
        raise InputError(f"{len(batch)} reports for {budgets.n} budgets")
    return batch


def finish_scalar(raw, budgets, scheme, clamp=True, zero_fallback_beta=None) -> ScalarEstimate:
    raw = float(raw)
    fallback = zero_fallback_beta is not None and scalar_bound_shape(budgets, zero_fallback_beta) >= 1.0
    if fallback:
        value = 0.0
    elif clamp:
        value = min(max(raw, -1.0), 1.0)
    else:
        value = raw
    return ScalarEstimate(value, raw, (not fallback) and value != raw, budgets, scheme, fallback)


def laplace_estimate(
    reports: ReportsLike,
    budgets: PrivacyBudgets,
    clamp: bool = True,
    zero_fallback_beta: float | None = None,
) -> ScalarEstimate:
    """Weighted average ``sum w_i y_i`` of Laplace reports.

    With ``zero_fallback_beta`` set, 0 is returned whenever
    ``scalar_bound_shape(budgets, beta) >= 1``.
    """
    batch = _coerce(reports, budgets, ScalarMechanism.LAPLACE)
    w = laplace_weights(budgets)
    raw = weighted_sum(batch.values, w.weights)
    return finish_scalar(raw, budgets, w.scheme, clamp, zero_fallback_beta)


def rr_debiased(values, epsilons):
    return np.asarray(values) * rr_scales(epsilons)


def rr_estimate(
    reports: ReportsLike,
    budgets: PrivacyBudgets,
    clamp: bool = True,
    zero_fallback_beta: float | None = None,
) -> ScalarEstimate:
    """``sum w_i c_i y_i`` with inverse-variance weights ``w_i ~ 1/c_i^2``."""
    batch = _coerce(reports, budgets, ScalarMechanism.RR)
    _check_binary(batch.values)
    w = rr_inverse_variance_weights(budgets)
    raw = weighted_sum(rr_debiased(batch.values, budgets.epsilons), w.weights)
    return finish_scalar(raw, budgets, w.scheme, clamp, zero_fallback_beta)


def estimate(reports: ScalarReports, budgets: PrivacyBudgets, **kwargs) -> ScalarEstimate:
    if reports.mechanism is ScalarMechanism.LAPLACE:
        return laplace_estimate(reports, budgets, **kwargs)
    return rr_estimate(reports, budgets, **kwargs)


def debias_identity_residual(epsilon: float) -> float:
    """``c * (P[keep] - P[flip]) - 1``; zero exactly when RR debiasing is unbiased."""
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    keep = keep_probability(epsilon)
    flip = keep_probability(-epsilon)
    c = float(rr_scales(np.array([epsilon]))[0])
    return c * (keep - flip) - 1.0
