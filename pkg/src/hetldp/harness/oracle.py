"""Exact error distribution of the randomized-response estimator for small n."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import DomainError, PrivacyBudgets, keep_probability, rr_inverse_variance_weights, rr_scales

MAX_ORACLE_USERS = 20


@dataclass(frozen=True)
class ExactCdf:
    """Finite distribution of the squared error: ``support`` ascending,
    ``probs`` the point masses, ``cumulative`` their running sums."""

    support: np.ndarray
    probs: np.ndarray
    cumulative: np.ndarray

    def __call__(self, t):
        idx = np.searchsorted(self.support, np.asarray(t, dtype=np.float64), side="right")
        padded = np.r_[0.0, self.cumulative]
        return padded[idx]

    def mean(self) -> float:
        return float(np.dot(self.support, self.probs))

    def sup_distance(self, sample) -> float:
        """Kolmogorov distance between this CDF and the empirical CDF of ``sample``."""
        x = np.sort(np.asarray(sample, dtype=np.float64))
        n = x.size
        # both CDFs are step functions; the sup is attained at a jump of either
        pts = np.union1d(self.support, x)
        emp = np.searchsorted(x, pts, side="right") / n
        exact = self(pts)
        return float(np.max(np.abs(emp - exact)))


def dkw_band(trials: int, alpha: float = 0.01) -> float:
    """Half-width of the ``1 - alpha`` Dvoretzky-Kiefer-Wolfowitz band."""
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * trials))


def rr_exact_error_cdf(theta: float, budgets: PrivacyBudgets, rel_tol: float = 1e-12) -> ExactCdf:
    """Exact law of ``(sum_i w_i c_i y_i - theta)^2`` for ±1 data with mean ``theta``.

    Each user's report is +1 with probability ``(1+theta)/2 * k_i +
    (1-theta)/2 * (1-k_i)``, independently, so the ``2^n`` sign patterns
    carry product probabilities. The estimator is the unclamped weighted sum.
    Squared errors closer than ``rel_tol`` (relative) are merged.
    """
    if not -1.0 <= theta <= 1.0:
        raise DomainError(f"theta must lie in [-1, 1], got {theta!r}")
    if budgets.n > MAX_ORACLE_USERS:
        raise DomainError(f"exact enumeration supports n <= {MAX_ORACLE_USERS}, got {budgets.n}")
    eps = budgets.epsilons
    coef = rr_inverse_variance_weights(budgets).weights * rr_scales(eps)
    keep = keep_probability(eps)
    plus = (1.0 + theta) / 2.0 * keep + (1.0 - theta) / 2.0 * (1.0 - keep)
    values = np.zeros(1)
    probs = np.ones(1)
    for a, q in zip(coef, plus):
        values = np.concatenate([values + a, values - a])
        probs = np.concatenate([probs * q, probs * (1.0 - q)])
    err = (values - theta) ** 2
    order = np.argsort(err, kind="stable")
    err, probs = err[order], probs[order]
    # start a new support point wherever the gap exceeds the tolerance
    gap = np.diff(err) > rel_tol * np.maximum(np.abs(err[1:]), 1e-300)
    starts = np.r_[0, np.flatnonzero(gap) + 1]
    support = err[starts]
    masses = np.add.reduceat(probs, starts)
    return ExactCdf(support, masses, np.cumsum(masses))
