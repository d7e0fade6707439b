"""Mean estimation on the Euclidean ball via the hemisphere randomizer.

Each user flips their point to the sphere of radius ``r`` (keeping the
direction with probability ``1/2 + |x|/(2r)``), then outputs a uniform point
on the sphere of radius ``B`` restricted to the hemisphere around that
direction with probability ``e^eps/(e^eps+1)`` and to the opposite hemisphere
otherwise. The server averages outputs with weights ``eps_i^2 / sum eps_j^2``.

Draw order on a user's stream: counter 0 is the sign flip, counter 1 the
hemisphere coin, counters from 2 the hemisphere point (``d`` per attempt).
A zero input takes its random direction from counters ``ZERO_DIRECTION_BASE``
onwards.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.special import gammaln

from . import sampling
from ._backend import kernels
from .core import (
    DomainError,
    InputError,
    PrivacyBudgets,
    _check_epsilon,
    check_beta,
    epsilon_squared_weights,
    keep_probability,
    rr_scales,
)
from .sampling import RngHandle, SpherePoint

ZERO_DIRECTION_BASE = 2**40
RADIUS_VARIANTS = ("unbiased", "literal")


@dataclass(frozen=True)
class BallPoint:
    coords: np.ndarray
    r: float

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=np.float64).reshape(-1)
        if not (math.isfinite(self.r) and self.r > 0):
            raise DomainError(f"ball radius must be positive, got {self.r!r}")
        if np.linalg.norm(coords) > self.r * (1 + 1e-9):
            raise InputError(f"point norm {np.linalg.norm(coords)!r} exceeds ball radius {self.r!r}")
        object.__setattr__(self, "coords", coords)


@dataclass(frozen=True)
class DuchiReport:
    point: SpherePoint
    epsilon: float
    d: int
    r: float


@dataclass(frozen=True)
class DuchiReports:
    """Column-wise reports; ``points[i]`` lies on the sphere of radius ``radii[i]``."""

    points: np.ndarray
    epsilons: np.ndarray
    r: float
    radii: np.ndarray

    def __len__(self) -> int:
        return int(self.points.shape[0])

    @property
    def d(self) -> int:
        return int(self.points.shape[1])

    @classmethod
    def from_reports(cls, reports: Sequence[DuchiReport]) -> "DuchiReports":
        if not reports:
            raise InputError("no reports")
        dims = {(rep.d, rep.r) for rep in reports}
        if len(dims) != 1:
            raise InputError(f"reports mix geometries (d, r): {sorted(dims)}")
        return cls(
            np.stack([rep.point.coords for rep in reports]),
            np.array([rep.epsilon for rep in reports]),
            reports[0].r,
            np.array([rep.point.radius for rep in reports]),
        )


ReportsLike = Union[DuchiReports, Sequence[DuchiReport]]


@dataclass(frozen=True)
class VectorEstimate:
    theta_hat: np.ndarray
    theta_raw: np.ndarray
    budgets_used: PrivacyBudgets
    norm_capped: bool


def _gamma_ratio(d: int) -> float:
    # d * sqrt(pi) * Gamma((d-1)/2 + 1) / Gamma(d/2 + 1), via log-Gamma
    return d * math.sqrt(math.pi) * math.exp(gammaln((d + 1) / 2.0) - gammaln(d / 2.0 + 1.0))


def duchi_radius(d: int, r: float, epsilon: float, variant: str = "unbiased") -> float:
    """Output sphere radius ``B`` of the hemisphere randomizer.

    ``"literal"`` is ``c * r * d * sqrt(pi) * Gamma((d+1)/2) / Gamma(d/2+1)``.
    The mean of a uniform hemisphere point along its pole is
    ``B * Gamma(d/2) / (sqrt(pi) * Gamma((d+1)/2))``, so that radius makes
    ``E[Y] = 2x``; ``"unbiased"`` (the default) is half of it and gives
    ``E[Y] = x``. For d = 1, 2, 3 the unbiased radius is ``c*r``,
    ``pi*c*r/2`` and ``2*c*r``.
    """
    if int(d) != d or d < 1:
        raise DomainError(f"dimension must be a positive integer, got {d!r}")
    if not (math.isfinite(r) and r > 0):
        raise DomainError(f"ball radius must be positive, got {r!r}")
    if variant not in RADIUS_VARIANTS:
        raise DomainError(f"unknown radius variant {variant!r}")
    c = float(rr_scales(np.array([_check_epsilon(epsilon)]))[0])
    b = c * r * _gamma_ratio(int(d))
    return b if variant == "literal" else b / 2.0


def duchi_radii(d: int, r: float, epsilons: np.ndarray, variant: str = "unbiased") -> np.ndarray:
    ratio = _gamma_ratio(int(d)) * (1.0 if variant == "literal" else 0.5)
    return rr_scales(epsilons) * (r * ratio)


def hemisphere_mass(norm_fraction, epsilon):
    """Probability the output lands in the hemisphere around ``x``:
    ``1/2 + (|x|/2r) * (e^eps - 1)/(e^eps + 1)``."""
    return 0.5 + 0.5 * np.asarray(norm_fraction) * np.tanh(np.asarray(epsilon) / 2.0)


def duchi_values(points, epsilons, r, keys, variant="unbiased"):
    """Privatize rows of ``points`` (shape ``(N, d)``) on the streams ``keys``."""
    points = np.asarray(points, dtype=np.float64)
    n, d = points.shape
    norms = np.linalg.norm(points, axis=1)
    u = kernels.uniform_draws(keys, 0, 2)
    direction = np.empty_like(points)
    nz = norms > 0
    direction[nz] = points[nz] / norms[nz, None]
    if not nz.all():
        z = ~nz
        direction[z] = kernels.sphere(keys[z], d, np.ones(int(z.sum())), ZERO_DIRECTION_BASE)
    sign = np.where(u[:, 0] < 0.5 + norms / (2.0 * r), 1.0, -1.0)
    toward = u[:, 1] < keep_probability(epsilons)
    pole = direction * np.where(toward, sign, -sign)[:, None]
    y, _ = kernels.hemisphere(keys, pole, duchi_radii(d, r, epsilons, variant), 2)
    return y


def _check_points(points, r):
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2:
        raise InputError("points must be a 2-D array (users x dimensions)")
    norms = np.linalg.norm(pts, axis=1)
    bad = ~(norms <= r * (1 + 1e-9))
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise InputError(f"row {i} has norm {norms[i]!r} > r = {r!r}")
    return pts


def duchi_privatize(x: BallPoint, epsilon: float, rng: RngHandle, variant: str = "unbiased") -> DuchiReport:
    """Privatize one ball point; consumes the counters documented in the module."""
    eps = _check_epsilon(epsilon)
    if not isinstance(x, BallPoint):
        raise InputError("x must be a BallPoint")
    if rng.counter != 0:
        # every draw position is fixed relative to the stream start
        raise DomainError("duchi_privatize needs a fresh stream (counter 0)")
    d = x.coords.shape[0]
    y = duchi_values(x.coords.reshape(1, d), np.array([eps]), x.r, rng._key, variant)[0]
    rng.counter = ZERO_DIRECTION_BASE + d
    return DuchiReport(SpherePoint(y, duchi_radius(d, x.r, eps, variant)), eps, d, x.r)


def privatize_batch(points, budgets: PrivacyBudgets, r: float, seed: int, variant: str = "unbiased") -> DuchiReports:
    """User ``i`` is privatized on stream ``i`` of ``seed``."""
    pts = _check_points(points, r)
    if pts.shape[0] != budgets.n:
        raise InputError(f"{pts.shape[0]} points for {budgets.n} budgets")
    keys = sampling.stream_keys(seed, budgets.n)
    y = duchi_values(pts, budgets.epsilons, r, keys, variant)
    return DuchiReports(y, budgets.epsilons.copy(), float(r), duchi_radii(pts.shape[1], r, budgets.epsilons, variant))


def weighted_rows(y, weights):
    """``sum_i w_i y[..., i, :]``; one code path for single and stacked trials."""
    return np.sum(np.asarray(y) * weights[:, None], axis=-2)


def cap_norm(theta, r):
    norm = float(np.linalg.norm(theta))
    if norm > r:
        return theta * (r / norm), True
    return theta, False


def multidim_estimate(reports: ReportsLike, budgets: PrivacyBudgets, cap: bool = True) -> VectorEstimate:
    batch = reports if isinstance(reports, DuchiReports) else DuchiReports.from_reports(reports)
    if len(batch) != budgets.n:
        raise InputError(f"{len(batch)} reports for {budgets.n} budgets")
    w = epsilon_squared_weights(budgets).weights
    raw = weighted_rows(batch.points, w)
    theta, capped = cap_norm(raw, batch.r) if cap else (raw, False)
    return VectorEstimate(theta, raw, budgets, capped)


def multidim_bound_shape(budgets: PrivacyBudgets, beta: float, d: int, r: float) -> float:
    """``r^2 * min((d + log(1/beta)) / sum(eps^2), 1)``."""
    b = check_beta(beta)
    return r * r * min((d + math.log(1.0 / b)) / budgets.sum_squares, 1.0)


def multidim_lower_shape(budgets: PrivacyBudgets, beta: float, d: int, r: float) -> float:
    """Constant-free lower-bound reference, reported next to the upper shape."""
    b = check_beta(beta)
    s = budgets.sum_squares
    lb = math.log(1.0 / b)
    return r * r * min((lb + d) / s, lb / s + 1.0 / math.sqrt(s), 1.0)
