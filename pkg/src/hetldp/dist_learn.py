"""Distribution learning over ``[d]`` with a shared random ±1/sqrt(m) projection.

Pipeline: the server picks ``(gamma, m)`` from the budgets and publishes the
seed of an ``m x d`` sign matrix ``Phi``. User ``i`` holding item ``x``
samples a coordinate ``j`` uniformly, keeps the sign of ``Phi[j, x]`` with
probability ``e^eps/(e^eps+1)`` (flips it otherwise) and sends the single
value ``±c_i sqrt(m)`` at position ``j``. The server forms the weighted sum
``z_bar`` of the one-sparse reports (weights ``~ 1/c_i^2``) and answers a
frequency query for ``v`` with ``<z_bar, Phi e_v>``.

``Phi`` is never stored: column ``v`` is the sign bits of stream ``v`` under
the matrix seed, so any column can be regenerated in O(m).

Items are 0-based (``0 .. d-1``); ``NULL_ITEM`` marks a user holding nothing.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence, Union

import numpy as np

from . import sampling
from ._backend import kernels
from ._kernels_py import GOLDEN, _mix64
from .core import (
    DomainError,
    InputError,
    PrivacyBudgets,
    _check_epsilon,
    check_beta,
    keep_probability,
    rr_inverse_variance_weights,
    rr_scales,
    weighted_sum,
)
from .sampling import RngHandle

NULL_ITEM = -1
GAMMA_VARIANTS = ("proof", "algorithm")
_TOP_BIT = np.uint64(63)


class JLParams(NamedTuple):
    gamma: float
    m: int


def jl_params(budgets: PrivacyBudgets, beta: float, d: int, variant: str = "proof") -> JLParams:
    """Accuracy parameter ``gamma`` and compressed dimension ``m``.

    ``proof``: ``gamma^2 = log(2d/beta) / S``; ``algorithm``:
    ``gamma = sqrt(log(2d/beta)) / S``; ``S = sum 1/c_i^2`` in both.
    ``m = max(1, ceil(log(d+1) * log(2/beta) / gamma^2))``.
    """
    b = check_beta(beta)
    if int(d) != d or d < 2:
        raise DomainError(f"domain size must be an integer >= 2, got {d!r}")
    if variant not in GAMMA_VARIANTS:
        raise DomainError(f"unknown gamma variant {variant!r}")
    inv_c2 = math.fsum((1.0 / rr_scales(budgets.epsilons) ** 2).tolist())
    log_term = math.log(2.0 * d / b)
    gamma_sq = log_term / inv_c2 if variant == "proof" else log_term / inv_c2**2
    m = max(1, math.ceil(math.log(d + 1.0) * math.log(2.0 / b) / gamma_sq))
    return JLParams(math.sqrt(gamma_sq), m)


def _entry_bits(keys: np.ndarray, rows: np.ndarray) -> np.ndarray:
    # raw draw at counter ``row`` of each key; integer-only, backend-independent
    with np.errstate(over="ignore"):
        return _mix64(keys + (rows.astype(np.uint64) + np.uint64(1)) * GOLDEN)


@dataclass(frozen=True)
class ProjectionMatrix:
    """Implicit ``m x d`` matrix with entries ``±1/sqrt(m)``, fixed by ``seed``."""

    m: int
    d: int
    seed: int
    _column_keys: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1 or int(self.d) != self.d or self.d < 1:
            raise DomainError(f"invalid projection shape m={self.m!r}, d={self.d!r}")
        object.__setattr__(self, "_column_keys", sampling.stream_keys(self.seed, self.d))

    @property
    def scale(self) -> float:
        return 1.0 / math.sqrt(self.m)

    @property
    def seed_hash(self) -> str:
        """Compatibility tag carried by every report built against this matrix."""
        return hashlib.sha256(f"{self.seed}:{self.m}:{self.d}".encode()).hexdigest()[:16]

    def _check_items(self, v) -> np.ndarray:
        arr = np.asarray(v)
        if not np.issubdtype(arr.dtype, np.integer) or arr.size and (arr.min() < 0 or arr.max() >= self.d):
            raise InputError(f"items must be integers in [0, {self.d})")
        return arr.astype(np.int64)

    def signs(self, rows, items) -> np.ndarray:
        """``sqrt(m) * Phi[rows, items]`` (elementwise ±1)."""
        items = self._check_items(items)
        bits = _entry_bits(self._column_keys[items], np.asarray(rows))
        return np.where((bits >> _TOP_BIT) == 0, 1.0, -1.0)

    def columns(self, items) -> np.ndarray:
        """Columns ``Phi e_v`` for each item, one per row; shape ``(len(items), m)``."""
        items = self._check_items(np.atleast_1d(items))
        bits = kernels.raw_draws(self._column_keys[items], 0, self.m)
        return np.where((bits >> _TOP_BIT) == 0, self.scale, -self.scale)

    def column(self, v: int) -> np.ndarray:
        return self.columns([v])[0]

    def dense(self) -> np.ndarray:
        return self.columns(np.arange(self.d)).T


def generate_projection(m: int, d: int, seed: int) -> ProjectionMatrix:
    return ProjectionMatrix(int(m), int(d), int(seed))


@dataclass(frozen=True)
class SparseReport:
    index: int
    value: float
    epsilon: float
    m: int
    d: int
    seed_hash: str


@dataclass(frozen=True)
class SparseReports:
    indices: np.ndarray
    values: np.ndarray
    epsilons: np.ndarray
    m: int
    d: int
    seed_hash: str

    def __len__(self) -> int:
        return int(self.indices.shape[0])

    def __getitem__(self, i: int) -> SparseReport:
        return SparseReport(int(self.indices[i]), float(self.values[i]), float(self.epsilons[i]),
                            self.m, self.d, self.seed_hash)

    @classmethod
    def from_reports(cls, reports: Sequence[SparseReport]) -> "SparseReports":
        if not reports:
            raise InputError("no reports")
        tags = {(r.m, r.d, r.seed_hash) for r in reports}
        if len(tags) != 1:
            raise InputError("reports were built against different projection matrices")
        m, d, tag = tags.pop()
        return cls(
            np.array([r.index for r in reports], dtype=np.int64),
            np.array([r.value for r in reports], dtype=np.float64),
            np.array([r.epsilon for r in reports], dtype=np.float64),
            m, d, tag,
        )


ReportsLike = Union[SparseReports, Sequence[SparseReport]]


@dataclass(frozen=True)
class FrequencyEstimate:
    p_hat: np.ndarray
    gamma: float
    m: int
    simplex_projected: bool = False


def sparse_values(items, epsilons, proj: ProjectionMatrix, keys):
    """Coordinates and values of one-sparse reports; counter 0 picks the
    coordinate, counter 1 drives the keep/flip (or null-item sign) coin."""
    items = np.asarray(items, dtype=np.int64)
    u = kernels.uniform_draws(keys, 0, 2)
    j = np.minimum((u[:, 0] * proj.m).astype(np.int64), proj.m - 1)
    mag = rr_scales(epsilons) * math.sqrt(proj.m)
    null = items == NULL_ITEM
    sign = np.empty(items.shape[0])
    if (~null).any():
        keep = u[~null, 1] < keep_probability(np.asarray(epsilons)[~null])
        phi = proj.signs(j[~null], items[~null])
        sign[~null] = np.where(keep, phi, -phi)
    sign[null] = np.where(u[null, 1] < 0.5, 1.0, -1.0)
    return j, mag * sign


def _check_user_items(items, d) -> np.ndarray:
    arr = np.asarray(items)
    if arr.ndim != 1 or not np.issubdtype(arr.dtype, np.integer):
        raise InputError("items must be a 1-D integer array")
    bad = (arr < NULL_ITEM) | (arr >= d)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise InputError(f"item {arr[i]} at index {i} outside [0, {d})")
    return arr.astype(np.int64)


def local_randomize_item(x: int | None, epsilon: float, proj: ProjectionMatrix, rng: RngHandle) -> SparseReport:
    """One user's report; ``x=None`` is the null item."""
    eps = _check_epsilon(epsilon)
    item = NULL_ITEM if x is None else x
    if item != NULL_ITEM and not (isinstance(item, (int, np.integer)) and 0 <= item < proj.d):
        raise InputError(f"item {x!r} outside [0, {proj.d})")
    start = rng.counter
    if start != 0:
        raise DomainError("local_randomize_item needs a fresh stream (counter 0)")
    j, val = sparse_values(np.array([item]), np.array([eps]), proj, rng._key)
    rng.counter = 2
    return SparseReport(int(j[0]), float(val[0]), eps, proj.m, proj.d, proj.seed_hash)


def privatize_batch(items, budgets: PrivacyBudgets, proj: ProjectionMatrix, seed: int) -> SparseReports:
    """User ``i`` is randomized on stream ``i`` of ``seed``."""
    arr = _check_user_items(items, proj.d)
    if arr.shape[0] != budgets.n:
        raise InputError(f"{arr.shape[0]} items for {budgets.n} budgets")
    j, val = sparse_values(arr, budgets.epsilons, proj, sampling.stream_keys(seed, budgets.n))
    return SparseReports(j, val, budgets.epsilons.copy(), proj.m, proj.d, proj.seed_hash)


def aggregate_reports(reports: ReportsLike, budgets: PrivacyBudgets, m: int | None = None) -> np.ndarray:
    """Dense ``z_bar = sum_i w_i z_i`` of length ``m``."""
    batch = reports if isinstance(reports, SparseReports) else SparseReports.from_reports(reports)
    if m is not None and m != batch.m:
        raise InputError(f"reports have m={batch.m}, expected {m}")
    if len(batch) != budgets.n:
        raise InputError(f"{len(batch)} reports for {budgets.n} budgets")
    w = rr_inverse_variance_weights(budgets).weights
    return np.bincount(batch.indices, weights=w * batch.values, minlength=batch.m)


def _check_zbar(z_bar, proj):
    z = np.asarray(z_bar, dtype=np.float64)
    if z.shape != (proj.m,):
        raise InputError(f"z_bar has shape {z.shape}, projection expects ({proj.m},)")
    return z


def frequency_query(z_bar, proj: ProjectionMatrix, v: int) -> float:
    """Estimated frequency of item ``v``: ``<z_bar, Phi e_v>`` in O(m)."""
    z = _check_zbar(z_bar, proj)
    return float(weighted_sum(proj.columns([v]), z)[0])


def estimate_distribution(z_bar, proj: ProjectionMatrix, gamma: float = float("nan")) -> FrequencyEstimate:
    z = _check_zbar(z_bar, proj)
    p_hat = weighted_sum(proj.columns(np.arange(proj.d)), z)
    return FrequencyEstimate(p_hat, gamma, proj.m, False)


def simplex_projection(v) -> np.ndarray:
    """Euclidean projection onto ``{q >= 0, sum q = 1}`` by sort and threshold."""
    v = np.asarray(v, dtype=np.float64)
    if not np.isfinite(v).all():
        raise InputError("cannot project non-finite values")
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, v.size + 1)
    rho = np.flatnonzero(u - (css - 1.0) / k > 0)[-1]
    tau = (css[rho] - 1.0) / (rho + 1)
    return np.maximum(v - tau, 0.0)


def project_to_simplex(p_hat) -> FrequencyEstimate:
    if isinstance(p_hat, FrequencyEstimate):
        return replace(p_hat, p_hat=simplex_projection(p_hat.p_hat), simplex_projected=True)
    return FrequencyEstimate(simplex_projection(p_hat), float("nan"), 0, True)


def learn_distribution(
    items,
    budgets: PrivacyBudgets,
    beta: float,
    d: int,
    seed: int,
    matrix_seed: int,
    gamma_variant: str = "proof",
    simplex: bool = False,
) -> tuple[FrequencyEstimate, ProjectionMatrix, SparseReports]:
    """Run the whole pipeline: parameters, projection, users, aggregation, queries."""
    gamma, m = jl_params(budgets, beta, d, gamma_variant)
    proj = generate_projection(m, d, matrix_seed)
    reports = privatize_batch(items, budgets, proj, seed)
    est = estimate_distribution(aggregate_reports(reports, budgets), proj, gamma)
    return (project_to_simplex(est) if simplex else est), proj, reports


def concentration_radius(budgets: PrivacyBudgets, beta: float) -> float:
    """``sqrt(2 log(2/beta) / sum 1/c_i^2)``: per-query deviation of ``z_bar``
    from its mean that is exceeded with probability at most ``beta``."""
    b = check_beta(beta)
    inv_c2 = math.fsum((1.0 / rr_scales(budgets.epsilons) ** 2).tolist())
    return math.sqrt(2.0 * math.log(2.0 / b) / inv_c2)


def expected_query(items, budgets: PrivacyBudgets, proj: ProjectionMatrix, v: int) -> float:
    """``<E[z_bar | items], Phi e_v> = sum_i w_i <Phi e_{x_i}, Phi e_v>`` for non-null items."""
    arr = _check_user_items(items, proj.d)
    w = rr_inverse_variance_weights(budgets).weights
    col_v = proj.column(v)
    present = arr != NULL_ITEM
    uniq, inv = np.unique(arr[present], return_inverse=True)
    inner = proj.columns(uniq) @ col_v
    return float(np.sum(w[present] * inner[inv]))


def dist_bound_shape(budgets: PrivacyBudgets, beta: float, d: int) -> float:
    """``min(sqrt(log(d/beta) / sum eps^2), 1)``."""
    b = check_beta(beta)
    return min(math.sqrt(math.log(d / b) / budgets.sum_squares), 1.0)


def report_probabilities(epsilon: float) -> tuple[float, float]:
    """Probabilities that a non-null report's sign agrees / disagrees with ``Phi[j, x]``."""
    eps = _check_epsilon(epsilon)
    return keep_probability(eps), keep_probability(-eps)
