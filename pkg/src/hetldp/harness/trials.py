"""Monte Carlo trials, empirical quantiles and bound-shape fits."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .. import dist_learn, multidim_mech, sampling, scalar_mech
from .._backend import kernels
from ..core import (
    DomainError,
    PrivacyBudgets,
    check_beta,
    epsilon_squared_weights,
    laplace_weights,
    rr_inverse_variance_weights,
    scalar_bound_shape,
    uniform_weights,
    weighted_sum,
)
from .config import ExperimentConfig, Mechanism

MATRIX_STREAM = 2**62 + 2
_CHUNK_ELEMENTS = 1 << 20


@dataclass(frozen=True)
class ErrorSample:
    """Per-trial errors: squared error for means, sup-norm error for
    distributions. ``estimates`` holds the raw (unclamped) estimate of every
    trial."""

    errors: np.ndarray
    seeds: np.ndarray
    estimates: np.ndarray

    def __len__(self) -> int:
        return int(self.errors.shape[0])


def matrix_seed(seed: int) -> int:
    """Seed of the public projection matrix for a run keyed by ``seed``."""
    return sampling.derive_key(seed, MATRIX_STREAM)


def draw_data(cfg: ExperimentConfig, data_keys: np.ndarray) -> np.ndarray:
    """Users' data from their data-stream keys (any leading shape)."""
    shape = data_keys.shape
    flat = data_keys.reshape(-1)
    kind = cfg.data.kind
    if cfg.is_scalar:
        theta = cfg.data.theta[0]
        if kind == "point":
            return np.full(shape, theta)
        u = kernels.uniform_draws(flat, 0, 1)[:, 0].reshape(shape)
        return np.where(u < (1.0 + theta) / 2.0, 1.0, -1.0)
    if cfg.mechanism is Mechanism.DUCHI:
        theta = np.asarray(cfg.data.theta, dtype=np.float64)
        if kind == "point":
            return np.broadcast_to(theta, shape + theta.shape).copy()
        norm = float(np.linalg.norm(theta))
        u = kernels.uniform_draws(flat, 0, 1)[:, 0].reshape(shape)
        sign = np.where(u < 0.5 + norm / (2.0 * cfg.r), 1.0, -1.0)
        return sign[..., None] * (cfg.r / norm) * theta
    cdf = np.cumsum(cfg.distribution())
    u = kernels.uniform_draws(flat, 0, 1)[:, 0].reshape(shape)
    return np.minimum(np.searchsorted(cdf, u, side="right"), cfg.d - 1).astype(np.int64)


def trial_inputs(cfg: ExperimentConfig, trial: int) -> tuple[int, np.ndarray]:
    """Seed and user data of one trial, exactly as :func:`run_trials` sees them."""
    seed = sampling.trial_seed(cfg.seed, trial)
    data = draw_data(cfg, sampling.stream_keys(sampling.data_seed(seed), cfg.n))
    return seed, data


def _weights(cfg: ExperimentConfig, budgets: PrivacyBudgets, weighting: str) -> np.ndarray:
    if weighting == "uniform":
        return uniform_weights(budgets.n)
    if weighting != "paper":
        raise DomainError(f"unknown weighting {weighting!r}")
    fn = {
        Mechanism.LAPLACE: laplace_weights,
        Mechanism.RR: rr_inverse_variance_weights,
        Mechanism.DUCHI: epsilon_squared_weights,
        Mechanism.DIST_LEARN: rr_inverse_variance_weights,
    }[cfg.mechanism]
    return fn(budgets).weights


def _chunks(total: int, per_trial: int):
    step = max(1, _CHUNK_ELEMENTS // max(per_trial, 1))
    for start in range(0, total, step):
        yield start, min(step, total - start)


def _scalar_trials(cfg, budgets, w):
    theta = cfg.data.theta[0]
    eps = budgets.epsilons
    errors, raws = [], []
    for start, cnt in _chunks(cfg.trials, cfg.n):
        seeds = sampling.trial_seeds(cfg.seed, start, cnt)
        x = draw_data(cfg, sampling.key_grid(sampling.child_seeds(seeds, sampling.DATA_STREAM), cfg.n))
        keys = sampling.key_grid(seeds, cfg.n).reshape(-1)
        u = kernels.uniform_draws(keys, 0, 1)[:, 0].reshape(cnt, cfg.n)
        if cfg.mechanism is Mechanism.LAPLACE:
            y = scalar_mech.laplace_values(x, eps, u)
        else:
            y = scalar_mech.rr_debiased(scalar_mech.rr_values(x, eps, u), eps)
        raw = weighted_sum(y, w)
        est = np.clip(raw, -1.0, 1.0) if cfg.clamp else raw
        errors.append((est - theta) ** 2)
        raws.append(raw)
    return np.concatenate(errors), np.concatenate(raws)


def _duchi_trials(cfg, budgets, w):
    theta = np.asarray(cfg.data.theta, dtype=np.float64)
    d = cfg.d
    errors, raws = [], []
    for start, cnt in _chunks(cfg.trials, cfg.n * d):
        seeds = sampling.trial_seeds(cfg.seed, start, cnt)
        x = draw_data(cfg, sampling.key_grid(sampling.child_seeds(seeds, sampling.DATA_STREAM), cfg.n))
        keys = sampling.key_grid(seeds, cfg.n).reshape(-1)
        y = multidim_mech.duchi_values(
            x.reshape(-1, d), np.tile(budgets.epsilons, cnt), cfg.r, keys, cfg.radius_variant
        ).reshape(cnt, cfg.n, d)
        raw = multidim_mech.weighted_rows(y, w)
        est = raw
        if cfg.clamp:
            norms = np.linalg.norm(raw, axis=1)
            scale = np.where(norms > cfg.r, cfg.r / np.where(norms > 0, norms, 1.0), 1.0)
            est = raw * scale[:, None]
        errors.append(np.sum((est - theta) ** 2, axis=1))
        raws.append(raw)
    return np.concatenate(errors), np.concatenate(raws)


def _dist_trials(cfg, budgets, w):
    p = cfg.distribution()
    _, m = dist_learn.jl_params(budgets, cfg.jl_beta, cfg.d, cfg.gamma_variant)
    seeds = sampling.trial_seeds(cfg.seed, 0, cfg.trials)
    errors, raws = [], []
    for seed in seeds.tolist():
        items = draw_data(cfg, sampling.stream_keys(sampling.data_seed(seed), cfg.n))
        proj = dist_learn.generate_projection(m, cfg.d, matrix_seed(seed))
        j, val = dist_learn.sparse_values(items, budgets.epsilons, proj, sampling.stream_keys(seed, cfg.n))
        z_bar = np.bincount(j, weights=w * val, minlength=m)
        p_hat = dist_learn.estimate_distribution(z_bar, proj).p_hat
        est = dist_learn.simplex_projection(p_hat) if cfg.simplex_project else p_hat
        errors.append(float(np.max(np.abs(est - p))))
        raws.append(p_hat)
    return np.array(errors), np.stack(raws)


def run_trials(cfg: ExperimentConfig, weighting: str = "paper") -> ErrorSample:
    """Simulate ``cfg.trials`` independent runs of the configured protocol.

    Trial ``t`` uses seed ``trial_seed(cfg.seed, t)``; its users' data come
    from the trial's data seed and user ``i`` privatizes on stream ``i``.
    ``weighting="uniform"`` swaps the server weights for ``1/n`` on the same
    reports (the heterogeneity-blind baseline).
    """
    budgets = cfg.resolved_budgets()
    w = _weights(cfg, budgets, weighting)
    if cfg.is_scalar:
        errors, raws = _scalar_trials(cfg, budgets, w)
    elif cfg.mechanism is Mechanism.DUCHI:
        errors, raws = _duchi_trials(cfg, budgets, w)
    else:
        errors, raws = _dist_trials(cfg, budgets, w)
    seeds = sampling.trial_seeds(cfg.seed, 0, cfg.trials)
    return ErrorSample(errors, seeds, raws)


def empirical_quantile(errors, beta: float) -> float:
    """Upper ``(1 - beta)`` quantile: the ``ceil((1 - beta) T)``-th smallest error."""
    b = check_beta(beta)
    values = np.asarray(errors.errors if isinstance(errors, ErrorSample) else errors, dtype=np.float64)
    if values.size == 0:
        raise DomainError("empty error sample")
    # the 1e-9 slack keeps (1 - 0.05) * 100 from rounding up to 96
    k = max(1, math.ceil((1.0 - b) * values.size - 1e-9))
    return float(np.partition(values, k - 1)[k - 1])


def reference_shape(cfg: ExperimentConfig) -> Callable[[float], float]:
    budgets = cfg.resolved_budgets()
    if cfg.is_scalar:
        return lambda beta: scalar_bound_shape(budgets, beta)
    if cfg.mechanism is Mechanism.DUCHI:
        return lambda beta: multidim_mech.multidim_bound_shape(budgets, beta, cfg.d, cfg.r)
    return lambda beta: dist_learn.dist_bound_shape(budgets, beta, cfg.d)


def lower_shape(cfg: ExperimentConfig) -> Callable[[float], float] | None:
    """Constant-free lower-bound reference curve, where one exists."""
    budgets = cfg.resolved_budgets()
    if cfg.is_scalar:
        # stated for beta < 1/2 only
        return lambda beta: scalar_bound_shape(budgets, beta) if beta < 0.5 else None
    if cfg.mechanism is Mechanism.DUCHI:
        return lambda beta: multidim_mech.multidim_lower_shape(budgets, beta, cfg.d, cfg.r)
    return None


@dataclass(frozen=True)
class BoundRow:
    beta: float
    empirical_quantile: float
    shape: float
    fitted_constant: float
    residual: float


def bound_comparison(errors, betas: Sequence[float], shape_fn: Callable[[float], float]) -> list[BoundRow]:
    """Least-squares constant ``K`` in ``quantile(beta) ~ K * shape(beta)``.

    ``residual`` is relative: ``(quantile - K*shape) / (K*shape)``.
    """
    if len(betas) == 0:
        raise DomainError("no betas")
    q = np.array([empirical_quantile(errors, b) for b in betas])
    s = np.array([float(shape_fn(b)) for b in betas])
    if not np.any(s != 0):
        raise DomainError("reference shape is identically zero")
    k = float(np.dot(q, s) / np.dot(s, s))
    rows = []
    for b, qi, si in zip(betas, q, s):
        fit = k * si
        res = (qi - fit) / fit if fit != 0 else (0.0 if qi == 0 else math.inf)
        rows.append(BoundRow(float(b), float(qi), float(si), k, float(res)))
    return rows


@dataclass(frozen=True)
class AffineFit:
    slope: float
    intercept: float
    r2: float


def affine_fit(x, y) -> AffineFit:
    """Ordinary least squares ``y ~ a x + b`` and its coefficient of determination."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    a, b = np.polyfit(x, y, 1)
    resid = y - (a * x + b)
    tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / tot if tot > 0 else 1.0
    return AffineFit(float(a), float(b), r2)


def query_deviations(items, budgets: PrivacyBudgets, proj, v: int, reps: int, seed: int) -> np.ndarray:
    """``<z_bar - E z_bar, Phi e_v>`` over ``reps`` independent runs of the
    randomizers on fixed ``items`` and a fixed matrix; run ``t`` privatizes
    on trial seed ``t`` of ``seed``."""
    items = np.asarray(items, dtype=np.int64)
    n = budgets.n
    w = rr_inverse_variance_weights(budgets).weights
    mean = dist_learn.expected_query(items, budgets, proj, v)
    out = []
    for start, cnt in _chunks(reps, n):
        keys = sampling.key_grid(sampling.trial_seeds(seed, start, cnt), n).reshape(-1)
        j, val = dist_learn.sparse_values(np.tile(items, cnt), np.tile(budgets.epsilons, cnt), proj, keys)
        phi_v = proj.signs(j, np.full(j.shape[0], v)) * proj.scale
        out.append(weighted_sum((val * phi_v).reshape(cnt, n), w) - mean)
    return np.concatenate(out)
