"""Privacy audits: worst-case log-likelihood ratios of each randomizer.

The analytic audits evaluate the output probabilities (or densities) of a
mechanism for every pair of inputs on a grid and report the largest log
ratio; for an ``eps``-LDP mechanism it never exceeds ``eps``. The Monte
Carlo variants estimate the same quantities from the implemented samplers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .. import multidim_mech, sampling, scalar_mech
from .._backend import kernels
from ..core import DomainError, PrivacyBudgets, _check_epsilon, keep_probability


@dataclass(frozen=True)
class AuditResult:
    mechanism: str
    epsilon: float
    max_log_ratio: float
    analytic: bool
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.max_log_ratio <= self.epsilon + 1e-9


def audit_rr(epsilon: float) -> AuditResult:
    """``max_{y,x,x'} log P[y|x] - log P[y|x']`` over x, x', y in {-1, +1}."""
    eps = _check_epsilon(epsilon)
    # log P[keep], log P[flip] without forming e^eps / (e^eps + 1)
    log_keep = -math.log1p(math.exp(-eps))
    log_flip = -eps - math.log1p(math.exp(-eps))
    # rows: input +1, -1; columns: output +1, -1
    table = np.array([[log_keep, log_flip], [log_flip, log_keep]])
    diffs = table[:, None, :] - table[None, :, :]
    return AuditResult("rr", eps, float(diffs.max()), True)


def _binomial_ci(k: int, n: int, level: float) -> tuple[float, float]:
    alpha = 1.0 - level
    lo = stats.beta.ppf(alpha / 2, k, n - k + 1) if k > 0 else 0.0
    hi = stats.beta.ppf(1 - alpha / 2, k + 1, n - k) if k < n else 1.0
    return float(lo), float(hi)


def audit_rr_monte_carlo(epsilon: float, draws: int = 10**6, seed: int = 0, level: float = 0.99) -> AuditResult:
    """Empirical ``log(P[y=+1|x=+1] / P[y=+1|x=-1])`` from the sampler.

    ``details`` carries a Clopper-Pearson interval for the log ratio built
    from the two per-input intervals.
    """
    eps = _check_epsilon(epsilon)
    counts = []
    for x, stream in ((1.0, 0), (-1.0, draws)):
        u = kernels.uniform_draws(sampling.stream_keys(seed, draws, offset=stream), 0, 1)[:, 0]
        y = scalar_mech.rr_values(np.full(draws, x), np.full(draws, eps), u)
        counts.append(int(np.sum(y == 1.0)))
    k_pos, k_neg = counts
    lo_pos, hi_pos = _binomial_ci(k_pos, draws, level)
    lo_neg, hi_neg = _binomial_ci(k_neg, draws, level)
    est = math.log(k_pos / k_neg)
    return AuditResult(
        "rr", eps, est, False,
        {"ci_low": math.log(lo_pos / hi_neg), "ci_high": math.log(hi_pos / lo_neg), "draws": draws},
    )


def audit_laplace(epsilon: float, grid=None) -> AuditResult:
    """Largest ``|log f(y - 1) - log f(y + 1)|`` over output points ``y``,
    with ``f`` the Laplace(2/eps) density; inputs 1 and -1 are the extreme
    pair of ``[-1, 1]``."""
    eps = _check_epsilon(epsilon)
    y = np.arange(-1000, 1001) * 0.01 if grid is None else np.asarray(grid, dtype=np.float64)
    if y.size == 0:
        raise DomainError("empty output grid")
    scale = 2.0 / eps
    ratio = stats.laplace.logpdf(y, loc=1.0, scale=scale) - stats.laplace.logpdf(y, loc=-1.0, scale=scale)
    i = int(np.argmax(np.abs(ratio)))
    return AuditResult("laplace", eps, float(abs(ratio[i])), True, {"argmax": float(y[i]), "grid_size": int(y.size)})


def audit_duchi(
    epsilon: float,
    norm_fraction: float = 1.0,
    mc_draws: int = 0,
    d: int = 3,
    seed: int = 0,
    level: float = 0.99,
) -> AuditResult:
    """Likelihood-ratio audit of the hemisphere randomizer.

    For an output ``y`` the density given input ``x`` is proportional to
    ``a*k + (1-a)*(1-k)`` where ``k = e^eps/(e^eps+1)`` and ``a`` is the
    chance that the flipped point ``x~`` lies on ``y``'s side; ``a`` ranges
    over ``1/2 ± |x|/(2r)``, i.e. over all of [0, 1] as ``x`` sweeps the
    ball. The audit takes the worst pair on a grid of ``a``.

    Also reports the hemisphere mass ``P[<Y, x> > 0]`` for
    ``|x| = norm_fraction * r`` and, when ``mc_draws > 0``, its Monte Carlo
    estimate with a Clopper-Pearson interval.
    """
    eps = _check_epsilon(epsilon)
    if not 0.0 <= norm_fraction <= 1.0:
        raise DomainError(f"norm_fraction must lie in [0, 1], got {norm_fraction!r}")
    k = keep_probability(eps)
    fractions = np.linspace(0.0, 1.0, 101)
    a = np.concatenate([0.5 + fractions / 2.0, 0.5 - fractions / 2.0])
    log_q = np.log(a * k + (1.0 - a) * keep_probability(-eps))
    max_ratio = float(log_q.max() - log_q.min())
    mass = float(multidim_mech.hemisphere_mass(norm_fraction, eps))
    details = {"hemisphere_mass": mass}
    if mc_draws > 0:
        x = np.zeros(d)
        x[0] = norm_fraction
        pts = np.tile(x, (mc_draws, 1))
        y = multidim_mech.privatize_batch(pts, PrivacyBudgets.homogeneous(eps, mc_draws), 1.0, seed).points
        hits = int(np.sum(y[:, 0] > 0))
        lo, hi = _binomial_ci(hits, mc_draws, level)
        details.update({"mc_mass": hits / mc_draws, "mc_low": lo, "mc_high": hi, "mc_draws": mc_draws})
    return AuditResult("duchi", eps, max_ratio, True, details)


def audit_all(epsilons, mc_draws: int = 0, seed: int = 0) -> list[AuditResult]:
    out = []
    for eps in epsilons:
        out.append(audit_rr(eps))
        out.append(audit_laplace(eps))
        out.append(audit_duchi(eps, mc_draws=mc_draws, seed=seed))
    return out
