"""Simulation driver and report tables."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig
from .trials import BoundRow, ErrorSample, bound_comparison, lower_shape, reference_shape, run_trials

REPORT_COLUMNS = ("beta", "empirical_quantile", "shape", "fitted_constant", "residual")


@dataclass(frozen=True)
class SimulationResult:
    config: ExperimentConfig
    sample: ErrorSample
    rows: list[BoundRow]
    lower: list[float | None]

    def summary(self) -> dict:
        """JSON-ready digest of the run; floats are kept at full precision."""
        cfg = self.config
        budgets = cfg.resolved_budgets()
        errors = self.sample.errors
        return {
            "mechanism": cfg.mechanism.value,
            "n": cfg.n,
            "d": cfg.d,
            "trials": cfg.trials,
            "seed": cfg.seed,
            "sum_eps_squared": budgets.sum_squares,
            "budgets_above_one": bool(budgets.above_one),
            "fitted_constant": self.rows[0].fitted_constant,
            "mean_error": float(math.fsum(errors.tolist()) / errors.size),
            "median_error": float(np.median(errors)),
            "max_abs_residual": max(abs(r.residual) for r in self.rows),
            "rows": [
                {**{k: getattr(r, k) for k in REPORT_COLUMNS}, "lower_shape": lo}
                for r, lo in zip(self.rows, self.lower)
            ],
        }


def simulate(cfg: ExperimentConfig, weighting: str = "paper") -> SimulationResult:
    """Run the trials and compare their quantiles with the reference shape."""
    sample = run_trials(cfg, weighting)
    rows = bound_comparison(sample, cfg.betas, reference_shape(cfg))
    lo_fn = lower_shape(cfg)
    lower = [lo_fn(b) if lo_fn else None for b in cfg.betas]
    return SimulationResult(cfg, sample, rows, lower)
