"""Experiment configuration: what to simulate and with which budgets/data."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .. import sampling
from ..core import PrivacyBudgets
from .._backend import kernels

BUDGET_STREAM = 2**62 + 1

BUDGET_KINDS = ("constant", "uniform", "two_group", "explicit")
DATA_KINDS = {
    "laplace": ("bernoulli", "point"),
    "rr": ("bernoulli", "point"),
    "duchi": ("point", "antipodal"),
    "dist_learn": ("uniform", "zipf", "categorical"),
}


class ConfigError(ValueError):
    """Invalid experiment definition; ``field`` names the offending key."""

    def __init__(self, field: str, message: str, line: int | None = None):
        self.field = field
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{field}: {message}{where}")


class Mechanism(str, enum.Enum):
    LAPLACE = "laplace"
    RR = "rr"
    DUCHI = "duchi"
    DIST_LEARN = "dist_learn"


@dataclass(frozen=True)
class BudgetSpec:
    """How the ``n`` privacy budgets are produced.

    ``constant`` (``epsilon``), ``uniform`` (iid on ``[low, high]``, drawn once
    from the experiment seed), ``two_group`` (the first
    ``round((1 - fraction_high) * n)`` users get ``low``, the rest ``high``)
    or ``explicit`` (``values``).
    """

    kind: str = "constant"
    epsilon: float | None = None
    low: float | None = None
    high: float | None = None
    fraction_high: float | None = None
    values: tuple[float, ...] | None = None

    def validate(self, n: int) -> None:
        def positive(name, v):
            if v is None:
                raise ConfigError(f"budgets.{name}", f"required for kind={self.kind}")
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(f"budgets.{name}", f"must be positive and finite, got {v!r}")

        if self.kind not in BUDGET_KINDS:
            raise ConfigError("budgets.kind", f"unknown kind {self.kind!r}; expected one of {BUDGET_KINDS}")
        if self.kind == "constant":
            positive("epsilon", self.epsilon)
        elif self.kind in ("uniform", "two_group"):
            positive("low", self.low)
            positive("high", self.high)
            if self.low > self.high:
                raise ConfigError("budgets.low", "must not exceed budgets.high")
            if self.kind == "two_group":
                f = self.fraction_high
                if f is None or not 0.0 <= f <= 1.0:
                    raise ConfigError("budgets.fraction_high", f"must lie in [0, 1], got {f!r}")
        else:
            if not self.values:
                raise ConfigError("budgets.values", "required for kind=explicit")
            if len(self.values) != n:
                raise ConfigError("budgets.values", f"has {len(self.values)} entries for n = {n}")
            for v in self.values:
                positive("values", v)

    def resolve(self, n: int, seed: int) -> PrivacyBudgets:
        if self.kind == "constant":
            return PrivacyBudgets.homogeneous(self.epsilon, n)
        if self.kind == "explicit":
            return PrivacyBudgets(self.values)
        if self.kind == "two_group":
            n_low = int(round((1.0 - self.fraction_high) * n))
            return PrivacyBudgets(np.r_[np.full(n_low, self.low), np.full(n - n_low, self.high)])
        u = kernels.uniform_draws(sampling.stream_keys(sampling.derive_key(seed, BUDGET_STREAM), n), 0, 1)[:, 0]
        return PrivacyBudgets(self.low + (self.high - self.low) * u)


@dataclass(frozen=True)
class DataSpec:
    """Distribution of the users' data.

    Scalar: ``point`` (every user holds ``theta``) or ``bernoulli`` (±1 with
    mean ``theta``). Ball: ``point`` or ``antipodal`` (``±r theta/|theta|``
    with mean ``theta``). Items: ``uniform``, ``zipf`` (``p_v ~ (v+1)^-exponent``)
    or ``categorical`` (``p``).
    """

    kind: str
    theta: tuple[float, ...] = ()
    exponent: float | None = None
    p: tuple[float, ...] | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    mechanism: Mechanism
    n: int
    budgets: BudgetSpec
    data: DataSpec
    d: int | None = None
    r: float = 1.0
    trials: int = 10000
    betas: tuple[float, ...] = (0.1, 0.05, 0.01)
    seed: int = 0
    clamp: bool = True
    simplex_project: bool = False
    gamma_variant: str = "proof"
    jl_beta: float = 0.1
    radius_variant: str = "unbiased"
    _budgets: PrivacyBudgets | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "mechanism", Mechanism(self.mechanism))
        self.validate()

    def validate(self) -> None:
        mech = self.mechanism.value
        if int(self.n) != self.n or self.n < 1:
            raise ConfigError("n", f"must be a positive integer, got {self.n!r}")
        if int(self.trials) != self.trials or self.trials < 1:
            raise ConfigError("trials", f"must be a positive integer, got {self.trials!r}")
        if not self.betas:
            raise ConfigError("betas", "at least one beta is required")
        for b in self.betas:
            if not 0.0 < b < 1.0:
                raise ConfigError("betas", f"each beta must lie in (0, 1), got {b!r}")
        if not 0.0 < self.jl_beta < 1.0:
            raise ConfigError("jl_beta", f"must lie in (0, 1), got {self.jl_beta!r}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed", "must be an unsigned 64-bit integer")
        if not (math.isfinite(self.r) and self.r > 0):
            raise ConfigError("r", f"must be positive, got {self.r!r}")
        if self.gamma_variant not in ("proof", "algorithm"):
            raise ConfigError("gamma_variant", f"expected 'proof' or 'algorithm', got {self.gamma_variant!r}")
        if self.radius_variant not in ("unbiased", "literal"):
            raise ConfigError("radius_variant", f"expected 'unbiased' or 'literal', got {self.radius_variant!r}")
        self.budgets.validate(self.n)
        if self.data.kind not in DATA_KINDS[mech]:
            raise ConfigError("data.kind", f"{self.data.kind!r} is not available for {mech}; expected one of {DATA_KINDS[mech]}")
        theta = self.data.theta
        if mech in ("laplace", "rr"):
            if len(theta) != 1:
                raise ConfigError("theta", "a single scalar mean is required")
            if not -1.0 <= theta[0] <= 1.0:
                raise ConfigError("theta", f"must lie in [-1, 1], got {theta[0]!r}")
            if mech == "rr" and self.data.kind == "point" and abs(theta[0]) != 1.0:
                raise ConfigError("theta", "point data for randomized response must be -1 or +1")
        elif mech == "duchi":
            if self.d is None or self.d < 1:
                raise ConfigError("d", "a positive dimension is required for duchi")
            if len(theta) != self.d:
                raise ConfigError("theta", f"has {len(theta)} coordinates, expected d = {self.d}")
            norm = math.sqrt(sum(t * t for t in theta))
            if norm > self.r * (1 + 1e-9):
                raise ConfigError("theta", f"norm {norm!r} exceeds r = {self.r!r}")
            if self.data.kind == "antipodal" and norm == 0:
                raise ConfigError("theta", "antipodal data needs a nonzero mean direction")
        else:
            if self.d is None or self.d < 2:
                raise ConfigError("d", "a domain size d >= 2 is required for dist_learn")
            if self.data.kind == "zipf" and not (self.data.exponent is not None and self.data.exponent >= 0):
                raise ConfigError("data.exponent", "a non-negative exponent is required for zipf")
            if self.data.kind == "categorical":
                p = self.data.p
                if p is None or len(p) != self.d:
                    raise ConfigError("data.p", f"needs exactly d = {self.d} probabilities")
                if min(p) < 0 or abs(math.fsum(p) - 1.0) > 1e-9:
                    raise ConfigError("data.p", "must be non-negative and sum to 1")

    @property
    def is_scalar(self) -> bool:
        return self.mechanism in (Mechanism.LAPLACE, Mechanism.RR)

    def resolved_budgets(self) -> PrivacyBudgets:
        if self._budgets is None:
            object.__setattr__(self, "_budgets", self.budgets.resolve(self.n, self.seed))
        return self._budgets

    def distribution(self) -> np.ndarray:
        """True item distribution for dist_learn."""
        d = self.d
        if self.data.kind == "uniform":
            return np.full(d, 1.0 / d)
        if self.data.kind == "zipf":
            p = np.arange(1, d + 1, dtype=np.float64) ** -self.data.exponent
            return p / p.sum()
        return np.asarray(self.data.p, dtype=np.float64)

    def true_parameter(self):
        if self.is_scalar:
            return float(self.data.theta[0])
        if self.mechanism is Mechanism.DUCHI:
            return np.asarray(self.data.theta, dtype=np.float64)
        return self.distribution()
