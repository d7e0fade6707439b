import math

import numpy as np
import pytest

from hetldp.core import DomainError
from hetldp.harness import audit_all, audit_duchi, audit_laplace, audit_rr, audit_rr_monte_carlo

GRID = np.arange(-1000, 1001) * 0.01
EPSILONS = [0.05, 0.1, 0.5, 1.0]


@pytest.mark.parametrize("eps", EPSILONS)
def test_analytic_audits_hit_epsilon(eps):
    for res in (audit_rr(eps), audit_laplace(eps, GRID), audit_duchi(eps)):
        assert res.analytic
        assert res.max_log_ratio == pytest.approx(eps, abs=1e-9)
        assert res.passed


def test_rr_ln3_ratio_is_three():
    assert math.exp(audit_rr(math.log(3)).max_log_ratio) == pytest.approx(3.0, rel=1e-14)
    assert audit_rr(1.0).max_log_ratio == pytest.approx(1.0, abs=1e-12)


def test_laplace_points():
    assert audit_laplace(1.0, [0.0]).max_log_ratio == 0.0
    assert audit_laplace(0.5, [5.0]).max_log_ratio == pytest.approx(0.5, abs=1e-12)
    # interior points are strictly below the budget
    assert audit_laplace(1.0, [0.5]).max_log_ratio == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(DomainError):
        audit_laplace(1.0, [])


def test_rr_monte_carlo_interval_covers_epsilon():
    res = audit_rr_monte_carlo(1.0, draws=10**6, seed=3)
    assert not res.analytic
    assert res.details["ci_low"] <= 1.0 <= res.details["ci_high"]


class TestDuchi:
    def test_mass_examples(self):
        assert audit_duchi(1.0, 0.0).details["hemisphere_mass"] == 0.5
        assert audit_duchi(math.log(3), 1.0).details["hemisphere_mass"] == pytest.approx(0.75, rel=1e-15)

    @pytest.mark.parametrize("eps", [0.1, 0.5, 1.0])
    def test_ratio(self, eps):
        assert audit_duchi(eps).max_log_ratio == pytest.approx(eps, abs=1e-12)

    def test_monte_carlo_mass(self):
        res = audit_duchi(0.5, 0.5, mc_draws=10**5, d=5, seed=2)
        d = res.details
        assert d["mc_low"] <= d["hemisphere_mass"] <= d["mc_high"]

    @pytest.mark.parametrize("frac", [-0.1, 1.1])
    def test_norm_fraction_domain(self, frac):
        with pytest.raises(DomainError):
            audit_duchi(1.0, frac)


def test_audit_all_rows():
    rows = audit_all([0.1, 0.5])
    assert len(rows) == 6 and all(r.passed for r in rows)
