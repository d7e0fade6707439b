import math

import numpy as np
import pytest

from hetldp.core import DomainError, PrivacyBudgets
from hetldp.harness import BudgetSpec, DataSpec, ExperimentConfig, dkw_band, rr_exact_error_cdf, run_trials


def test_single_user_hand_enumeration():
    cdf = rr_exact_error_cdf(1.0, PrivacyBudgets([math.log(3)]))
    np.testing.assert_allclose(cdf.support, [1.0, 9.0], rtol=1e-14)
    np.testing.assert_allclose(cdf.probs, [0.75, 0.25], rtol=1e-14)
    assert cdf(0.5) == 0.0 and cdf(1.0) == pytest.approx(0.75) and cdf(9.0) == pytest.approx(1.0)


def test_symmetric_at_zero_mean():
    # squared error of a symmetric estimator: the two sign patterns with equal |value| merge
    cdf = rr_exact_error_cdf(0.0, PrivacyBudgets([0.7, 0.7]))
    assert len(cdf.support) == 2
    np.testing.assert_allclose(cdf.probs, [0.5, 0.5], rtol=1e-14)


def test_probabilities_sum_to_one():
    cdf = rr_exact_error_cdf(0.3, PrivacyBudgets(np.linspace(0.1, 1.0, 12)))
    assert cdf.cumulative[-1] == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.diff(cdf.support) > 0)


def test_rejects_large_n_and_bad_theta():
    with pytest.raises(DomainError):
        rr_exact_error_cdf(0.3, PrivacyBudgets.homogeneous(1.0, 21))
    with pytest.raises(DomainError):
        rr_exact_error_cdf(1.5, PrivacyBudgets([1.0]))


@pytest.mark.parametrize("n", [1, 5, 10])
def test_monte_carlo_within_dkw_band(n):
    cfg = ExperimentConfig("rr", n, BudgetSpec("uniform", low=0.1, high=1.0), DataSpec("bernoulli", (0.3,)),
                           trials=10**5, seed=100 + n, clamp=False)
    exact = rr_exact_error_cdf(0.3, cfg.resolved_budgets())
    assert exact.sup_distance(run_trials(cfg).errors) <= dkw_band(10**5)


def test_dkw_band_value():
    assert dkw_band(10**5) == pytest.approx(math.sqrt(math.log(200) / 2e5))
