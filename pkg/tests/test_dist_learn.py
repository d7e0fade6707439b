import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import brentq
from scipy.stats import binom

from hetldp import dist_learn as dl
from hetldp import sampling
from hetldp.core import DomainError, InputError, PrivacyBudgets, keep_probability, rr_scale
from hetldp.dist_learn import (
    NULL_ITEM,
    SparseReport,
    SparseReports,
    aggregate_reports,
    estimate_distribution,
    frequency_query,
    generate_projection,
    jl_params,
    local_randomize_item,
    project_to_simplex,
    simplex_projection,
)
from hetldp.sampling import RngHandle


class TestJlParams:
    def test_reference_example(self):
        mpmath.mp.dps = 40
        c = (mpmath.e + 1) / (mpmath.e - 1)
        s = 100 / c**2
        g2 = mpmath.log(1280) / s
        m_oracle = int(mpmath.ceil(mpmath.log(65) * mpmath.log(20) / g2))
        gamma, m = jl_params(PrivacyBudgets.homogeneous(1.0, 100), 0.1, 64)
        assert gamma**2 == pytest.approx(float(g2), rel=1e-13)
        assert gamma**2 == pytest.approx(0.33503, abs=1e-5)
        assert m == m_oracle == 38

    def test_scaling_in_inverse_c_squared(self):
        b = PrivacyBudgets.homogeneous(0.5, 400)
        g1, m1 = jl_params(b, 0.05, 100)
        g2, m2 = jl_params(PrivacyBudgets.homogeneous(0.5, 800), 0.05, 100)
        assert g2**2 == pytest.approx(g1**2 / 2, rel=1e-12)
        assert m2 in (2 * m1 - 1, 2 * m1)

    def test_m_floor_near_beta_one(self):
        _, m = jl_params(PrivacyBudgets.homogeneous(1.0, 5), 0.999999, 2)
        assert m == 1

    def test_algorithm_variant(self):
        b = PrivacyBudgets.homogeneous(1.0, 100)
        s = 100 / rr_scale(1.0) ** 2
        gamma, _ = jl_params(b, 0.1, 64, "algorithm")
        assert gamma == pytest.approx(math.sqrt(math.log(1280)) / s, rel=1e-12)

    def test_domain(self):
        b = PrivacyBudgets([1.0])
        with pytest.raises(DomainError):
            jl_params(b, 1.0, 4)
        with pytest.raises(DomainError):
            jl_params(b, 0.1, 1)
        with pytest.raises(DomainError):
            jl_params(b, 0.1, 4, "other")


class TestProjection:
    def test_entries_and_determinism(self):
        a, b = generate_projection(50, 40, 3), generate_projection(50, 40, 3)
        dense = a.dense()
        assert dense.shape == (50, 40)
        np.testing.assert_array_equal(dense, b.dense())
        assert set(np.unique(dense)) == {-1 / math.sqrt(50), 1 / math.sqrt(50)}
        assert not np.array_equal(dense, generate_projection(50, 40, 4).dense())

    def test_unit_columns(self):
        cols = generate_projection(37, 20, 9).columns(np.arange(20))
        np.testing.assert_allclose(np.linalg.norm(cols, axis=1), 1.0, rtol=1e-14)

    def test_entry_balance(self):
        m, d = 100, 1000
        dense = generate_projection(m, d, 11).dense() * math.sqrt(m)
        assert abs(dense.mean()) < 3 / math.sqrt(m * d)

    def test_signs_agree_with_columns(self):
        p = generate_projection(13, 7, 2)
        rows = np.array([0, 5, 12, 3])
        items = np.array([6, 0, 3, 3])
        np.testing.assert_array_equal(p.signs(rows, items) * p.scale, p.dense()[rows, items])

    def test_rejects_bad_items(self):
        with pytest.raises(InputError):
            generate_projection(4, 3, 0).columns([3])


class TestLocalRandomizer:
    def test_report_structure(self):
        p = generate_projection(64, 10, 1)
        rep = local_randomize_item(3, 0.7, p, RngHandle(2, 5))
        assert 0 <= rep.index < 64
        assert abs(rep.value) == pytest.approx(rr_scale(0.7) * 8.0, rel=1e-12)
        assert (rep.m, rep.d, rep.seed_hash) == (64, 10, p.seed_hash)

    def test_huge_budget_matches_matrix_sign(self):
        p = generate_projection(49, 6, 2)
        for i in range(100):
            rep = local_randomize_item(i % 6, 60.0, p, RngHandle(3, i))
            assert rep.value == pytest.approx(math.sqrt(49) * p.signs([rep.index], [i % 6])[0], rel=1e-15)

    def test_keep_rate_ln3(self):
        n = 10**5
        p = generate_projection(31, 5, 4)
        items = np.full(n, 2)
        reps = dl.privatize_batch(items, PrivacyBudgets.homogeneous(math.log(3), n), p, 5)
        agree = np.sign(reps.values) == p.signs(reps.indices, items)
        lo, hi = binom.interval(0.99, n, 0.75)
        assert lo <= agree.sum() <= hi

    def test_conditional_mean_is_the_column(self):
        n, m = 10**6, 16
        p = generate_projection(m, 8, 6)
        reps = dl.privatize_batch(np.full(n, 5), PrivacyBudgets.homogeneous(1.0, n), p, 7)
        mean = np.bincount(reps.indices, weights=reps.values, minlength=m) / n
        se = rr_scale(1.0) / math.sqrt(n)
        assert np.all(np.abs(mean - p.column(5)) < 4.5 * se)

    def test_null_item_is_a_fair_sign(self):
        n = 10**5
        p = generate_projection(9, 4, 8)
        reps = dl.privatize_batch(np.full(n, NULL_ITEM), PrivacyBudgets.homogeneous(2.0, n), p, 9)
        lo, hi = binom.interval(0.99, n, 0.5)
        assert lo <= np.sum(reps.values > 0) <= hi
        rep = local_randomize_item(None, 1.0, p, RngHandle(1))
        assert abs(rep.value) == pytest.approx(3 * rr_scale(1.0))

    def test_batch_matches_single_users(self):
        p = generate_projection(20, 6, 10)
        items = np.array([0, 5, NULL_ITEM, 2])
        b = PrivacyBudgets([1.0, 0.2, 0.5, 3.0])
        reps = dl.privatize_batch(items, b, p, 12)
        for i, x in enumerate(items.tolist()):
            single = local_randomize_item(None if x == NULL_ITEM else x, b.epsilons[i], p, RngHandle(12, i))
            assert single == reps[i]

    def test_item_range(self):
        p = generate_projection(4, 3, 0)
        with pytest.raises(InputError):
            local_randomize_item(3, 1.0, p, RngHandle(1))
        with pytest.raises(InputError):
            dl.privatize_batch(np.array([0, 7]), PrivacyBudgets([1, 1]), p, 0)

    def test_privacy_ratio_algebra(self):
        for eps in np.logspace(-3, 1, 1000):
            keep, flip = dl.report_probabilities(eps)
            assert abs(math.log(keep / flip) - eps) < 1e-10
            assert keep + flip == pytest.approx(1.0, abs=1e-15)


class TestAggregation:
    def test_single_user(self):
        p = generate_projection(10, 4, 1)
        reps = dl.privatize_batch(np.array([2]), PrivacyBudgets([0.8]), p, 3)
        z = aggregate_reports(reps, PrivacyBudgets([0.8]))
        expected = np.zeros(10)
        expected[reps.indices[0]] = reps.values[0]
        np.testing.assert_array_equal(z, expected)

    def test_cancellation(self):
        r = [SparseReport(3, 2.0, 1.0, 5, 4, "t"), SparseReport(3, -2.0, 1.0, 5, 4, "t")]
        assert aggregate_reports(r, PrivacyBudgets([1.0, 1.0]))[3] == 0.0

    def test_matches_dense_brute_force(self):
        n, m = 100, 12
        p = generate_projection(m, 7, 2)
        b = PrivacyBudgets(np.linspace(0.1, 2.0, n))
        reps = dl.privatize_batch(np.arange(n) % 7, b, p, 4)
        w = dl.rr_inverse_variance_weights(b).weights
        dense = np.zeros((n, m))
        dense[np.arange(n), reps.indices] = reps.values
        np.testing.assert_allclose(aggregate_reports(reps, b), w @ dense, rtol=1e-12, atol=1e-15)

    def test_rejects_mismatched_matrices(self):
        r = [SparseReport(0, 1.0, 1.0, 5, 4, "a"), SparseReport(0, 1.0, 1.0, 5, 4, "b")]
        with pytest.raises(InputError):
            SparseReports.from_reports(r)
        with pytest.raises(InputError):
            aggregate_reports(r[:1], PrivacyBudgets([1.0]), m=6)


class TestQueries:
    def test_zero_and_self_column(self):
        p = generate_projection(30, 9, 5)
        assert frequency_query(np.zeros(30), p, 4) == 0.0
        assert frequency_query(p.column(4), p, 4) == pytest.approx(1.0, rel=1e-14)

    def test_vectorized_matches_queries_and_is_linear(self):
        p = generate_projection(30, 9, 5)
        z = np.random.default_rng(1).normal(size=30)
        est = estimate_distribution(z, p)
        assert [frequency_query(z, p, v) for v in range(9)] == est.p_hat.tolist()
        assert est.p_hat.sum() == pytest.approx(float(z @ p.dense().sum(axis=1)), rel=1e-12)
        with pytest.raises(InputError):
            estimate_distribution(np.zeros(29), p)
        with pytest.raises(InputError):
            frequency_query(z, p, 9)

    def test_jl_fidelity(self):
        d = 500
        b = PrivacyBudgets.homogeneous(1.0, 2000)
        gamma, m = jl_params(b, 0.1, d)
        p = generate_projection(m, d, 13)
        rng = np.random.default_rng(14)
        u, v = rng.integers(0, d, 200), rng.integers(0, d, 200)
        inner = np.sum(p.columns(u) * p.columns(v), axis=1)
        ok = np.abs(inner - (u == v)) <= 4 * gamma
        assert ok.mean() >= 0.95

    def test_full_pipeline_uniform(self):
        d, n, beta = 32, 10**4, 0.1
        b = PrivacyBudgets.homogeneous(1.0, n)
        bound = 3 * math.sqrt(math.log(d / beta) / b.sum_squares)
        hits = 0
        for run in range(50):
            seed = sampling.trial_seed(15, run)
            items = (np.arange(n) % d).astype(np.int64)
            est, _, _ = dl.learn_distribution(items, b, beta, d, seed, sampling.derive_key(seed, 1))
            hits += np.max(np.abs(est.p_hat - 1 / d)) <= bound
        assert hits >= 45


def _simplex_oracle(v):
    # tau solves sum(max(v - tau, 0)) = 1
    tau = brentq(lambda t: np.maximum(v - t, 0).sum() - 1.0, v.min() - 1.0, v.max(), xtol=1e-15)
    return np.maximum(v - tau, 0.0)


class TestSimplex:
    def test_examples(self):
        np.testing.assert_allclose(simplex_projection([0.6, 0.6]), [0.5, 0.5])
        np.testing.assert_allclose(simplex_projection([1.2, -0.2]), [1.0, 0.0])
        p = np.array([0.1, 0.2, 0.7])
        np.testing.assert_allclose(simplex_projection(p), p, atol=1e-15)

    def test_flag_and_nonfinite(self):
        est = project_to_simplex(dl.FrequencyEstimate(np.array([0.9, 0.9]), 0.1, 5))
        assert est.simplex_projected and est.m == 5
        with pytest.raises(InputError):
            simplex_projection([np.nan, 1.0])

    @given(st.lists(st.floats(min_value=-10, max_value=10), min_size=1, max_size=50))
    def test_projection_properties(self, values):
        v = np.array(values)
        q = simplex_projection(v)
        assert np.all(q >= 0)
        assert q.sum() == pytest.approx(1.0, abs=1e-9)
        np.testing.assert_allclose(simplex_projection(q), q, atol=1e-12)
        np.testing.assert_allclose(q, _simplex_oracle(v), atol=1e-9)

    @given(st.integers(2, 30), st.integers(0, 2**32 - 1), st.floats(0.0, 0.5))
    def test_linf_error_at_most_doubles(self, d, seed, noise):
        rng = np.random.default_rng(seed)
        p = rng.dirichlet(np.ones(d))
        p_hat = p + rng.uniform(-noise, noise, d)
        err = np.max(np.abs(p_hat - p))
        assert np.max(np.abs(simplex_projection(p_hat) - p)) <= 2 * err + 1e-12


def test_bound_shape_and_radius():
    b = PrivacyBudgets.homogeneous(1.0, 10**4)
    assert dl.dist_bound_shape(b, 0.1, 32) == pytest.approx(math.sqrt(math.log(320) / 1e4))
    assert dl.dist_bound_shape(PrivacyBudgets([0.1]), 0.1, 32) == 1.0
    inv = 10**4 / rr_scale(1.0) ** 2
    assert dl.concentration_radius(b, 0.1) == pytest.approx(math.sqrt(2 * math.log(20) / inv))
