import math

import numpy as np
import pytest
from scipy import stats

from hetldp import sampling
from hetldp.core import DomainError
from hetldp.sampling import (
    RngHandle,
    laplace_inverse_cdf,
    sample_bernoulli,
    sample_hemisphere_uniform,
    sample_laplace,
    sample_sphere_uniform,
)
from hetldp._backend import kernels


def test_same_stream_replays_bit_exactly():
    a, b = RngHandle(42, 7), RngHandle(42, 7)
    np.testing.assert_array_equal(a.bits(100), b.bits(100))
    np.testing.assert_array_equal(a.normals(50), b.normals(50))


def test_distinct_streams_differ():
    assert not np.array_equal(RngHandle(42, 7).bits(10), RngHandle(42, 8).bits(10))
    assert not np.array_equal(RngHandle(42, 7).bits(10), RngHandle(43, 7).bits(10))


def test_streams_are_uncorrelated():
    u = kernels.uniform_draws(sampling.stream_keys(1, 20000), 0, 2)
    r = np.corrcoef(u[:-1, 0], u[1:, 0])[0, 1]
    assert abs(r) < 4 / math.sqrt(20000)
    assert abs(np.corrcoef(u[:, 0], u[:, 1])[0, 1]) < 4 / math.sqrt(20000)


def test_uniforms_lie_strictly_inside_unit_interval():
    u = kernels.uniform_draws(sampling.stream_keys(3, 10**5), 0, 4)
    assert u.min() > 0.0 and u.max() < 1.0
    assert np.all(u != 0.5)


def test_counter_advances_like_a_sequence():
    h = RngHandle(5, 1)
    first = h.uniforms(3)
    rest = h.uniforms(2)
    np.testing.assert_array_equal(np.r_[first, rest], RngHandle(5, 1).uniforms(5))


def test_key_grid_matches_stream_keys():
    seeds = sampling.trial_seeds(9, 0, 3)
    grid = sampling.key_grid(seeds, 4)
    for t, s in enumerate(seeds.tolist()):
        np.testing.assert_array_equal(grid[t], sampling.stream_keys(s, 4))
    assert sampling.trial_seed(9, 2) == int(seeds[2])
    assert sampling.derive_key(9, 2**63 + 2) == int(seeds[2])


def test_child_seeds_match_derive_key():
    seeds = np.array([0, 1, 2**64 - 1], dtype=np.uint64)
    out = sampling.child_seeds(seeds, sampling.DATA_STREAM)
    assert [int(v) for v in out] == [sampling.derive_key(int(s), sampling.DATA_STREAM) for s in seeds.tolist()]


def test_handle_rejects_out_of_range_seed():
    with pytest.raises(DomainError):
        RngHandle(-1)
    with pytest.raises(DomainError):
        RngHandle(2**64)


class TestLaplace:
    def test_inverse_cdf_values(self):
        assert laplace_inverse_cdf(0.5, 1.0) == 0.0
        assert abs(laplace_inverse_cdf(0.25, 1.0)) == pytest.approx(math.log(2.0), rel=1e-15)
        assert laplace_inverse_cdf(0.75, 3.0) == pytest.approx(3 * math.log(2.0), rel=1e-15)

    def test_rejects_nonpositive_scale(self):
        with pytest.raises(DomainError):
            sample_laplace(0.0, RngHandle(1))

    def test_mean_of_many_draws(self):
        u = kernels.uniform_draws(sampling.stream_keys(11, 10**6), 0, 1)[:, 0]
        assert abs(laplace_inverse_cdf(u, 2.0).mean()) < 0.01

    def test_dkw_band(self):
        n = 10**5
        x = np.sort(laplace_inverse_cdf(kernels.uniform_draws(sampling.stream_keys(12, n), 0, 1)[:, 0], 1.5))
        cdf = stats.laplace.cdf(x, scale=1.5)
        gap = max(np.max(np.arange(1, n + 1) / n - cdf), np.max(cdf - np.arange(n) / n))
        assert gap <= math.sqrt(math.log(2 / 0.01) / (2 * n))

    def test_single_draw_matches_vectorized(self):
        h = RngHandle(13, 4)
        y = sample_laplace(2.0, h)
        u = kernels.uniform_draws(sampling.stream_keys(13, 5), 0, 1)[4, 0]
        assert y == float(laplace_inverse_cdf(np.array([u]), 2.0)[0])
        assert h.counter == 1


class TestBernoulli:
    def test_degenerate(self):
        h = RngHandle(1)
        assert all(sample_bernoulli(1.0, h) == 1 for _ in range(200))
        assert all(sample_bernoulli(0.0, h) == 0 for _ in range(200))

    @pytest.mark.parametrize("p", [-0.1, 1.1])
    def test_domain(self, p):
        with pytest.raises(DomainError):
            sample_bernoulli(p, RngHandle(1))

    def test_rate(self):
        p = math.e / (math.e + 1)
        u = kernels.uniform_draws(sampling.stream_keys(14, 10**6), 0, 1)[:, 0]
        assert abs(np.mean(u < p) - p) < 0.0015


class TestSphere:
    def test_d1_is_plus_minus_radius(self):
        h = RngHandle(2)
        vals = np.array([sample_sphere_uniform(1, 3.0, h).coords[0] for _ in range(400)])
        np.testing.assert_allclose(np.abs(vals), 3.0, rtol=1e-9)
        assert abs(np.mean(np.array(vals) > 0) - 0.5) < 0.1

    def test_norm_and_moments(self):
        n, d, radius = 10**5, 3, 2.0
        y = kernels.sphere(sampling.stream_keys(15, n), d, np.full(n, radius), 0)
        np.testing.assert_allclose(np.linalg.norm(y, axis=1), radius, rtol=1e-9)
        assert np.all(np.abs(y.mean(axis=0)) < 3 * radius / math.sqrt(3 * n))
        cov = y.T @ y / n
        np.testing.assert_allclose(cov, np.eye(d) * radius**2 / d, atol=0.03)

    def test_single_draw_matches_batch(self):
        h = RngHandle(16, 3)
        p = sample_sphere_uniform(4, 1.5, h)
        batch = kernels.sphere(sampling.stream_keys(16, 4), 4, np.full(4, 1.5), 0)
        np.testing.assert_array_equal(p.coords, batch[3])
        assert p.radius == 1.5 and p.d == 4

    def test_domain(self):
        with pytest.raises(DomainError):
            sample_sphere_uniform(0, 1.0, RngHandle(1))
        with pytest.raises(DomainError):
            sample_sphere_uniform(2, -1.0, RngHandle(1))


class TestHemisphere:
    def test_d1_always_along_direction(self):
        h = RngHandle(3)
        vals = np.array([sample_hemisphere_uniform(1, 2.0, [1.0], h).coords[0] for _ in range(200)])
        np.testing.assert_allclose(vals, 2.0, rtol=1e-9)

    def test_sign_constraint_and_half_circle_mean(self):
        n, radius = 10**5, 1.5
        dirs = np.tile([1.0, 0.0], (n, 1))
        y, used = kernels.hemisphere(sampling.stream_keys(17, n), dirs, np.full(n, radius), 0)
        assert np.all(y[:, 0] > 0)
        assert np.all(used >= 1)
        se = y[:, 0].std() / math.sqrt(n)
        assert abs(y[:, 0].mean() - 2 * radius / math.pi) < 4 * se
        # orthogonal coordinate is sign-balanced
        assert abs(np.mean(y[:, 1] > 0) - 0.5) < 4 * 0.5 / math.sqrt(n)

    def test_arbitrary_direction(self):
        n, d = 20000, 5
        u = np.ones(d) / math.sqrt(d)
        y, _ = kernels.hemisphere(sampling.stream_keys(18, n), np.tile(u, (n, 1)), np.ones(n), 0)
        assert np.all(y @ u > 0)
        np.testing.assert_allclose(np.linalg.norm(y, axis=1), 1.0, rtol=1e-9)

    def test_rejects_non_unit_direction(self):
        with pytest.raises(DomainError):
            sample_hemisphere_uniform(2, 1.0, [1.0, 1.0], RngHandle(1))
        with pytest.raises(DomainError):
            sample_hemisphere_uniform(3, 1.0, [1.0, 0.0], RngHandle(1))

    def test_counter_advances_by_attempts(self):
        h = RngHandle(19)
        sample_hemisphere_uniform(3, 1.0, [0.0, 0.0, 1.0], h)
        assert h.counter % 3 == 0 and h.counter >= 3
