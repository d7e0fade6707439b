"""Seedable random streams and the geometric samplers built on them.

Randomness is counter based: draw ``k`` of stream ``s`` under seed ``S`` is
a fixed 64-bit hash of ``(S, s, k)``. A stream can therefore be replayed,
skipped ahead, or evaluated for thousands of users at once without any
shared generator state.

Stream conventions used throughout the package:

* privatization: ``stream_id = user_index`` under the run seed;
* harness trial ``t``: the trial seed is the key of stream ``2**63 + t``
  under the master seed, and users are streams of that trial seed;
* the data drawn for a trial lives under a separate seed, the key of
  stream ``DATA_STREAM`` under the trial seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from ._kernels_py import SEED_SALT, STREAM_SALT, _mix64
from .core import DomainError

TRIAL_STREAM_BASE = 2**63
DATA_STREAM = 2**62
UINT64_MASK = 2**64 - 1


def derive_key(seed: int, stream_id: int) -> int:
    """The 64-bit key of one stream; also used to derive child seeds."""
    return int(kernels.derive_keys(seed & UINT64_MASK, np.array([stream_id], dtype=np.uint64))[0])


def stream_keys(seed: int, n: int, offset: int = 0) -> np.ndarray:
    """Keys of streams ``offset .. offset + n - 1`` under ``seed``."""
    streams = np.arange(offset, offset + n, dtype=np.uint64)
    return kernels.derive_keys(seed & UINT64_MASK, streams)


def key_grid(seeds: np.ndarray, n: int) -> np.ndarray:
    """Keys of user streams ``0..n-1`` for each seed; shape ``(len(seeds), n)``.

    Same values as calling :func:`stream_keys` once per seed.
    """
    seeds = np.asarray(seeds, dtype=np.uint64)
    streams = np.arange(n, dtype=np.uint64)
    with np.errstate(over="ignore"):
        base = _mix64(seeds ^ SEED_SALT)
        return _mix64(base[:, None] + _mix64(streams ^ STREAM_SALT)[None, :])


def trial_seed(master_seed: int, trial: int) -> int:
    return derive_key(master_seed, TRIAL_STREAM_BASE + trial)


def trial_seeds(master_seed: int, start: int, count: int) -> np.ndarray:
    return stream_keys(master_seed, count, offset=TRIAL_STREAM_BASE + start)


def data_seed(seed: int) -> int:
    return derive_key(seed, DATA_STREAM)


@dataclass
class RngHandle:
    """One replayable random stream.

    A handle is owned by a single caller; ``counter`` advances with every
    draw. Two handles with equal ``(seed, stream_id, counter)`` produce
    identical draws.
    """

    seed: int
    stream_id: int = 0
    counter: int = 0

    def __post_init__(self):
        if not (0 <= self.seed <= UINT64_MASK and 0 <= self.stream_id <= UINT64_MASK):
            raise DomainError("seed and stream_id must be unsigned 64-bit integers")
        self._key = np.array([derive_key(self.seed, self.stream_id)], dtype=np.uint64)

    @property
    def key(self) -> int:
        return int(self._key[0])

    def _take(self, k: int) -> int:
        start = self.counter
        self.counter += k
        return start

    def uniforms(self, k: int) -> np.ndarray:
        """``k`` uniforms on the open interval (0, 1)."""
        return kernels.uniform_draws(self._key, self._take(k), k)[0]

    def uniform(self) -> float:
        return float(self.uniforms(1)[0])

    def normals(self, k: int) -> np.ndarray:
        return kernels.normal_draws(self._key, self._take(k), k)[0]

    def bits(self, k: int) -> np.ndarray:
        return kernels.raw_draws(self._key, self._take(k), k)[0]


@dataclass(frozen=True)
class SpherePoint:
    coords: np.ndarray
    radius: float

    @property
    def d(self) -> int:
        return int(self.coords.shape[0])


def laplace_inverse_cdf(u, scale):
    """Laplace(0, scale) quantile at ``u - 1/2``; ``u`` is a uniform in (0, 1).

    Vectorized over ``u`` and ``scale``.
    """
    centered = np.asarray(u, dtype=np.float64) - 0.5
    return -np.asarray(scale) * np.sign(centered) * np.log1p(-2.0 * np.abs(centered))


def sample_laplace(scale: float, rng: RngHandle) -> float:
    """One Laplace draw with mean 0 and the given scale (one uniform)."""
    if not scale > 0:
        raise DomainError(f"Laplace scale must be positive, got {scale!r}")
    return float(laplace_inverse_cdf(rng.uniforms(1), scale)[0])


def sample_bernoulli(p: float, rng: RngHandle) -> int:
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"probability must lie in [0, 1], got {p!r}")
    return int(rng.uniform() < p)


def _check_dim(d: int) -> int:
    if int(d) != d or d < 1:
        raise DomainError(f"dimension must be a positive integer, got {d!r}")
    return int(d)


def _check_radius(radius: float) -> float:
    r = float(radius)
    if not (math.isfinite(r) and r > 0):
        raise DomainError(f"radius must be positive and finite, got {radius!r}")
    return r


def sample_sphere_uniform(d: int, radius: float, rng: RngHandle) -> SpherePoint:
    d = _check_dim(d)
    radius = _check_radius(radius)
    start = rng._take(d)
    y = kernels.sphere(rng._key, d, np.array([radius]), start)[0]
    return SpherePoint(y, radius)


def check_unit(direction, tol: float = 1e-9) -> np.ndarray:
    u = np.asarray(direction, dtype=np.float64)
    norms = np.linalg.norm(u, axis=-1)
    if not np.all(np.abs(norms - 1.0) <= tol):
        raise DomainError("direction must be a unit vector")
    return u


def sample_hemisphere_uniform(d: int, radius: float, direction, rng: RngHandle) -> SpherePoint:
    """Uniform point on ``{|y| = radius, <y, direction> > 0}``.

    A uniform sphere point is reflected across the hyperplane orthogonal to
    ``direction`` when it lands on the wrong side; exact ties are redrawn.
    """
    d = _check_dim(d)
    radius = _check_radius(radius)
    u = check_unit(direction).reshape(1, -1)
    if u.shape[1] != d:
        raise DomainError(f"direction has dimension {u.shape[1]}, expected {d}")
    y, used = kernels.hemisphere(rng._key, u, np.array([radius]), rng.counter)
    rng.counter += int(used[0]) * d
    return SpherePoint(y[0], radius)


def child_seeds(seeds: np.ndarray, stream_id: int) -> np.ndarray:
    """``derive_key(s, stream_id)`` for every seed in ``seeds``."""
    seeds = np.asarray(seeds, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return _mix64(_mix64(seeds ^ SEED_SALT) + _mix64(np.uint64(stream_id) ^ STREAM_SALT))
