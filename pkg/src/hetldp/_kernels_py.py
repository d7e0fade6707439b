"""Pure-NumPy implementation of the random-stream kernels.

Mirrors ``_kernels.pyx`` operation for operation so that both backends
return bit-identical arrays. All integer arithmetic is on ``uint64`` and
relies on NumPy's modular wraparound.
"""
import numpy as np
from scipy.special import ndtri

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
SEED_SALT = np.uint64(0x5851F42D4C957F2D)
STREAM_SALT = np.uint64(0xD1B54A32D192ED03)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S12 = np.uint64(12)
_TWO_M52 = 2.0 ** -52

BACKEND = "python"


def _mix64(z):
    z = (z ^ (z >> _S30)) * MIX1
    z = (z ^ (z >> _S27)) * MIX2
    return z ^ (z >> _S31)


def derive_keys(seed, streams):
    """Per-stream keys for a 64-bit seed; ``streams`` is a 1-D uint64 array."""
    streams = np.ascontiguousarray(streams, dtype=np.uint64)
    with np.errstate(over="ignore"):
        base = _mix64(np.uint64(seed) ^ SEED_SALT)
        return _mix64(base + _mix64(streams ^ STREAM_SALT))


def raw_draws(keys, counter0, k):
    """Raw 64-bit outputs ``k`` consecutive counters from ``counter0``; shape (n, k)."""
    keys = np.ascontiguousarray(keys, dtype=np.uint64)
    counters = np.arange(counter0 + 1, counter0 + 1 + k, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return _mix64(keys[:, None] + counters[None, :] * GOLDEN)


def uniform_draws(keys, counter0, k):
    """Uniforms on the open interval (0, 1); shape (n, k).

    The midpoint grid ``(k + 0.5) / 2**52`` never hits 0, 1/2 or 1, so
    inverse-CDF transforms stay finite and nonzero.
    """
    z = raw_draws(keys, counter0, k)
    return ((z >> _S12).astype(np.float64) + 0.5) * _TWO_M52


def normal_draws(keys, counter0, k):
    """Standard normals by inverse CDF, one uniform per normal."""
    return ndtri(uniform_draws(keys, counter0, k))


def _rowdot(a, b):
    # left-to-right accumulation, same order as the compiled loop
    acc = a[:, 0] * b[:, 0]
    for j in range(1, a.shape[1]):
        acc = acc + a[:, j] * b[:, j]
    return acc


def hemisphere(keys, directions, radii, counter0):
    """Uniform points on {|y| = radius, <y, direction> > 0}, one row per key.

    Attempt ``a`` reads counters ``counter0 + a*d .. counter0 + (a+1)*d - 1``;
    a draw is only retried when the sign constraint fails in floating point.
    Returns the points and the number of attempts each row used.
    """
    keys = np.ascontiguousarray(keys, dtype=np.uint64)
    directions = np.ascontiguousarray(directions, dtype=np.float64)
    radii = np.ascontiguousarray(radii, dtype=np.float64)
    n, d = directions.shape
    out = np.empty((n, d))
    used = np.zeros(n, dtype=np.int64)
    pending = np.arange(n)
    attempt = 0
    while pending.size:
        u = directions[pending]
        g = normal_draws(keys[pending], counter0 + attempt * d, d)
        s = _rowdot(g, u)
        flip = s < 0.0
        g[flip] = g[flip] - (2.0 * s[flip])[:, None] * u[flip]
        norm = np.sqrt(_rowdot(g, g))
        y = g * (radii[pending] / norm)[:, None]
        ok = (s != 0.0) & (_rowdot(y, u) > 0.0)
        out[pending[ok]] = y[ok]
        used[pending] += 1
        pending = pending[~ok]
        attempt += 1
    return out, used


def sphere(keys, d, radii, counter0):
    """Uniform points on spheres of the given radii; shape (n, d).

    Normals are never exactly zero (see ``uniform_draws``), so there is no
    degenerate all-zero draw to resample.
    """
    keys = np.ascontiguousarray(keys, dtype=np.uint64)
    radii = np.ascontiguousarray(radii, dtype=np.float64)
    g = normal_draws(keys, counter0, d)
    norm = np.sqrt(_rowdot(g, g))
    return g * (radii / norm)[:, None]
