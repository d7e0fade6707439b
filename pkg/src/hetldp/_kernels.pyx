# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled random-stream kernels.

Same contract and bit-for-bit output as ``_kernels_py``; the Python module
is the reference, this one only exists for speed.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt
from libc.stdint cimport uint64_t
from scipy.special.cython_special cimport ndtri

cnp.import_array()

BACKEND = "cython"

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t MIX1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t MIX2 = 0x94D049BB133111EBULL
cdef uint64_t SEED_SALT = 0x5851F42D4C957F2DULL
cdef uint64_t STREAM_SALT = 0xD1B54A32D192ED03ULL
cdef double TWO_M52 = 2.220446049250313e-16


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * MIX1
    z = (z ^ (z >> 27)) * MIX2
    return z ^ (z >> 31)


cdef inline uint64_t draw(uint64_t key, uint64_t counter) noexcept nogil:
    return mix64(key + (counter + 1) * GOLDEN)


cdef inline double unit(uint64_t z) noexcept nogil:
    return (<double>(z >> 12) + 0.5) * TWO_M52


def derive_keys(seed, streams):
    cdef const uint64_t[::1] s = np.ascontiguousarray(streams, dtype=np.uint64)
    cdef Py_ssize_t n = s.shape[0], i
    out = np.empty(n, dtype=np.uint64)
    cdef uint64_t[::1] o = out
    cdef uint64_t base = mix64(<uint64_t>seed ^ SEED_SALT)
    with nogil:
        for i in range(n):
            o[i] = mix64(base + mix64(s[i] ^ STREAM_SALT))
    return out


def raw_draws(keys, long long counter0, Py_ssize_t k):
    cdef const uint64_t[::1] key = np.ascontiguousarray(keys, dtype=np.uint64)
    cdef Py_ssize_t n = key.shape[0], i, j
    out = np.empty((n, k), dtype=np.uint64)
    cdef uint64_t[:, ::1] o = out
    with nogil:
        for i in range(n):
            for j in range(k):
                o[i, j] = draw(key[i], <uint64_t>(counter0 + j))
    return out


def uniform_draws(keys, long long counter0, Py_ssize_t k):
    cdef const uint64_t[::1] key = np.ascontiguousarray(keys, dtype=np.uint64)
    cdef Py_ssize_t n = key.shape[0], i, j
    out = np.empty((n, k), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(n):
            for j in range(k):
                o[i, j] = unit(draw(key[i], <uint64_t>(counter0 + j)))
    return out


def normal_draws(keys, long long counter0, Py_ssize_t k):
    cdef const uint64_t[::1] key = np.ascontiguousarray(keys, dtype=np.uint64)
    cdef Py_ssize_t n = key.shape[0], i, j
    out = np.empty((n, k), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(n):
            for j in range(k):
                o[i, j] = ndtri(unit(draw(key[i], <uint64_t>(counter0 + j))))
    return out


def hemisphere(keys, directions, radii, long long counter0):
    cdef const uint64_t[::1] key = np.ascontiguousarray(keys, dtype=np.uint64)
    cdef const double[:, ::1] u = np.ascontiguousarray(directions, dtype=np.float64)
    cdef const double[::1] rad = np.ascontiguousarray(radii, dtype=np.float64)
    cdef Py_ssize_t n = u.shape[0], d = u.shape[1], i, j
    out = np.empty((n, d), dtype=np.float64)
    used = np.zeros(n, dtype=np.int64)
    cdef double[:, ::1] y = out
    cdef cnp.int64_t[::1] tries = used
    cdef double s, nrm, scale, fin
    cdef long long base
    with nogil:
        for i in range(n):
            base = counter0
            while True:
                tries[i] += 1
                s = 0.0
                for j in range(d):
                    y[i, j] = ndtri(unit(draw(key[i], <uint64_t>(base + j))))
                    if j == 0:
                        s = y[i, j] * u[i, j]
                    else:
                        s = s + y[i, j] * u[i, j]
                if s < 0.0:
                    for j in range(d):
                        y[i, j] = y[i, j] - (2.0 * s) * u[i, j]
                nrm = y[i, 0] * y[i, 0]
                for j in range(1, d):
                    nrm = nrm + y[i, j] * y[i, j]
                scale = rad[i] / sqrt(nrm)
                fin = 0.0
                for j in range(d):
                    y[i, j] = y[i, j] * scale
                    if j == 0:
                        fin = y[i, j] * u[i, j]
                    else:
                        fin = fin + y[i, j] * u[i, j]
                if s != 0.0 and fin > 0.0:
                    break
                base = base + d
    return out, used


def sphere(keys, Py_ssize_t d, radii, long long counter0):
    cdef const uint64_t[::1] key = np.ascontiguousarray(keys, dtype=np.uint64)
    cdef const double[::1] rad = np.ascontiguousarray(radii, dtype=np.float64)
    cdef Py_ssize_t n = key.shape[0], i, j
    out = np.empty((n, d), dtype=np.float64)
    cdef double[:, ::1] y = out
    cdef double nrm, scale
    with nogil:
        for i in range(n):
            nrm = 0.0
            for j in range(d):
                y[i, j] = ndtri(unit(draw(key[i], <uint64_t>(counter0 + j))))
                if j == 0:
                    nrm = y[i, j] * y[i, j]
                else:
                    nrm = nrm + y[i, j] * y[i, j]
            scale = rad[i] / sqrt(nrm)
            for j in range(d):
                y[i, j] = y[i, j] * scale
    return out
