# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: seeded id hashing and rank-moment accumulation."""

import numpy as np

cimport numpy as cnp

cnp.import_array()

ctypedef unsigned long long u64
ctypedef long long i64

cdef u64 GOLDEN = 0x9E3779B97F4A7C15ULL
cdef u64 M1 = 0xBF58476D1CE4E5B9ULL
cdef u64 M2 = 0x94D049BB133111EBULL


cdef inline u64 _mix_one(u64 x, u64 salted) nogil:
    cdef u64 z = x ^ salted
    z = (z ^ (z >> 30)) * M1
    z = (z ^ (z >> 27)) * M2
    return z ^ (z >> 31)


def mix64(cnp.ndarray ids, u64 seed):
    """Seeded splitmix64-style finalizer over a uint64 id array."""
    cdef cnp.ndarray[u64, ndim=1] a = np.ascontiguousarray(ids, dtype=np.uint64)
    cdef cnp.ndarray[u64, ndim=1] out = np.empty(a.shape[0], dtype=np.uint64)
    cdef u64 salted = seed * GOLDEN
    cdef Py_ssize_t i, n = a.shape[0]
    with nogil:
        for i in range(n):
            out[i] = _mix_one(a[i], salted)
    return out


def rank_group_moments(cnp.ndarray ranks_t, cnp.ndarray ranks_c):
    """(sum_t, sum_c, ssq) for a two-group rank split.

    Rank sums are exact 64-bit integers; ssq is the float64 sum of squared
    deviations of all M ranks from their combined mean.
    """
    cdef cnp.ndarray[i64, ndim=1] rt = np.ascontiguousarray(ranks_t, dtype=np.int64)
    cdef cnp.ndarray[i64, ndim=1] rc = np.ascontiguousarray(ranks_c, dtype=np.int64)
    cdef i64 sum_t = 0, sum_c = 0
    cdef Py_ssize_t i, nt = rt.shape[0], nc = rc.shape[0]
    cdef double mean, d, ssq_t = 0.0, ssq_c = 0.0
    with nogil:
        for i in range(nt):
            sum_t += rt[i]
        for i in range(nc):
            sum_c += rc[i]
        mean = (<double> (sum_t + sum_c)) / (<double> (nt + nc))
        for i in range(nt):
            d = rt[i] - mean
            ssq_t += d * d
        for i in range(nc):
            d = rc[i] - mean
            ssq_c += d * d
    return sum_t, sum_c, ssq_t + ssq_c
