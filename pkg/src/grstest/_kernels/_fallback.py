"""Pure-numpy implementations of the hot kernels."""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def mix64(ids: np.ndarray, seed: np.uint64) -> np.ndarray:
    """Seeded splitmix64-style finalizer over a uint64 id array.

    Exact integer arithmetic mod 2**64; both backends agree bit for bit.
    """
    salted = np.uint64((int(seed) * int(_GOLDEN)) & 0xFFFFFFFFFFFFFFFF)
    z = np.asarray(ids, dtype=np.uint64) ^ salted
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def rank_group_moments(ranks_t: np.ndarray, ranks_c: np.ndarray):
    """(sum_t, sum_c, ssq) for a two-group rank split.

    Rank sums are exact 64-bit integers; ssq is the float64 sum of squared
    deviations of all M ranks from their combined mean.
    """
    rt = np.asarray(ranks_t, dtype=np.int64)
    rc = np.asarray(ranks_c, dtype=np.int64)
    sum_t = int(rt.sum(dtype=np.int64))
    sum_c = int(rc.sum(dtype=np.int64))
    m = rt.shape[0] + rc.shape[0]
    mean = (sum_t + sum_c) / m
    dt = rt.astype(np.float64) - mean
    dc = rc.astype(np.float64) - mean
    ssq = float(np.dot(dt, dt) + np.dot(dc, dc))
    return sum_t, sum_c, ssq
