"""Two-sample test statistics and the normal-reference decision rule.

Three statistics are provided: Welch-style t, the classic rank-sum on
within-experiment ranks, and the global-rank-sum variant that consumes raw
population-wide ranks so no per-experiment sorting is ever needed. All
three are referred to the standard normal for two-sided p-values.

``exact_split_moments`` is the independent oracle: it enumerates every
possible treatment/control split of a small experiment and returns the
exact permutation-null mean and variance of the mean-rank difference,
against which the closed-form variance used by the global statistic is
validated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np
from scipy.special import ndtri

from grstest._kernels import rank_group_moments

__all__ = [
    "Method",
    "Decision",
    "ExperimentAssignment",
    "TestResult",
    "welch_t_statistic",
    "rank_sum_statistic",
    "global_rank_sum_statistic",
    "normal_cdf",
    "normal_quantile",
    "decide",
    "make_result",
    "exact_split_moments",
    "SMALL_SAMPLE_WARNING_THRESHOLD",
]

# Below this combined sample size the normal approximation is dubious;
# results carry a warning flag rather than an exact small-sample table.
SMALL_SAMPLE_WARNING_THRESHOLD = 30


class Method(str, Enum):
    T_TEST = "t_test"
    RANK_SUM = "rank_sum"
    GLOBAL_RANK_SUM = "global_rank_sum"


class Decision(str, Enum):
    REJECT = "reject"
    ACCEPT = "accept"


@dataclass
class ExperimentAssignment:
    """Treatment/control membership for one experiment.

    A user may sit in many experiments at once, but at most once within
    each; experiments with an empty group load fine but are not testable.
    """

    experiment_id: object
    treatment_ids: list
    control_ids: list

    def __post_init__(self):
        overlap = set(self.treatment_ids) & set(self.control_ids)
        if overlap:
            uid = next(iter(overlap))
            raise ValueError(
                f"user {uid!r} appears in both groups of experiment "
                f"{self.experiment_id!r}"
            )

    @property
    def n_treatment(self) -> int:
        return len(self.treatment_ids)

    @property
    def n_control(self) -> int:
        return len(self.control_ids)

    @property
    def testable(self) -> bool:
        return self.n_treatment >= 1 and self.n_control >= 1

    @property
    def groups(self) -> dict:
        """Mapping user_id -> 't' / 'c'."""
        g = {uid: "t" for uid in self.treatment_ids}
        g.update({uid: "c" for uid in self.control_ids})
        return g


@dataclass(frozen=True)
class TestResult:
    method: Method
    statistic: float
    p_value: float
    n_treatment: int
    n_control: int
    decisions: Mapping[float, Decision]
    small_sample_warning: bool = False


def welch_t_statistic(treatment_values, control_values) -> float:
    """t = (mean_t - mean_c) / sqrt(s2_t/n_t + s2_c/n_c), unbiased variances."""
    t = np.asarray(treatment_values, dtype=np.float64)
    c = np.asarray(control_values, dtype=np.float64)
    if t.size < 2 or c.size < 2:
        raise ValueError("insufficient samples: each group needs at least 2")
    if not (np.isfinite(t).all() and np.isfinite(c).all()):
        raise ValueError("non-finite value in input")
    var = t.var(ddof=1) / t.size + c.var(ddof=1) / c.size
    if var == 0.0:
        raise ValueError("zero variance: both groups constant")
    return float((t.mean() - c.mean()) / math.sqrt(var))


def rank_sum_statistic(local_treatment_ranks, local_control_ranks) -> float:
    """Classic rank-sum statistic on within-experiment ranks 1..M.

    (mean_t - mean_c) / sqrt(M (M^2 - 1) / (12 n_t n_c)).
    """
    rt = np.asarray(local_treatment_ranks, dtype=np.int64)
    rc = np.asarray(local_control_ranks, dtype=np.int64)
    n_t, n_c = rt.size, rc.size
    m = n_t + n_c
    if n_t < 1 or n_c < 1 or m < 2:
        raise ValueError("each group must be non-empty and M >= 2")
    combined = np.sort(np.concatenate([rt, rc]))
    if not np.array_equal(combined, np.arange(1, m + 1)):
        raise ValueError("invalid local ranks: must form exactly {1..M}")
    sum_t, sum_c, _ = rank_group_moments(rt, rc)
    diff = sum_t / n_t - sum_c / n_c
    denom = math.sqrt(m * (m * m - 1) / (12.0 * n_t * n_c))
    return diff / denom


def global_rank_sum_statistic(treatment_global_ranks, control_global_ranks) -> float:
    """Rank-sum variant on raw population-wide ranks.

    (mean_t - mean_c) / (sigma * sqrt(1/n_t + 1/n_c)) where sigma^2 is the
    (M-1)-denominator variance of the experiment's M ranks. The ranks are
    used verbatim; nothing is re-sorted or re-densified.
    """
    rt = np.asarray(treatment_global_ranks, dtype=np.int64)
    rc = np.asarray(control_global_ranks, dtype=np.int64)
    n_t, n_c = rt.size, rc.size
    m = n_t + n_c
    if n_t < 1 or n_c < 1 or m < 2:
        raise ValueError("each group must be non-empty and M >= 2")
    sum_t, sum_c, ssq = rank_group_moments(rt, rc)
    sigma2 = ssq / (m - 1)
    if sigma2 == 0.0:
        raise ValueError("zero rank variance")
    diff = sum_t / n_t - sum_c / n_c
    return diff / math.sqrt(sigma2 * (1.0 / n_t + 1.0 / n_c))


def normal_cdf(z: float) -> float:
    """Standard normal CDF, accurate to machine precision via erfc."""
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def normal_quantile(q: float) -> float:
    """Inverse of :func:`normal_cdf` on (0, 1)."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"quantile must be in (0, 1), got {q}")
    return float(ndtri(q))


def two_sided_p_value(statistic: float) -> float:
    return 2.0 * (1.0 - normal_cdf(abs(statistic)))


def decide(statistic: float, alphas: Sequence[float]) -> dict[float, Decision]:
    """Per-alpha reject/accept from the two-sided normal reference."""
    p = two_sided_p_value(statistic)
    out = {}
    for alpha in alphas:
        if not 0.0 < alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {alpha}")
        out[alpha] = Decision.REJECT if p < alpha else Decision.ACCEPT
    return out


def make_result(
    method: Method,
    statistic: float,
    n_treatment: int,
    n_control: int,
    alphas: Sequence[float],
) -> TestResult:
    """Bundle a statistic with its p-value and per-alpha decisions."""
    return TestResult(
        method=method,
        statistic=statistic,
        p_value=two_sided_p_value(statistic),
        n_treatment=n_treatment,
        n_control=n_control,
        decisions=decide(statistic, alphas),
        small_sample_warning=(n_treatment + n_control) < SMALL_SAMPLE_WARNING_THRESHOLD,
    )


def exact_split_moments(experiment_ranks, n_treatment: int):
    """Exact permutation-null moments of (mean_t - mean_c) by enumeration.

    Every size-n_treatment subset of the ranks is taken as the treatment
    group once; the mean and variance of the mean-rank difference across
    all splits are computed in exact rational arithmetic and returned as
    floats.
    """
    ranks = [int(r) for r in experiment_ranks]
    m = len(ranks)
    n_t = int(n_treatment)
    if not 1 <= n_t <= m - 1:
        raise ValueError("n_treatment must leave both groups non-empty")
    n_c = m - n_t
    n_splits = math.comb(m, n_t)
    if m > 22 or n_splits > 10**6:
        raise ValueError("instance too large for exact oracle")
    total = sum(ranks)
    diffs = []
    for subset in combinations(ranks, n_t):
        sum_t = sum(subset)
        diffs.append(Fraction(sum_t, n_t) - Fraction(total - sum_t, n_c))
    mean = sum(diffs, Fraction(0)) / n_splits
    var = sum((d - mean) ** 2 for d in diffs) / n_splits
    return float(mean), float(var)
