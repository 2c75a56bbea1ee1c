"""Rank a population once, test many overlapping A/B experiments.

Sorting the full population per experiment is the bottleneck of classic
rank-sum testing on an experimentation platform. This package sorts once,
stores every user's global rank, and evaluates each experiment from rank
lookups alone, with the classic rank-sum and Welch t statistics kept as
baselines and a simulation lab for calibration, power, and timing studies.
"""

from grstest._kernels import backend_name
from grstest.hypotest import (
    Decision,
    ExperimentAssignment,
    Method,
    TestResult,
    decide,
    exact_split_moments,
    global_rank_sum_statistic,
    normal_cdf,
    normal_quantile,
    rank_sum_statistic,
    welch_t_statistic,
)
from grstest.rankcore import (
    GlobalRankTable,
    MetricRecord,
    compute_global_ranks,
    local_ranks,
)
from grstest.simlab import (
    SimulationConfig,
    StudyReport,
    apply_lift,
    gen_lognormal_population,
    run_calibration_study,
    run_power_study,
    run_timing_benchmark,
    sample_experiment,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "backend_name",
    "Decision",
    "ExperimentAssignment",
    "Method",
    "TestResult",
    "GlobalRankTable",
    "MetricRecord",
    "SimulationConfig",
    "StudyReport",
    "compute_global_ranks",
    "local_ranks",
    "decide",
    "exact_split_moments",
    "global_rank_sum_statistic",
    "normal_cdf",
    "normal_quantile",
    "rank_sum_statistic",
    "welch_t_statistic",
    "apply_lift",
    "gen_lognormal_population",
    "run_calibration_study",
    "run_power_study",
    "run_timing_benchmark",
    "sample_experiment",
]
