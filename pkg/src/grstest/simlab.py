"""Simulation laboratory: calibration, power, and timing studies.

Populations are log-normal (log values Gaussian), experiments are uniform
random subsets split uniformly into treatment and control, and a
configurable multiplicative lift is applied to the treatment group. Each
replication draws from its own RNG stream keyed by (seed, replication
index), so results are independent of evaluation order.
"""

from __future__ import annotations

import json
import statistics as pystats
import time
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import ndtri

from grstest import rankcore
from grstest.hypotest import (
    ExperimentAssignment,
    Method,
    global_rank_sum_statistic,
    normal_quantile,
    rank_sum_statistic,
    welch_t_statistic,
)
from grstest.rankcore import MetricRecord, densify_ranks, ranks_from_arrays

__all__ = [
    "SimulationConfig",
    "StudyReport",
    "TimingResult",
    "gen_lognormal_population",
    "sample_experiment",
    "apply_lift",
    "run_calibration_study",
    "run_power_study",
    "run_timing_benchmark",
]

# Sub-stream tags so the population and each replication get disjoint seeds.
_POP_STREAM = 0
_REP_STREAM = 1
_SAMPLE_STREAM = 2


@dataclass
class SimulationConfig:
    """Parameters for one simulation study."""

    mu: float = -3.0
    sigma: float = 3.0
    population_size: int = 1_000_000
    n_treatment: int = 100_000
    n_control: int = 100_000
    replications: int = 5_000
    lift_ratio: float = 0.0
    alphas: tuple = (0.01, 0.05, 0.10)
    seed: int = 0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.population_size < 1:
            raise ValueError("population_size must be >= 1")
        if self.n_treatment < 1 or self.n_control < 1:
            raise ValueError("both groups must be non-empty")
        if self.n_treatment + self.n_control > self.population_size:
            raise ValueError("experiment larger than population")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.lift_ratio < 0:
            raise ValueError("lift_ratio must be >= 0")
        alphas = tuple(self.alphas)
        if not alphas or any(not 0 < a < 1 for a in alphas):
            raise ValueError("alphas must lie in (0, 1)")
        if list(alphas) != sorted(alphas):
            raise ValueError("alphas must be sorted ascending")
        self.alphas = alphas


@dataclass
class StudyReport:
    """Rejection rates per method and alpha for one study run."""

    study: str
    config: SimulationConfig
    replications: int
    rejections: dict  # method name -> {alpha: count}
    timings: dict = field(default_factory=dict)  # phase -> seconds

    @property
    def rejection_rates(self) -> dict:
        return {
            method: {a: n / self.replications for a, n in per_alpha.items()}
            for method, per_alpha in self.rejections.items()
        }

    def rate(self, method: Method | str, alpha: float) -> float:
        name = method.value if isinstance(method, Method) else method
        return self.rejections[name][alpha] / self.replications

    def to_json(self) -> str:
        """Machine-readable report; timings excluded so identical seeds
        give byte-identical output."""
        payload = {
            "study": self.study,
            "config": asdict(self.config),
            "replications": self.replications,
            "rejections": {
                m: {repr(a): n for a, n in per.items()}
                for m, per in self.rejections.items()
            },
            "rejection_rates": {
                m: {repr(a): n / self.replications for a, n in per.items()}
                for m, per in self.rejections.items()
            },
        }
        return json.dumps(payload, sort_keys=True, indent=2)

    def to_csv(self) -> str:
        lines = ["method,alpha,rejections,replications,rate"]
        for m in sorted(self.rejections):
            for a in self.config.alphas:
                n = self.rejections[m][a]
                lines.append(f"{m},{a},{n},{self.replications},{n / self.replications}")
        return "\n".join(lines) + "\n"

    def render_table(self) -> str:
        methods = [m.value for m in Method if m.value in self.rejections]
        header = f"{self.study} study  (mu={self.config.mu}, sigma={self.config.sigma}, "
        header += f"N={self.config.population_size}, N_t={self.config.n_treatment}, "
        header += f"N_c={self.config.n_control}, reps={self.replications}, "
        header += f"gamma={self.config.lift_ratio})"
        lines = [header]
        cols = "".join(f"  alpha={a:<6g}" for a in self.config.alphas)
        lines.append(f"{'method':<18}{cols}")
        for m in methods:
            cells = "".join(
                f"  {100.0 * self.rate(m, a):10.2f}%" for a in self.config.alphas
            )
            lines.append(f"{m:<18}{cells}")
        for phase, secs in self.timings.items():
            lines.append(f"# {phase}: {secs:.3f}s")
        return "\n".join(lines) + "\n"


def _open_uniform(rng: np.random.Generator, n: int) -> np.ndarray:
    u = rng.random(n)
    # rng.random can return exactly 0.0, which inversion maps to -inf.
    zeros = u == 0.0
    if zeros.any():
        u[zeros] = np.nextafter(0.0, 1.0)
    return u


def _lognormal_values(n: int, mu: float, sigma: float, seed_key) -> np.ndarray:
    rng = np.random.default_rng(seed_key)
    return np.exp(mu + sigma * ndtri(_open_uniform(rng, n)))


def gen_lognormal_population(
    n: int, mu: float, sigma: float, seed: int
) -> list[MetricRecord]:
    """n records with values exp(N(mu, sigma^2)), ids 1..n, seed-determined."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    values = _lognormal_values(n, mu, sigma, [seed, _POP_STREAM])
    return [MetricRecord(i + 1, float(v)) for i, v in enumerate(values)]


def _split_indices(rng: np.random.Generator, n: int, n_t: int, n_c: int):
    idx = rng.choice(n, size=n_t + n_c, replace=False)
    return idx[:n_t], idx[n_t:]


def sample_experiment(
    population: Sequence[MetricRecord],
    n_treatment: int,
    n_control: int,
    seed: int,
    experiment_id="sampled",
) -> ExperimentAssignment:
    """Uniform subset of size N_t + N_c, split uniformly into two groups."""
    n = len(population)
    if n_treatment < 1 or n_control < 1:
        raise ValueError("both groups must be non-empty")
    if n_treatment + n_control > n:
        raise ValueError("requested experiment larger than population")
    rng = np.random.default_rng([seed, _SAMPLE_STREAM])
    t_idx, c_idx = _split_indices(rng, n, n_treatment, n_control)
    return ExperimentAssignment(
        experiment_id=experiment_id,
        treatment_ids=[population[i].user_id for i in t_idx],
        control_ids=[population[i].user_id for i in c_idx],
    )


def apply_lift(
    assignment: ExperimentAssignment,
    population: Sequence[MetricRecord],
    gamma: float,
) -> list[MetricRecord]:
    """Observed records: treatment values scaled by (1 + gamma), rest as-is."""
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    treated = set(assignment.treatment_ids)
    return [
        MetricRecord(r.user_id, r.value * (1.0 + gamma)) if r.user_id in treated else r
        for r in population
    ]


def _run_study(config: SimulationConfig, study: str, rank_base: str) -> StudyReport:
    """Shared engine behind the calibration and power studies.

    The population is ranked once; only when a lift is in effect does the
    global-rank-sum path re-rank the lifted population per replication
    (rank_base="population") or rank just the experiment's observed values
    (rank_base="experiment").
    """
    if rank_base not in ("population", "experiment"):
        raise ValueError(f"unknown rank_base {rank_base!r}")
    n = config.population_size
    n_t, n_c = config.n_treatment, config.n_control
    gamma = config.lift_ratio

    t0 = time.perf_counter()
    values = _lognormal_values(n, config.mu, config.sigma, [config.seed, _POP_STREAM])
    ids = np.arange(1, n + 1, dtype=np.uint64)
    keys = rankcore._tiebreak_keys(ids, config.seed)
    t_gen = time.perf_counter()
    base_ranks = ranks_from_arrays(values, keys)
    sorted_values = np.sort(values) if gamma > 0.0 else None
    t_rank = time.perf_counter()

    thresholds = np.array([normal_quantile(1.0 - a / 2.0) for a in config.alphas])
    counts = {
        m.value: np.zeros(len(config.alphas), dtype=np.int64) for m in Method
    }

    for rep in range(config.replications):
        rng = np.random.default_rng([config.seed, _REP_STREAM, rep])
        t_idx, c_idx = _split_indices(rng, n, n_t, n_c)

        obs_t = values[t_idx] * (1.0 + gamma)
        obs_c = values[c_idx]
        stats = {Method.T_TEST.value: welch_t_statistic(obs_t, obs_c)}

        if gamma == 0.0:
            ranks_t, ranks_c = base_ranks[t_idx], base_ranks[c_idx]
        elif rank_base == "population":
            ranks = lifted_population_ranks(
                sorted_values, values[t_idx], gamma, np.concatenate([obs_t, obs_c])
            )
            ranks_t, ranks_c = ranks[:n_t], ranks[n_t:]
        else:
            exp_keys = np.concatenate([keys[t_idx], keys[c_idx]])
            local = densify_ranks_of_values(
                np.concatenate([obs_t, obs_c]), exp_keys
            )
            ranks_t, ranks_c = local[:n_t], local[n_t:]
        stats[Method.GLOBAL_RANK_SUM.value] = global_rank_sum_statistic(
            ranks_t, ranks_c
        )

        local = densify_ranks(np.concatenate([ranks_t, ranks_c]))
        stats[Method.RANK_SUM.value] = rank_sum_statistic(local[:n_t], local[n_t:])

        for m, s in stats.items():
            counts[m] += np.abs(s) > thresholds
    t_reps = time.perf_counter()

    return StudyReport(
        study=study,
        config=config,
        replications=config.replications,
        rejections={
            m: {a: int(c[i]) for i, a in enumerate(config.alphas)}
            for m, c in counts.items()
        },
        timings={
            "generate": t_gen - t0,
            "global_rank": t_rank - t_gen,
            "replications": t_reps - t_rank,
        },
    )


def lifted_population_ranks(
    sorted_values: np.ndarray,
    treatment_values: np.ndarray,
    gamma: float,
    query_values: np.ndarray,
) -> np.ndarray:
    """Population-wide ranks of `query_values` after lifting the treatment.

    The lifted population is (all values) minus the treatment's raw values
    plus their lifted copies; the rank of x is the count of lifted-population
    values <= x. Computed by merge counting against the one-time sorted
    population, so no per-replication full sort is needed; with continuous
    metric values this equals a fresh full re-rank.
    """
    svt = np.sort(treatment_values)
    svt_lifted = svt * (1.0 + gamma)
    # query in sorted order: sequential binary searches are far cache-friendlier
    order = np.argsort(query_values, kind="stable")
    qs = query_values[order]
    counts = (
        np.searchsorted(sorted_values, qs, side="right")
        - np.searchsorted(svt, qs, side="right")
        + np.searchsorted(svt_lifted, qs, side="right")
    ).astype(np.int64)
    out = np.empty_like(counts)
    out[order] = counts
    return out


def densify_ranks_of_values(values: np.ndarray, tiebreak_keys: np.ndarray) -> np.ndarray:
    """Ranks 1..M of raw values with seeded tie-breaking (one local sort)."""
    order = np.lexsort((tiebreak_keys, values))
    out = np.empty(values.shape[0], dtype=np.int64)
    out[order] = np.arange(1, values.shape[0] + 1, dtype=np.int64)
    return out


def run_calibration_study(
    config: SimulationConfig, rank_base: str = "population"
) -> StudyReport:
    """Type-I-error study: null is true, lift must be zero."""
    if config.lift_ratio != 0.0:
        raise ValueError("calibration study requires lift_ratio = 0")
    return _run_study(config, "calibration", rank_base)


def run_power_study(
    config: SimulationConfig, rank_base: str = "population"
) -> StudyReport:
    """Power study under multiplicative treatment lift (lift_ratio > 0)."""
    if config.lift_ratio <= 0.0:
        raise ValueError("power study requires lift_ratio > 0")
    return _run_study(config, "power", rank_base)


@dataclass
class TimingResult:
    """Wall-clock comparison of the two rank-sum evaluation paths."""

    n_experiments: int
    samples_per_experiment: int
    population_size: int
    traditional_seconds: float
    global_seconds: float

    @property
    def diff_ratio(self) -> float:
        """(global - traditional) / traditional; negative = global faster."""
        return (
            self.global_seconds - self.traditional_seconds
        ) / self.traditional_seconds

    def row(self) -> str:
        return (
            f"{self.n_experiments:>6d}  {self.traditional_seconds:>10.3f}  "
            f"{self.global_seconds:>10.3f}  {100.0 * self.diff_ratio:>+9.1f}%"
        )


def run_timing_benchmark(
    n_experiments: int, config: SimulationConfig, runs: int = 3
) -> TimingResult:
    """Time the per-experiment-sort path against the sort-once path.

    Traditional: each experiment sorts its own observed values and applies
    the classic statistic. Global: the population is sorted once, then each
    experiment only gathers ranks. Each path gets one warm-up and the
    median of `runs` timed repetitions.
    """
    if n_experiments < 1:
        raise ValueError("n_experiments must be >= 1")
    n = config.population_size
    n_t, n_c = config.n_treatment, config.n_control

    values = _lognormal_values(n, config.mu, config.sigma, [config.seed, _POP_STREAM])
    ids = np.arange(1, n + 1, dtype=np.uint64)
    keys = rankcore._tiebreak_keys(ids, config.seed)
    experiments = []
    for e in range(n_experiments):
        rng = np.random.default_rng([config.seed, _SAMPLE_STREAM, e])
        experiments.append(_split_indices(rng, n, n_t, n_c))

    def traditional() -> None:
        for t_idx, c_idx in experiments:
            idx = np.concatenate([t_idx, c_idx])
            local = densify_ranks_of_values(values[idx], keys[idx])
            rank_sum_statistic(local[: t_idx.size], local[t_idx.size :])

    def global_path() -> None:
        ranks = ranks_from_arrays(values, keys)
        for t_idx, c_idx in experiments:
            global_rank_sum_statistic(ranks[t_idx], ranks[c_idx])

    def timed(fn) -> float:
        fn()  # warm-up
        samples = []
        for _ in range(runs):
            start = time.perf_counter()
            fn()
            samples.append(time.perf_counter() - start)
        return pystats.median(samples)

    return TimingResult(
        n_experiments=n_experiments,
        samples_per_experiment=n_t + n_c,
        population_size=n,
        traditional_seconds=timed(traditional),
        global_seconds=timed(global_path),
    )
