"""File ingestion, the rank-once/test-many pipeline, and report writing.

Metrics arrive as `user_id,value` lines, assignments as
`experiment_id,user_id,group` lines with group in {t, c}. One invocation
ranks the population at most once, then evaluates every requested method
on every testable experiment; per-experiment failures become diagnostic
rows instead of aborting the run.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from grstest import rankcore
from grstest.hypotest import (
    Decision,
    ExperimentAssignment,
    Method,
    decide,
    two_sided_p_value,
    welch_t_statistic,
    global_rank_sum_statistic,
    rank_sum_statistic,
)
from grstest.rankcore import MetricRecord, compute_global_ranks, local_ranks

__all__ = [
    "AnalysisRequest",
    "AnalysisReport",
    "ResultRow",
    "load_metrics",
    "load_assignments",
    "analyze",
]

DEFAULT_ALPHAS = (0.01, 0.05, 0.10)

# Canonical evaluation/reporting order.
_METHOD_ORDER = (Method.T_TEST, Method.RANK_SUM, Method.GLOBAL_RANK_SUM)


@dataclass
class AnalysisRequest:
    metrics_path: str
    assignments_path: str
    tiebreak_seed: int = 0
    alphas: tuple = DEFAULT_ALPHAS
    methods: tuple = tuple(m.value for m in _METHOD_ORDER)
    output_path: str | None = None
    output_format: str = "table"  # table | delimited | structured
    has_header: bool = False

    def __post_init__(self):
        if not self.methods:
            raise ValueError("methods must be non-empty")
        known = {m.value for m in Method}
        for m in self.methods:
            if m not in known:
                raise ValueError(f"unknown method {m!r}")
        if not self.alphas or any(not 0 < a < 1 for a in self.alphas):
            raise ValueError("alphas must lie in (0, 1)")
        if self.output_format not in ("table", "delimited", "structured"):
            raise ValueError(f"unknown output format {self.output_format!r}")


@dataclass
class ResultRow:
    experiment_id: object
    method: str
    n_treatment: int
    n_control: int
    statistic: float | None = None
    p_value: float | None = None
    decisions: dict = field(default_factory=dict)
    error: str | None = None


@dataclass
class AnalysisReport:
    rows: list
    alphas: tuple
    phase_timings: dict
    sorts_performed: int

    def render(self, output_format: str) -> str:
        if output_format == "delimited":
            return self._render_delimited()
        if output_format == "structured":
            return self._render_structured()
        return self._render_table()

    def _columns(self):
        return (
            ["experiment_id", "method", "n_t", "n_c", "statistic", "p_value"]
            + [f"decision@{a:g}" for a in self.alphas]
            + ["error"]
        )

    def _cells(self, row: ResultRow):
        stat = "" if row.statistic is None else _fmt(row.statistic)
        p = "" if row.p_value is None else _fmt(row.p_value)
        decisions = [
            row.decisions.get(a).value if a in row.decisions else ""
            for a in self.alphas
        ]
        return (
            [str(row.experiment_id), row.method, str(row.n_treatment), str(row.n_control), stat, p]
            + decisions
            + [row.error or ""]
        )

    def _render_delimited(self) -> str:
        lines = [",".join(self._columns())]
        lines += [",".join(self._cells(r)) for r in self.rows]
        return "\n".join(lines) + "\n"

    def _render_table(self) -> str:
        cols = self._columns()
        body = [self._cells(r) for r in self.rows]
        widths = [
            max(len(c), *(len(row[i]) for row in body)) if body else len(c)
            for i, c in enumerate(cols)
        ]
        lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths))]
        for row in body:
            lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
        for phase, secs in self.phase_timings.items():
            lines.append(f"# {phase}: {secs:.3f}s")
        lines.append(f"# global_sorts: {self.sorts_performed}")
        return "\n".join(lines) + "\n"

    def _render_structured(self) -> str:
        # Timings excluded: identical inputs must give identical bytes.
        payload = []
        for r in self.rows:
            payload.append(
                {
                    "experiment_id": str(r.experiment_id),
                    "method": r.method,
                    "n_treatment": r.n_treatment,
                    "n_control": r.n_control,
                    "statistic": None if r.statistic is None else float(_fmt(r.statistic)),
                    "p_value": None if r.p_value is None else float(_fmt(r.p_value)),
                    "decisions": {f"{a:g}": d.value for a, d in r.decisions.items()},
                    "error": r.error,
                }
            )
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def load_metrics(path, has_header: bool = False) -> list[MetricRecord]:
    """Parse `user_id,value` lines into validated records."""
    path = Path(path)
    records: list[MetricRecord] = []
    seen: set = set()
    with path.open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if has_header and lineno == 1:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ValueError(
                    f"{path}:{lineno}: expected 'user_id,value', got {line!r}"
                )
            uid, raw_value = parts[0].strip(), parts[1].strip()
            try:
                value = float(raw_value)
            except ValueError:
                raise ValueError(
                    f"{path}:{lineno}: metric value {raw_value!r} is not a number"
                ) from None
            if not math.isfinite(value):
                raise ValueError(f"{path}:{lineno}: non-finite value for user {uid!r}")
            if uid in seen:
                raise ValueError(f"{path}:{lineno}: duplicate user_id {uid!r}")
            seen.add(uid)
            records.append(MetricRecord(uid, value))
    if not records:
        raise ValueError("empty population")
    return records


def load_assignments(path, has_header: bool = False) -> list[ExperimentAssignment]:
    """Parse `experiment_id,user_id,group` lines, one assignment per experiment.

    Users may appear in any number of experiments but only once within one;
    an experiment with an empty group is returned with testable == False.
    """
    path = Path(path)
    groups: dict = {}
    order: list = []
    seen_pairs: set = set()
    with path.open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if has_header and lineno == 1:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValueError(
                    f"{path}:{lineno}: expected 'experiment_id,user_id,group', "
                    f"got {line!r}"
                )
            exp, uid, label = (p.strip() for p in parts)
            if label not in ("t", "c"):
                raise ValueError(f"{path}:{lineno}: unknown group label {label!r}")
            if (exp, uid) in seen_pairs:
                raise ValueError(
                    f"{path}:{lineno}: duplicate user {uid!r} in experiment {exp!r}"
                )
            seen_pairs.add((exp, uid))
            if exp not in groups:
                groups[exp] = ([], [])
                order.append(exp)
            groups[exp][0 if label == "t" else 1].append(uid)
    return [
        ExperimentAssignment(exp, groups[exp][0], groups[exp][1])
        for exp in sorted(order)
    ]


def _evaluate(
    method: Method,
    assignment: ExperimentAssignment,
    value_by_id: dict,
    table,
    alphas: Sequence[float],
) -> ResultRow:
    row = ResultRow(
        experiment_id=assignment.experiment_id,
        method=method.value,
        n_treatment=assignment.n_treatment,
        n_control=assignment.n_control,
    )
    try:
        if not assignment.testable:
            raise ValueError("untestable: one group is empty")
        if method is Method.T_TEST:
            t_vals = [_value_of(value_by_id, u) for u in assignment.treatment_ids]
            c_vals = [_value_of(value_by_id, u) for u in assignment.control_ids]
            stat = welch_t_statistic(t_vals, c_vals)
        elif method is Method.GLOBAL_RANK_SUM:
            stat = global_rank_sum_statistic(
                table.ranks_for(assignment.treatment_ids),
                table.ranks_for(assignment.control_ids),
            )
        else:
            members = list(assignment.treatment_ids) + list(assignment.control_ids)
            local = local_ranks(table, members)
            stat = rank_sum_statistic(
                local[: assignment.n_treatment], local[assignment.n_treatment :]
            )
        row.statistic = stat
        row.p_value = two_sided_p_value(stat)
        row.decisions = decide(stat, alphas)
    except (ValueError, KeyError) as exc:
        row.error = str(exc).strip("'\"")
    return row


def _value_of(value_by_id: dict, uid):
    try:
        return value_by_id[uid]
    except KeyError:
        raise KeyError(f"unknown user {uid!r}") from None


def analyze(request: AnalysisRequest) -> AnalysisReport:
    """Run the rank-once/test-many pipeline and optionally write the report."""
    rankcore.reset_sort_count()
    timings = {}

    t0 = time.perf_counter()
    records = load_metrics(request.metrics_path, has_header=request.has_header)
    assignments = load_assignments(
        request.assignments_path, has_header=request.has_header
    )
    timings["ingest"] = time.perf_counter() - t0

    methods = [m for m in _METHOD_ORDER if m.value in request.methods]
    needs_ranks = any(m is not Method.T_TEST for m in methods)

    table = None
    t0 = time.perf_counter()
    if needs_ranks:
        table = compute_global_ranks(records, request.tiebreak_seed)
    timings["ranking"] = time.perf_counter() - t0 if needs_ranks else 0.0

    value_by_id = {r.user_id: r.value for r in records}
    t0 = time.perf_counter()
    rows = [
        _evaluate(method, assignment, value_by_id, table, request.alphas)
        for assignment in assignments
        for method in methods
    ]
    timings["evaluate"] = time.perf_counter() - t0

    report = AnalysisReport(
        rows=rows,
        alphas=tuple(request.alphas),
        phase_timings=timings,
        sorts_performed=rankcore.sort_count(),
    )
    if request.output_path:
        Path(request.output_path).write_text(
            report.render(request.output_format), encoding="utf-8"
        )
    return report
