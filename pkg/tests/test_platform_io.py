"""Ingestion, the rank-once pipeline, and report rendering."""

from __future__ import annotations

import json

import pytest

from grstest.platform_io import (
    AnalysisReport,
    AnalysisRequest,
    analyze,
    load_assignments,
    load_metrics,
)
from tests.conftest import WORKED_VALUES


class TestLoadMetrics:
    def test_worked_file(self, worked_metrics_file):
        records = load_metrics(worked_metrics_file)
        assert len(records) == 10
        assert [r.value for r in records] == [float(v) for v in WORKED_VALUES]
        assert records[0].user_id == "u1"

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(ValueError, match="empty population"):
            load_metrics(path)

    def test_malformed_line_cites_line_number(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("u1,1.0\nu2,2.0\nu3,3.0\nu4,4.0\nu5,not_a_number\n")
        with pytest.raises(ValueError, match=r":5:"):
            load_metrics(path)

    def test_duplicate_user(self, tmp_path):
        path = tmp_path / "dup.csv"
        path.write_text("u1,1.0\nu1,2.0\n")
        with pytest.raises(ValueError, match="duplicate user_id 'u1'"):
            load_metrics(path)

    def test_non_finite_value(self, tmp_path):
        path = tmp_path / "inf.csv"
        path.write_text("u1,inf\n")
        with pytest.raises(ValueError, match="non-finite"):
            load_metrics(path)

    def test_header_flag(self, tmp_path):
        path = tmp_path / "hdr.csv"
        path.write_text("user_id,value\nu1,1.5\n")
        records = load_metrics(path, has_header=True)
        assert records == load_metrics(tmp_path / "hdr.csv", has_header=True)
        assert len(records) == 1

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_metrics(tmp_path / "nope.csv")


class TestLoadAssignments:
    def test_worked_file(self, worked_assignments_file):
        assignments = load_assignments(worked_assignments_file)
        assert [a.experiment_id for a in assignments] == ["e1", "e2"]
        assert all(a.n_treatment + a.n_control == 6 for a in assignments)
        # users u5, u6 overlap both experiments
        e1, e2 = assignments
        shared = set(e1.treatment_ids + e1.control_ids) & set(
            e2.treatment_ids + e2.control_ids
        )
        assert shared == {"u5", "u6"}

    def test_single_line_untestable(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_text("e1,u1,t\n")
        (assignment,) = load_assignments(path)
        assert not assignment.testable

    def test_unknown_group_label(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_text("e1,u1,x\n")
        with pytest.raises(ValueError, match="unknown group label 'x'"):
            load_assignments(path)

    def test_duplicate_pair(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_text("e1,u1,t\ne1,u1,c\n")
        with pytest.raises(ValueError, match="duplicate user"):
            load_assignments(path)


class TestAnalyze:
    def request(self, metrics, assignments, **kw):
        defaults = dict(
            metrics_path=str(metrics),
            assignments_path=str(assignments),
            tiebreak_seed=7,
        )
        defaults.update(kw)
        return AnalysisRequest(**defaults)

    def test_worked_global_rank_sum(self, worked_metrics_file, worked_assignments_file):
        report = analyze(
            self.request(
                worked_metrics_file,
                worked_assignments_file,
                methods=("global_rank_sum",),
            )
        )
        stats = {r.experiment_id: r.statistic for r in report.rows}
        assert stats["e1"] == pytest.approx(0.1204, abs=1e-4)
        assert stats["e2"] == pytest.approx(0.8076, abs=1e-4)

    def test_all_methods_row_count(self, worked_metrics_file, worked_assignments_file):
        report = analyze(self.request(worked_metrics_file, worked_assignments_file))
        assert len(report.rows) == 6  # 2 experiments x 3 methods
        assert all(r.error is None for r in report.rows)

    def test_t_test_only_skips_ranking(
        self, worked_metrics_file, worked_assignments_file
    ):
        report = analyze(
            self.request(
                worked_metrics_file, worked_assignments_file, methods=("t_test",)
            )
        )
        assert report.phase_timings["ranking"] == 0.0
        assert report.sorts_performed == 0

    def test_single_sort_regardless_of_experiments(
        self, worked_metrics_file, tmp_path
    ):
        lines = []
        for e in range(50):
            for uid, label in zip(range(1, 11), "tttttccccc"):
                lines.append(f"e{e:03d},u{uid},{label}")
        path = tmp_path / "many.csv"
        path.write_text("\n".join(lines) + "\n")
        report = analyze(
            self.request(worked_metrics_file, path, methods=("global_rank_sum",))
        )
        assert report.sorts_performed == 1
        assert len(report.rows) == 50

    def test_unknown_user_is_error_row_not_abort(
        self, worked_metrics_file, tmp_path
    ):
        path = tmp_path / "a.csv"
        path.write_text("e1,u1,t\ne1,u2,t\ne1,u3,c\ne1,u99,c\ne2,u1,t\ne2,u2,t\ne2,u3,c\ne2,u4,c\n")
        report = analyze(self.request(worked_metrics_file, path))
        by_exp = {}
        for r in report.rows:
            by_exp.setdefault(r.experiment_id, []).append(r)
        assert all(r.error is not None for r in by_exp["e1"])
        assert any("u99" in r.error for r in by_exp["e1"])
        assert all(r.error is None for r in by_exp["e2"])

    def test_untestable_experiment_flagged(self, worked_metrics_file, tmp_path):
        path = tmp_path / "a.csv"
        path.write_text("e1,u1,t\n")
        report = analyze(self.request(worked_metrics_file, path))
        assert all("untestable" in r.error for r in report.rows)

    def test_overlap_safety(self, worked_metrics_file, worked_assignments_file, tmp_path):
        # dropping e2 must not change e1's results
        both = analyze(self.request(worked_metrics_file, worked_assignments_file))
        only_e1 = tmp_path / "e1.csv"
        only_e1.write_text(
            "\n".join(
                line
                for line in worked_assignments_file.read_text().splitlines()
                if line.startswith("e1")
            )
            + "\n"
        )
        alone = analyze(self.request(worked_metrics_file, only_e1))
        both_e1 = [r for r in both.rows if r.experiment_id == "e1"]
        assert [(r.method, r.statistic) for r in both_e1] == [
            (r.method, r.statistic) for r in alone.rows
        ]

    def test_structured_report_deterministic(
        self, worked_metrics_file, worked_assignments_file, tmp_path
    ):
        out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
        for out in (out1, out2):
            analyze(
                self.request(
                    worked_metrics_file,
                    worked_assignments_file,
                    output_path=str(out),
                    output_format="structured",
                )
            )
        assert out1.read_bytes() == out2.read_bytes()
        payload = json.loads(out1.read_text())
        assert {row["method"] for row in payload} == {
            "t_test",
            "rank_sum",
            "global_rank_sum",
        }

    def test_delimited_report_shape(self, worked_metrics_file, worked_assignments_file):
        report = analyze(self.request(worked_metrics_file, worked_assignments_file))
        lines = report.render("delimited").strip().splitlines()
        header = lines[0].split(",")
        assert header[:6] == [
            "experiment_id", "method", "n_t", "n_c", "statistic", "p_value",
        ]
        assert "decision@0.05" in header
        assert len(lines) == 7

    def test_invalid_request(self, worked_metrics_file, worked_assignments_file):
        with pytest.raises(ValueError, match="methods"):
            self.request(worked_metrics_file, worked_assignments_file, methods=())
        with pytest.raises(ValueError, match="unknown method"):
            self.request(
                worked_metrics_file, worked_assignments_file, methods=("bogus",)
            )
