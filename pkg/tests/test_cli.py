"""Command-line interface end to end."""

from __future__ import annotations

import json

import pytest

from grstest.cli import cli_main
from tests.conftest import WORKED_GLOBAL_RANKS


def test_rank_subcommand(worked_metrics_file, tmp_path, capsys):
    out = tmp_path / "ranks.csv"
    code = cli_main(
        ["rank", "--metrics", str(worked_metrics_file), "--seed", "7", "--out", str(out)]
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "#population_size=10 tiebreak_seed=7"
    ranks = [int(line.split(",")[1]) for line in lines[1:]]
    assert ranks == WORKED_GLOBAL_RANKS


def test_test_subcommand_structured(
    worked_metrics_file, worked_assignments_file, tmp_path
):
    out = tmp_path / "report.json"
    code = cli_main(
        [
            "test",
            "--metrics", str(worked_metrics_file),
            "--assignments", str(worked_assignments_file),
            "--method", "global_rank_sum",
            "--seed", "7",
            "--format", "structured",
            "--out", str(out),
        ]
    )
    assert code == 0
    payload = json.loads(out.read_text())
    stats = {row["experiment_id"]: row["statistic"] for row in payload}
    assert stats["e1"] == pytest.approx(0.1204, abs=1e-4)
    assert stats["e2"] == pytest.approx(0.8076, abs=1e-4)


def test_test_without_arguments_prints_usage(capsys):
    code = cli_main(["test"])
    assert code != 0
    assert "usage" in capsys.readouterr().err.lower()


def test_unknown_subcommand(capsys):
    assert cli_main(["frobnicate"]) != 0


def test_missing_file_is_diagnosed(tmp_path, capsys):
    code = cli_main(
        ["rank", "--metrics", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "o")]
    )
    assert code == 1
    assert "error" in capsys.readouterr().err.lower()


def test_simulate_subcommand(tmp_path):
    out = tmp_path / "study.json"
    code = cli_main(
        [
            "simulate",
            "--mu", "-3", "--sigma", "3",
            "--population", "2000",
            "--n-treatment", "200", "--n-control", "200",
            "--reps", "50",
            "--seed", "11",
            "--format", "structured",
            "--out", str(out),
        ]
    )
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["study"] == "calibration"
    assert payload["replications"] == 50


def test_simulate_power_branch(tmp_path):
    out = tmp_path / "power.json"
    code = cli_main(
        [
            "simulate",
            "--mu", "-5", "--sigma", "7",
            "--population", "2000",
            "--n-treatment", "200", "--n-control", "200",
            "--reps", "20",
            "--gamma", "0.5",
            "--seed", "11",
            "--format", "structured",
            "--out", str(out),
        ]
    )
    assert code == 0
    assert json.loads(out.read_text())["study"] == "power"


def test_seed_env_var(worked_metrics_file, tmp_path, monkeypatch):
    out_env = tmp_path / "env.csv"
    out_flag = tmp_path / "flag.csv"
    monkeypatch.setenv("GRSTEST_SEED", "7")
    assert cli_main(["rank", "--metrics", str(worked_metrics_file), "--out", str(out_env)]) == 0
    monkeypatch.delenv("GRSTEST_SEED")
    assert (
        cli_main(
            ["rank", "--metrics", str(worked_metrics_file), "--seed", "7", "--out", str(out_flag)]
        )
        == 0
    )
    assert out_env.read_bytes() == out_flag.read_bytes()


def test_bench_subcommand(capsys):
    code = cli_main(
        [
            "bench",
            "--experiments", "1", "--experiments", "3",
            "--population", "5000",
            "--n-treatment", "250", "--n-control", "250",
            "--runs", "1",
        ]
    )
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 3  # header + two rows
