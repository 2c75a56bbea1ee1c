"""Shared fixtures: the ten-user worked example used throughout the suite."""

from __future__ import annotations

import pytest

from grstest.rankcore import MetricRecord

# Ten users, their metric values, and the ranks/local ranks a correct
# implementation must reproduce (verified by hand).
WORKED_VALUES = [10, 9, 30, 23, 19, 3, 5, 27, 15, 18]
WORKED_GLOBAL_RANKS = [4, 3, 10, 8, 7, 1, 2, 9, 5, 6]

# Experiment 1: users 1..6 (t,t,t,c,c,c); experiment 2: users 5..10 (t,c,t,t,c,c).
EXP1_USERS = [1, 2, 3, 4, 5, 6]
EXP1_LOCAL_RANKS = [3, 2, 6, 5, 4, 1]
EXP2_USERS = [5, 6, 7, 8, 9, 10]
EXP2_LOCAL_RANKS = [5, 1, 2, 6, 3, 4]

EXP1_GRS = 0.1204  # ({4,3,10} vs {8,7,1}): diff 1/3, sigma^2 = 11.5
EXP2_GRS = 0.8076  # ({7,2,9} vs {1,5,6}): diff 2, sigma^2 = 9.2
EXP1_RS = 0.2390  # local ({3,2,6} vs {5,4,1})
EXP2_RS = 1.1953  # local ({5,2,6} vs {1,3,4})


@pytest.fixture
def worked_records():
    return [MetricRecord(i + 1, float(v)) for i, v in enumerate(WORKED_VALUES)]


@pytest.fixture
def worked_metrics_file(tmp_path):
    path = tmp_path / "metrics.csv"
    lines = [f"u{i + 1},{v}" for i, v in enumerate(WORKED_VALUES)]
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def worked_assignments_file(tmp_path):
    path = tmp_path / "assignments.csv"
    rows = []
    for uid, label in zip(EXP1_USERS, "tttccc"):
        rows.append(f"e1,u{uid},{label}")
    for uid, label in zip(EXP2_USERS, "tcttcc"):
        rows.append(f"e2,u{uid},{label}")
    path.write_text("\n".join(rows) + "\n")
    return path
