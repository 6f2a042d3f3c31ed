"""Acceptance suite: one test per criterion, each at its stated tolerance and
time budget.  Every test prints a single PASS/FAIL line (shown even when
output capture is on) before asserting."""

from __future__ import annotations

import pytest

from nevlab.checks import CRITERIA, CheckResult, criterion_10


@pytest.fixture
def report(capsys):
    def emit(res: CheckResult) -> CheckResult:
        with capsys.disabled():
            print("\n" + res.line())
        return res
    return emit


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5, 6, 7, 8, 9])
def test_criterion(k, report):
    res = report(CRITERIA[k]())
    assert res.passed, res.line()


def test_criterion_10_determinism(tmp_path, report):
    res = report(criterion_10(tmp_path))
    assert res.passed, res.line()
