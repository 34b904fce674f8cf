from __future__ import annotations

import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

# (criterion, passed, detail) lines collected by test_acceptance.py
ACCEPTANCE: list[tuple[int, bool, str]] = []
SUITE_BUDGET = 180.0
_START = [0.0]


def pytest_sessionstart(session):
    _START[0] = time.perf_counter()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
    elapsed = time.perf_counter() - _START[0]
    verdict = "PASS" if elapsed < SUITE_BUDGET else "FAIL"
    terminalreporter.write_line(f"suite runtime: {verdict}  {elapsed:.1f}s (<{SUITE_BUDGET:.0f}s, part of criterion 10)")


@pytest.fixture(scope="session")
def catalog_reports():
    """Every built-in scenario run once per session."""
    from slidemem.lab import CATALOG, run_scenario

    return {name: run_scenario(sc) for name, sc in CATALOG.items()}


@pytest.fixture(scope="session")
def baseline():
    from slidemem import DATASET_D, DilutionSchedule, SolveConfig, equilibrium, solve

    sched = DilutionSchedule.sinusoid(1.0, 0.5, DATASET_D.period)
    cfg = SolveConfig()
    sol = solve(equilibrium(DATASET_D, sched).s_bar, DATASET_D, sched, cfg)
    return DATASET_D, sched, cfg, sol
