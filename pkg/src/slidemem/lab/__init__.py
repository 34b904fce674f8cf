"""Scenarios, the built-in catalog, run reports and the command-line tool."""

from .catalog import CATALOG, catalog_checksum, get
from .report import Check, RunReport, SolveRecord, export, run_scenario, sweep, verify
from .scenario import Scenario, Study

__all__ = [
    "CATALOG",
    "Check",
    "RunReport",
    "Scenario",
    "SolveRecord",
    "Study",
    "catalog_checksum",
    "export",
    "get",
    "run_scenario",
    "sweep",
    "verify",
]
