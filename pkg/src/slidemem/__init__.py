"""Periodic solutions of a chemostat whose substrate equation carries a
sliding-window (finite memory) Caputo derivative with Contois kinetics.

Modules: :mod:`fracops` (the memory operator on periodic grids),
:mod:`model` (parameters, dilution schedules, kinetics), :mod:`solver`
(collocation Newton solve and multistart) and :mod:`lab` (scenarios, reports, CLI).
"""

from .fracops import PeriodicGrid, apply, build_operator, cfds_direct, memory_multiplier, sliding_rl_integral
from .model import DATASET_D, ChemostatParams, DilutionSchedule, equilibrium
from .solver import Classification, PeriodicSolution, SolveConfig, multistart, solve, solve_2d

__version__ = "0.1.0"

__all__ = [
    "DATASET_D",
    "ChemostatParams",
    "Classification",
    "DilutionSchedule",
    "PeriodicGrid",
    "PeriodicSolution",
    "SolveConfig",
    "apply",
    "build_operator",
    "cfds_direct",
    "equilibrium",
    "memory_multiplier",
    "multistart",
    "sliding_rl_integral",
    "solve",
    "solve_2d",
]
