"""Finite-volume solvers for multiphase tumor growth on a growing sphere."""

from .diagnostics import ConvergenceRow, convergence_rates, incompressibility_index, l1_error
from .errors import (ConfigError, ConvergenceError, DomainCollapseError, NonFiniteError, SolverError,
                     StencilError, ValidationError)
from .grid import GridSpec, RadiusState, build_grid
from .method import MethodConfig
from .model import ModelProblem, Scenario, manufactured_scenario
from .runner import RunConfig, parse_config, run_convergence_suite, run_scenario, simulate
from .state import State
from .tumor import TumorParameters, TumorScenario, tumor_scenario

__all__ = [
    "ConfigError", "ConvergenceError", "ConvergenceRow", "DomainCollapseError", "GridSpec",
    "MethodConfig", "ModelProblem", "NonFiniteError", "RadiusState", "RunConfig", "Scenario",
    "SolverError", "State", "StencilError", "TumorParameters", "TumorScenario", "ValidationError",
    "build_grid", "convergence_rates", "incompressibility_index", "l1_error", "manufactured_scenario",
    "parse_config", "run_convergence_suite", "run_scenario", "simulate", "tumor_scenario",
]
__version__ = "0.1.0"
