from .catalog import (DEFAULT_CATALOG, DISPATCHABLE, STORAGE, VARIABLE_RENEWABLE, CatalogError, Technology,
                      annuitize, default_catalog, read_catalog, scale_costs, write_catalog)
from .lp import ENDOGENOUS, LinearProgram, SectorScenario, build_lp
from .solution import (SectorSolution, ValidationReport, load_solution, run_endogenous, solve, solve_scenario,
                       validate_solution, write_solution)
from .solvers import DenseInteriorPointBackend, DenseSimplexBackend, HighsBackend, SolveError, SolverResult, get_backend

__all__ = [
    "CatalogError", "DEFAULT_CATALOG", "DISPATCHABLE", "DenseInteriorPointBackend", "DenseSimplexBackend", "ENDOGENOUS", "HighsBackend",
    "LinearProgram", "STORAGE", "SectorScenario", "SectorSolution", "SolveError", "SolverResult",
    "Technology", "VARIABLE_RENEWABLE", "ValidationReport", "annuitize", "build_lp", "default_catalog",
    "get_backend", "read_catalog", "run_endogenous", "scale_costs", "solve", "solve_scenario",
    "validate_solution", "write_catalog", "load_solution", "write_solution",
]
