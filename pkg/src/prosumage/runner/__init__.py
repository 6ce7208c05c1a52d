from .config import ConfigError, Inputs, RunConfig, load_config, load_inputs, parse_config
from .matrix import Cell, HouseholdKey, MatrixResult, Plan, analyze, load_result, plan_matrix, run_matrix

__all__ = ["Cell", "ConfigError", "HouseholdKey", "Inputs", "MatrixResult", "Plan", "RunConfig", "load_config",
           "analyze", "load_inputs", "load_result", "parse_config", "plan_matrix", "run_matrix"]
