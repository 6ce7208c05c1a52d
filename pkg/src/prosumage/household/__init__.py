from .dispatch import DispatchResult, dispatch_step, grid_totals, run_dispatch, simulate_dispatch
from .economics import NEVER, annual_bill, bill_from_totals, discounted_payback, npv
from .invest import (CandidateTable, HouseholdRun, InvestmentDecision, dpp_of_configuration,
                     evaluate_candidates, invest_decision, npv_of_configuration, run_household, select)
from .specs import (BASE_YEAR, FINAL_YEAR, BatterySpec, CostCurves, EconomicContext, EvaluationGrid,
                    HouseholdState, PVSpec, TariffSchedule, degrade)

__all__ = [
    "BASE_YEAR", "FINAL_YEAR", "BatterySpec", "CandidateTable", "CostCurves", "DispatchResult",
    "EconomicContext", "EvaluationGrid",
    "HouseholdRun", "HouseholdState", "InvestmentDecision", "NEVER", "PVSpec", "TariffSchedule",
    "annual_bill", "bill_from_totals", "degrade", "discounted_payback", "dispatch_step",
    "dpp_of_configuration", "evaluate_candidates", "grid_totals", "invest_decision", "npv",
    "npv_of_configuration", "run_dispatch", "run_household", "select", "simulate_dispatch",
]
