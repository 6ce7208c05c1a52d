"""Exhaustive NPV evaluation of PV/battery additions and the annual investment loop."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..timeseries import ProfileSet, TimeSeries
from .dispatch import DispatchResult, grid_totals, simulate_dispatch
from .economics import bill_from_totals, discounted_payback, discounted_payback_many, npv
from .specs import (BASE_YEAR, FINAL_YEAR, BatterySpec, EconomicContext, EvaluationGrid,
                    HouseholdState, PVSpec, degrade)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class InvestmentDecision:
    year: int
    added_pv: float
    added_battery: float
    npv: float
    dpp: float  # NEVER (inf) when not recovered inside the horizon
    capex: float = 0.0

    @property
    def dpp_label(self) -> str:
        return "never" if math.isinf(self.dpp) else f"{self.dpp:.6f}"


@dataclass
class CandidateTable:
    """Every feasible grid addition evaluated in one decision year."""

    year: int
    points: np.ndarray  # (n, 2): ΔkWp, ΔkWh; row 0 is the zero addition
    capex: np.ndarray
    savings: np.ndarray  # (n, horizon) AUD per horizon year
    npv: np.ndarray
    dpp: np.ndarray


def feasible_points(state: HouseholdState, grid: EvaluationGrid, year: int,
                    pv_spec: PVSpec = PVSpec(), battery: BatterySpec = BatterySpec()) -> np.ndarray:
    """Grid additions that keep installed capacity within the grid maxima."""
    pts = grid.points()
    pv_room = grid.pv_max - state.nominal_pv(year, pv_spec)
    bat_room = grid.battery_max - state.nominal_battery(year, battery)
    ok = (pts[:, 0] <= pv_room + 1e-9) & (pts[:, 1] <= bat_room + 1e-9)
    return pts[ok]


def candidate_savings(profile: ProfileSet, state: HouseholdState, points: np.ndarray,
                      econ: EconomicContext, year: int, battery: BatterySpec = BatterySpec(),
                      pv_spec: PVSpec = PVSpec()) -> np.ndarray:
    """Bill savings relative to the zero addition for each horizon year.

    Candidates are installed in ``year``; in horizon year ``year + k`` a new
    vintage has age ``k``. Row 0 of ``points`` must be the zero addition.
    """
    demand = np.ascontiguousarray(profile.demand.values)
    yield_ = np.ascontiguousarray(profile.pv_yield.values)
    step_h = profile.demand.step_hours
    eta = battery.one_way_efficiency
    out = np.empty((points.shape[0], econ.horizon_years))
    for k in range(1, econ.horizon_years + 1):
        y = year + k
        pv_usable = state.usable_pv(y, pv_spec) + points[:, 0] * pv_spec.capacity_factor(k)
        bat_usable = state.usable_battery_kwh(y, battery) + points[:, 1] * battery.capacity_factor(k)
        pv_installed = state.nominal_pv(y, pv_spec) + points[:, 0] * (k <= pv_spec.life_years)
        imports, exports = grid_totals(demand, yield_, pv_usable, bat_usable,
                                       battery.energy_to_power_ratio, eta, step_h)
        bills = bill_from_totals(imports, exports, econ.tariff, y, pv_installed)
        out[:, k - 1] = bills[0] - bills
    return out


def evaluate_candidates(profile: ProfileSet, state: HouseholdState, econ: EconomicContext,
                        grid: EvaluationGrid, year: int, battery: BatterySpec = BatterySpec(),
                        pv_spec: PVSpec = PVSpec()) -> CandidateTable:
    points = feasible_points(state, grid, year, pv_spec, battery)
    savings = candidate_savings(profile, state, points, econ, year, battery, pv_spec)
    capex = econ.costs.pv(year) * points[:, 0] + econ.costs.battery(year) * points[:, 1]
    values = npv(capex, savings, econ.discount_rate)
    values[0] = 0.0
    dpp = discounted_payback_many(capex, savings, econ.discount_rate)
    return CandidateTable(year, points, capex, savings, values, dpp)


def npv_of_configuration(profile: ProfileSet, state: HouseholdState, candidate, econ: EconomicContext,
                         year: int, battery: BatterySpec = BatterySpec(), pv_spec: PVSpec = PVSpec()) -> float:
    pts = np.array([[0.0, 0.0], [float(candidate[0]), float(candidate[1])]])
    if not pts[1].any():
        return 0.0
    savings = candidate_savings(profile, state, pts, econ, year, battery, pv_spec)[1]
    return float(npv(econ.costs.capex(year, *pts[1]), savings, econ.discount_rate))


def dpp_of_configuration(profile: ProfileSet, state: HouseholdState, candidate, econ: EconomicContext,
                         year: int, battery: BatterySpec = BatterySpec(), pv_spec: PVSpec = PVSpec()) -> float:
    pts = np.array([[0.0, 0.0], [float(candidate[0]), float(candidate[1])]])
    if not pts[1].any():
        return 0.0
    savings = candidate_savings(profile, state, pts, econ, year, battery, pv_spec)[1]
    return discounted_payback(econ.costs.capex(year, *pts[1]), savings, econ.discount_rate)


def select(table: CandidateTable, dpp_threshold: float) -> InvestmentDecision | None:
    """Argmax-NPV candidate, gated on positive NPV and some payback within the threshold.

    The zero addition is excluded from the payback gate (its payback is
    trivially zero). Ties go to lower capex, then smaller battery.
    """
    order = np.lexsort((table.points[:, 1], table.capex, -table.npv))
    best = int(order[0])
    if table.npv[best] <= 0:
        return None
    nonzero = np.any(table.points > 0, axis=1)
    if not np.any(table.dpp[nonzero] <= dpp_threshold):
        return None
    return InvestmentDecision(table.year, float(table.points[best, 0]), float(table.points[best, 1]),
                              float(table.npv[best]), float(table.dpp[best]), float(table.capex[best]))


def invest_decision(profile: ProfileSet, state: HouseholdState, econ: EconomicContext,
                    grid: EvaluationGrid = EvaluationGrid(), year: int = BASE_YEAR,
                    battery: BatterySpec = BatterySpec(), pv_spec: PVSpec = PVSpec()) -> InvestmentDecision | None:
    table = evaluate_candidates(profile, state, econ, grid, year, battery, pv_spec)
    return select(table, econ.dpp_threshold)


@dataclass
class HouseholdRun:
    household_id: str
    state: HouseholdState
    decisions: list[InvestmentDecision]
    final_dispatch: DispatchResult
    final_year: int = FINAL_YEAR
    pv_spec: PVSpec = field(default_factory=PVSpec)
    battery: BatterySpec = field(default_factory=BatterySpec)

    def net_grid(self) -> TimeSeries:
        return self.final_dispatch.net_grid()

    @property
    def installed_pv(self) -> float:
        return self.state.nominal_pv(self.final_year, self.pv_spec)

    @property
    def installed_battery(self) -> float:
        return self.state.nominal_battery(self.final_year, self.battery)


def run_household(profile: ProfileSet, econ: EconomicContext, years=range(BASE_YEAR, FINAL_YEAR + 1),
                  grid: EvaluationGrid = EvaluationGrid(), battery: BatterySpec = BatterySpec(),
                  pv_spec: PVSpec = PVSpec(), state: HouseholdState | None = None) -> HouseholdRun:
    """Sequential annual investment simulation; dispatch of the final year is kept."""
    years = list(years)
    state = state or HouseholdState()
    decisions: list[InvestmentDecision] = []
    for y in years:
        state = degrade(state, y, pv_spec, battery)
        decision = invest_decision(profile, state, econ, grid, y, battery, pv_spec)
        if decision is not None:
            state = state.add(y, decision.added_pv, decision.added_battery)
            decisions.append(decision)
            logger.debug("%s %d: +%.1f kWp +%.0f kWh (NPV %.2f)", profile.household_id, y,
                         decision.added_pv, decision.added_battery, decision.npv)
    final = years[-1]
    dispatch = simulate_dispatch(profile, state, battery, final, pv_spec)
    return HouseholdRun(profile.household_id, state, decisions, dispatch, final, pv_spec, battery)
