"""Scenario post-processing: duration curves, segment prices, CO2, system cost and deltas."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .fleet import FleetCapacity, FleetInvestment, ResidualDemand
from .household import FINAL_YEAR, BatterySpec, PVSpec
from .sector import DISPATCHABLE, STORAGE, SectorSolution, annuitize
from .timeseries import TimeSeries

SYSTEM_COST_RATE = 0.04


def _values(series) -> np.ndarray:
    return series.values if isinstance(series, TimeSeries) else np.asarray(series, dtype=np.float64)


def rldc(series) -> np.ndarray:
    """Duration curve: the series sorted in descending order."""
    return np.sort(_values(series))[::-1]


@dataclass
class ScenarioOutcome:
    """Everything analytics needs from one solved cell (reference cells have no fleet)."""

    name: str
    res_share: float | None
    solution: SectorSolution
    residual: ResidualDemand
    household_capacity: FleetCapacity = FleetCapacity(0.0, 0.0, 0.0)
    investments: list[FleetInvestment] = field(default_factory=list)

    @property
    def is_reference(self) -> bool:
        return self.household_capacity.pv_mw == 0 and self.household_capacity.battery_mwh == 0


def _utility_output(sol: SectorSolution, names: Sequence[str]) -> np.ndarray:
    d = sol.dispatch
    return sum((d[n] for n in names if n in d), np.zeros(sol.scenario.hours))


def _variable_renewables(sol: SectorSolution) -> list[str]:
    return [t.name for t in sol.technologies if t.kind not in (DISPATCHABLE, STORAGE)]


def rldc_decomposition(scenario: ScenarioOutcome, reference: ScenarioOutcome, utility_pv: str = "pv") -> dict[str, np.ndarray]:
    """Four duration curves separating household and utility PV effects.

    - ``reference``: reference demand net of utility wind and PV output
    - ``prosumage``: prosumage residual demand net of its utility wind and PV output
    - ``reference_utility_pv``: reference demand net of utility PV only
    - ``counterfactual``: as above, additionally net of the household PV volume as if it were
      unsmoothed utility-scale feed-in
    """
    ref_d = reference.residual.residual.values
    pro_d = scenario.residual.residual.values
    if ref_d.shape != pro_d.shape or reference.residual.residual.start_year != scenario.residual.residual.start_year:
        raise ValueError("scenario and reference cover different years")
    ref_vre = _utility_output(reference.solution, _variable_renewables(reference.solution))
    pro_vre = _utility_output(scenario.solution, _variable_renewables(scenario.solution))
    ref_upv = _utility_output(reference.solution, [utility_pv])
    return {
        "reference": rldc(ref_d - ref_vre),
        "prosumage": rldc(pro_d - pro_vre),
        "reference_utility_pv": rldc(ref_d - ref_upv),
        "counterfactual": rldc(ref_d - ref_upv - scenario.residual.household_pv.values),
    }


def weighted_price(duals, profile) -> float:
    """Profile-weighted average of hourly prices."""
    d, p = _values(duals), _values(profile)
    if d.shape != p.shape:
        raise ValueError("price and profile lengths differ")
    total = float(p.sum())
    if total == 0.0:
        raise ValueError("profile has zero total energy")
    return float(d @ p) / total


@dataclass(frozen=True)
class CustomerSegment:
    name: str
    profile: np.ndarray  # MWh per hour


PROSUMAGE = "prosumage households"
NON_PROSUMAGE = "non-prosumage households"
COMMERCIAL = "C&I"


def customer_segments(rd: ResidualDemand, imports_only: bool = False) -> list[CustomerSegment]:
    """Split residual demand into prosumage households, an equal number of plain households, and C&I.

    C&I is the remainder after the net household profile, so with ``imports_only=False``
    the segments add up to the residual demand.
    """
    net = rd.household_net.values
    plain = rd.household_demand.values
    ci = rd.residual.values - net - plain
    pros = rd.household_import.values if imports_only else net
    return [CustomerSegment(PROSUMAGE, pros), CustomerSegment(NON_PROSUMAGE, plain), CustomerSegment(COMMERCIAL, ci)]


@dataclass(frozen=True)
class SegmentPrice:
    name: str
    price: float  # AUD/MWh
    energy: float  # MWh/yr
    wholesale_cost: float  # AUD/yr


def segment_prices(outcome: ScenarioOutcome, imports_only: bool = False) -> list[SegmentPrice]:
    duals = outcome.solution.duals
    out = []
    for seg in customer_segments(outcome.residual, imports_only):
        cost = float(duals @ seg.profile)
        energy = float(seg.profile.sum())
        out.append(SegmentPrice(seg.name, cost / energy if energy else math.nan, energy, cost))
    return out


@dataclass(frozen=True)
class SegmentPriceChange:
    """Wholesale cost change of a segment, split into a price and a volume component."""

    name: str
    price_change: float  # AUD/MWh
    price_effect: float  # AUD/yr, price change at scenario volume
    volume_effect: float  # AUD/yr, volume change at reference price


def segment_price_changes(scenario: ScenarioOutcome, reference: ScenarioOutcome,
                          imports_only: bool = False) -> list[SegmentPriceChange]:
    ref = {p.name: p for p in segment_prices(reference, imports_only)}
    out = []
    for p in segment_prices(scenario, imports_only):
        r = ref[p.name]
        dp = p.price - r.price
        out.append(SegmentPriceChange(p.name, dp, dp * p.energy, r.price * (p.energy - r.energy)))
    return out


@dataclass(frozen=True)
class CO2Report:
    total_t: float
    intensity_kg_per_kwh: float
    by_technology: dict[str, float]


def co2_report(sol: SectorSolution, catalog=None) -> CO2Report:
    """Emissions from fuel burn; intensity over the gross demand served."""
    techs = list(catalog) if catalog is not None else sol.technologies
    disp = sol.dispatch
    by_tech = {}
    for t in techs:
        if t.kind == DISPATCHABLE and t.name in disp:
            by_tech[t.name] = float(disp[t.name].sum()) / t.efficiency * t.emission_factor
    total = sum(by_tech.values())
    served = sol.scenario.gross_demand()
    # t/MWh and kg/kWh are the same ratio
    return CO2Report(total, total / served if served else 0.0, by_tech)


@dataclass(frozen=True)
class SystemCost:
    utility: float
    household_pv: float
    household_battery: float

    @property
    def household(self) -> float:
        return self.household_pv + self.household_battery

    @property
    def total(self) -> float:
        return self.utility + self.household


def system_cost(sol: SectorSolution, investments: Sequence[FleetInvestment] = (), rate: float = SYSTEM_COST_RATE,
                pv: PVSpec = PVSpec(), battery: BatterySpec = BatterySpec(), year: int = FINAL_YEAR) -> SystemCost:
    """LP objective plus annuities of household vintages still alive in ``year``."""
    pv_total = 0.0
    batt_total = 0.0
    for inv in investments:
        age = year - inv.year
        if age < 0:
            continue
        if age <= pv.life_years and inv.pv_capex:
            pv_total += annuitize(inv.pv_capex, pv.life_years, rate)
        if age <= battery.life_years and inv.battery_capex:
            batt_total += annuitize(inv.battery_capex, battery.life_years, rate)
    return SystemCost(sol.objective, pv_total, batt_total)


def outcome_system_cost(o: ScenarioOutcome, rate: float = SYSTEM_COST_RATE) -> SystemCost:
    return system_cost(o.solution, o.investments, rate)


@dataclass
class ScenarioDelta:
    scenario: str
    reference: str
    capacity_mw: dict[str, float]
    energy_capacity_mwh: dict[str, float]
    generation_gwh: dict[str, float]
    co2_t: float
    co2_intensity: float  # kg/kWh
    system_cost: float  # AUD/yr
    system_cost_pct: float
    substitution_per_pv: dict[str, float]  # MW utility removed per MW household PV
    substitution_per_battery_mw: dict[str, float]
    substitution_per_battery_mwh: dict[str, float]

    def rows(self) -> list[tuple[str, str, float]]:
        out = []
        for group in ("capacity_mw", "energy_capacity_mwh", "generation_gwh", "substitution_per_pv",
                      "substitution_per_battery_mw", "substitution_per_battery_mwh"):
            out += [(group, k, v) for k, v in getattr(self, group).items()]
        out += [("co2", "total_t", self.co2_t), ("co2", "intensity_kg_per_kwh", self.co2_intensity),
                ("system_cost", "aud_per_year", self.system_cost), ("system_cost", "percent", self.system_cost_pct)]
        return out


def delta_report(scenario: ScenarioOutcome, reference: ScenarioOutcome) -> ScenarioDelta:
    """Scenario minus reference at the same RES share."""
    if scenario.res_share != reference.res_share:
        raise ValueError(f"RES share mismatch: {scenario.res_share} vs {reference.res_share}")
    s, r = scenario.solution, reference.solution
    dcap = _diff(s.capacities, r.capacities)
    decap = _diff(s.energy_capacities, r.energy_capacities)
    dgen = {k: v / 1000.0 for k, v in _diff(s.annual_generation(), r.annual_generation()).items()}
    co2_s, co2_r = co2_report(s), co2_report(r)
    cost_s, cost_r = outcome_system_cost(scenario).total, outcome_system_cost(reference).total
    dcost = cost_s - cost_r
    hh = scenario.household_capacity

    def ratios(denominator, deltas):
        if denominator <= 0:
            return {}
        return {k: -v / denominator for k, v in deltas.items()}

    return ScenarioDelta(
        scenario.name, reference.name, dcap, decap, dgen,
        co2_s.total_t - co2_r.total_t, co2_s.intensity_kg_per_kwh - co2_r.intensity_kg_per_kwh,
        dcost, 100.0 * dcost / cost_r if cost_r else 0.0,
        ratios(hh.pv_mw, dcap), ratios(hh.battery_mw, dcap), ratios(hh.battery_mwh, decap),
    )


def _diff(a: dict[str, float], b: dict[str, float]) -> dict[str, float]:
    if set(a) != set(b):
        raise ValueError("scenario and reference use different technology sets")
    return {k: a[k] - b[k] for k in a}


def write_delta(path: str | Path, delta: ScenarioDelta) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["group", "item", "value"])
        w.writerows((g, k, repr(float(v))) for g, k, v in delta.rows())


def write_rldc(path: str | Path, curves: dict[str, np.ndarray]) -> None:
    names = list(curves)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rank", *names])
        for i, row in enumerate(zip(*(curves[n].tolist() for n in names))):
            w.writerow([i, *map(repr, row)])


def scenario_summary(o: ScenarioOutcome) -> dict[str, float]:
    """Flat per-scenario figures for the cross-scenario table."""
    sol = o.solution
    co2 = co2_report(sol)
    cost = outcome_system_cost(o)
    row: dict[str, float] = {
        "res_share": math.nan if o.res_share is None else o.res_share,
        "realized_res_share": sol.renewable_share(),
        "residual_twh": o.residual.annual_twh(),
        "household_pv_mw": o.household_capacity.pv_mw,
        "household_battery_mwh": o.household_capacity.battery_mwh,
        "lp_objective": sol.objective,
        "system_cost": cost.total,
        "household_annuities": cost.household,
        "co2_t": co2.total_t,
        "co2_kg_per_kwh": co2.intensity_kg_per_kwh,
        "mean_price": weighted_price(sol.duals, o.residual.residual),
    }
    row.update({f"cap_{k}_mw": v for k, v in sol.capacities.items()})
    row.update({f"ecap_{k}_mwh": v for k, v in sol.energy_capacities.items()})
    row.update({f"gen_{k}_gwh": v / 1000.0 for k, v in sol.annual_generation().items()})
    for p in segment_prices(o):
        row[f"price_{p.name}"] = p.price
    return row


__all__ = [
    "COMMERCIAL", "CO2Report", "CustomerSegment", "NON_PROSUMAGE", "PROSUMAGE", "ScenarioDelta",
    "ScenarioOutcome", "SegmentPrice", "SegmentPriceChange", "SystemCost", "co2_report", "customer_segments",
    "delta_report", "outcome_system_cost", "rldc", "rldc_decomposition", "scenario_summary", "segment_price_changes",
    "segment_prices", "system_cost", "weighted_price", "write_delta", "write_rldc",
]
