"""Representative prosumage household, fleet scaling and residual network demand."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .household import BatterySpec, CostCurves, DispatchResult, HouseholdRun
from .timeseries import (ProfileSchema, TimeSeries, Unit, read_profile_table, resample_to_hourly, write_columns,
                         year_timestamps)

KWH_PER_MWH = 1000.0


@dataclass(frozen=True)
class FleetSpec:
    n_households: int = 500_000

    def __post_init__(self):
        if self.n_households <= 0:
            raise ValueError("n_households must be positive")


@dataclass(frozen=True)
class RepresentativeProfile:
    """Element-wise cohort means (kWh per household per step)."""

    net_grid: TimeSeries
    demand: TimeSeries
    pv_generation: TimeSeries
    grid_import: TimeSeries
    grid_export: TimeSeries
    n_source: int

    def hourly(self) -> "RepresentativeProfile":
        if self.net_grid.step_minutes == 60:
            return self
        return RepresentativeProfile(*(resample_to_hourly(s) for s in (
            self.net_grid, self.demand, self.pv_generation, self.grid_import, self.grid_export)), self.n_source)

    def without_prosumage(self) -> "RepresentativeProfile":
        """Same households with nothing installed: they import their whole demand."""
        zero = self.demand.scale(0.0)
        return RepresentativeProfile(self.demand, self.demand, zero, self.demand, zero, self.n_source)


def representative_profile(cohort: Sequence[HouseholdRun | DispatchResult]) -> RepresentativeProfile:
    """Average the final-year series of a household cohort."""
    if not cohort:
        raise ValueError("empty cohort")
    dispatches = [c.final_dispatch if isinstance(c, HouseholdRun) else c for c in cohort]
    first = dispatches[0]
    step, year = first.step_minutes, first.start_year
    for d in dispatches:
        if d.step_minutes != step or d.demand.shape != first.demand.shape:
            raise ValueError("cohort series differ in resolution or length")

    def mean(attr):
        return TimeSeries(np.mean([getattr(d, attr) for d in dispatches], axis=0), step, Unit.KWH, year)

    net = TimeSeries(np.mean([d.grid_import - d.grid_export for d in dispatches], axis=0), step, Unit.KWH, year)
    return RepresentativeProfile(net, mean("demand"), mean("pv_generation"), mean("grid_import"),
                                 mean("grid_export"), len(dispatches))


@dataclass(frozen=True)
class ResidualDemand:
    """Hourly fleet-level series in MWh."""

    residual: TimeSeries
    network: TimeSeries
    household_pv: TimeSeries
    household_net: TimeSeries
    household_demand: TimeSeries
    household_import: TimeSeries
    reduction: TimeSeries  # network minus residual
    n_households: int

    def annual_twh(self) -> float:
        return float(self.residual.values.sum()) / 1e6


def build_residual(network_demand: TimeSeries, rep: RepresentativeProfile, fleet: FleetSpec = FleetSpec()) -> ResidualDemand:
    """Subtract the fleet's grid-utilisation change from network demand."""
    if network_demand.step_minutes != 60 or network_demand.unit is not Unit.MWH:
        raise ValueError("network demand must be hourly MWh")
    rep = rep.hourly()
    if len(rep.net_grid) != len(network_demand):
        raise ValueError("representative profile and network demand cover different periods")
    if rep.net_grid.unit is not Unit.KWH:
        raise ValueError("representative profile must be in kWh")
    scale = fleet.n_households / KWH_PER_MWH
    reduction = fleet.n_households * (rep.demand.values - rep.net_grid.values) / KWH_PER_MWH
    year = network_demand.start_year

    def mwh(v):
        return TimeSeries(v, 60, Unit.MWH, year)

    return ResidualDemand(mwh(network_demand.values - reduction), network_demand,
                          mwh(rep.pv_generation.values * scale), mwh(rep.net_grid.values * scale),
                          mwh(rep.demand.values * scale), mwh(rep.grid_import.values * scale), mwh(reduction),
                          fleet.n_households)


def reference_residual(network_demand: TimeSeries, rep: RepresentativeProfile,
                       fleet: FleetSpec = FleetSpec()) -> ResidualDemand:
    """No prosumage: the residual is the network demand itself, households keep their demand."""
    return build_residual(network_demand, rep.without_prosumage(), fleet)


_RESIDUAL_COLUMNS = ("residual_mwh", "network_mwh", "household_pv_mwh", "household_net_mwh", "household_demand_mwh",
                     "household_import_mwh", "reduction_mwh")


def write_residual(path: str | Path, rd: ResidualDemand) -> None:
    cols = [rd.residual, rd.network, rd.household_pv, rd.household_net, rd.household_demand, rd.household_import,
            rd.reduction]
    write_columns(path, ["timestamp", *_RESIDUAL_COLUMNS], year_timestamps(60, rd.residual.start_year),
                  [c.values for c in cols])


def read_residual(path: str | Path, n_households: int = 0, start_year: int = 2030) -> ResidualDemand:
    _, columns = read_profile_table(path, ProfileSchema(step_minutes=60))
    missing = [c for c in _RESIDUAL_COLUMNS if c not in columns]
    if missing:
        raise ValueError(f"{path}: missing columns {missing}")
    s = [TimeSeries(columns[c], 60, Unit.MWH, start_year) for c in _RESIDUAL_COLUMNS]
    return ResidualDemand(*s, n_households)


@dataclass(frozen=True)
class FleetInvestment:
    """One year of fleet-wide household investment."""

    year: int
    pv_kwp: float
    battery_kwh: float
    pv_capex: float  # AUD
    battery_capex: float  # AUD


def fleet_investments(runs: Sequence, costs: CostCurves, fleet: FleetSpec = FleetSpec()) -> list[FleetInvestment]:
    """Cohort-average yearly additions and capex, scaled to the fleet.

    ``runs`` are :class:`HouseholdRun` objects or anything else carrying ``decisions``.
    """
    if not runs:
        raise ValueError("empty cohort")
    per_year: dict[int, list[float]] = {}
    for run in runs:
        for d in run.decisions:
            acc = per_year.setdefault(d.year, [0.0, 0.0, 0.0, 0.0])
            acc[0] += d.added_pv
            acc[1] += d.added_battery
            acc[2] += costs.pv(d.year) * d.added_pv
            acc[3] += costs.battery(d.year) * d.added_battery
    scale = fleet.n_households / len(runs)
    return [FleetInvestment(y, *(v * scale for v in acc)) for y, acc in sorted(per_year.items())]


@dataclass(frozen=True)
class FleetCapacity:
    pv_mw: float
    battery_mwh: float
    battery_mw: float


def fleet_capacity(runs: Sequence, fleet: FleetSpec = FleetSpec(), battery: BatterySpec = BatterySpec()) -> FleetCapacity:
    """Nominal installed capacity in the final year, scaled to the fleet.

    ``runs`` need ``installed_pv`` and ``installed_battery`` (kWp, kWh).
    """
    if not runs:
        raise ValueError("empty cohort")
    scale = fleet.n_households / len(runs) / KWH_PER_MWH
    pv = sum(r.installed_pv for r in runs) * scale
    batt = sum(r.installed_battery for r in runs) * scale
    return FleetCapacity(pv, batt, batt / battery.energy_to_power_ratio)
