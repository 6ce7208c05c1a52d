"""Greedy self-consumption dispatch of a behind-the-meter PV battery system.

Per step: PV serves the load first, surplus charges the battery (bounded by the
AC power limit and remaining headroom) and the rest is exported; a deficit is
covered from the battery (same AC limit, available energy) and then imported.
One-way efficiency is the square root of the round-trip efficiency on both
the charge and discharge side.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ..timeseries import ProfileSet, TimeSeries, Unit
from .specs import BatterySpec, HouseholdState, PVSpec


@njit(cache=True)
def dispatch_step(pv, load, soc, capacity, ac_limit, eta):
    """One greedy step.

    Returns ``(self_consumption, charge_ac, discharge_ac, export, import, soc)``.
    ``ac_limit`` is the AC energy the inverter moves in one step (kW × step h).
    """
    self_c = min(pv, load)
    charge = 0.0
    discharge = 0.0
    export = 0.0
    imp = 0.0
    if pv > load:
        surplus = pv - load
        headroom = (capacity - soc) / eta
        charge = min(surplus, ac_limit, max(headroom, 0.0))
        soc = min(soc + charge * eta, capacity)
        export = surplus - charge
    else:
        deficit = load - pv
        discharge = min(deficit, ac_limit, soc * eta)
        soc = max(soc - discharge / eta, 0.0)
        imp = deficit - discharge
    return self_c, charge, discharge, export, imp, soc


@njit(cache=True)
def grid_totals(demand, pv_yield, pv_kwp, battery_kwh, e2p_ratio, eta, step_hours):
    """Annual (import, export) kWh for each candidate capacity pair.

    ``pv_kwp`` and ``battery_kwh`` are equal-length arrays of usable capacity;
    state of charge starts at zero. The candidate loop is innermost and
    branch-free so it vectorises; the arithmetic matches :func:`dispatch_step`.
    """
    n = pv_kwp.shape[0]
    T = demand.shape[0]
    imports = np.zeros(n)
    exports = np.zeros(n)
    soc = np.zeros(n)
    limit = battery_kwh / e2p_ratio * step_hours
    for t in range(T):
        load = demand[t]
        y = pv_yield[t]
        for c in range(n):
            net = y * pv_kwp[c] - load
            surplus = net if net > 0.0 else 0.0
            deficit = -net if net < 0.0 else 0.0
            room = (battery_kwh[c] - soc[c]) / eta
            room = room if room > 0.0 else 0.0
            lim = limit[c]
            charge = surplus if surplus < lim else lim
            charge = charge if charge < room else room
            avail = soc[c] * eta
            dis = deficit if deficit < lim else lim
            dis = dis if dis < avail else avail
            s = soc[c] + charge * eta - dis / eta
            s = s if s > 0.0 else 0.0
            soc[c] = s if s < battery_kwh[c] else battery_kwh[c]
            exports[c] += surplus - charge
            imports[c] += deficit - dis
    return imports, exports


@njit(cache=True)
def _dispatch_series(demand, pv_gen, capacity, ac_limit, eta, soc0):
    T = demand.shape[0]
    out = np.zeros((6, T))
    soc = soc0
    for t in range(T):
        s, ch, dis, ex, im, soc = dispatch_step(pv_gen[t], demand[t], soc, capacity, ac_limit, eta)
        out[0, t] = s
        out[1, t] = ch
        out[2, t] = dis
        out[3, t] = ex
        out[4, t] = im
        out[5, t] = soc
    return out


@dataclass(frozen=True)
class DispatchResult:
    demand: np.ndarray
    pv_generation: np.ndarray
    self_consumption: np.ndarray
    battery_charge_ac: np.ndarray
    battery_discharge_ac: np.ndarray
    grid_export: np.ndarray
    grid_import: np.ndarray
    state_of_charge: np.ndarray
    step_minutes: int = 30
    start_year: int = 2030

    @property
    def total_import(self) -> float:
        return float(self.grid_import.sum())

    @property
    def total_export(self) -> float:
        return float(self.grid_export.sum())

    def totals(self) -> dict[str, float]:
        names = ("demand", "pv_generation", "self_consumption", "battery_charge_ac",
                 "battery_discharge_ac", "grid_export", "grid_import")
        return {n: float(getattr(self, n).sum()) for n in names}

    def net_grid(self) -> TimeSeries:
        """Import minus export per step (kWh)."""
        return TimeSeries(self.grid_import - self.grid_export, self.step_minutes, Unit.KWH,
                          self.start_year)


def run_dispatch(demand, pv_generation, capacity_kwh: float, power_kw: float, eta: float,
                 step_minutes: int = 30, soc0: float = 0.0, start_year: int = 2030) -> DispatchResult:
    demand = np.ascontiguousarray(demand, dtype=np.float64)
    pv_generation = np.ascontiguousarray(pv_generation, dtype=np.float64)
    if demand.shape != pv_generation.shape:
        raise ValueError("demand and PV series differ in length")
    limit = power_kw * step_minutes / 60.0
    out = _dispatch_series(demand, pv_generation, float(capacity_kwh), float(limit), float(eta), float(soc0))
    return DispatchResult(demand, pv_generation, *out, step_minutes=step_minutes, start_year=start_year)


def simulate_dispatch(profile: ProfileSet, state: HouseholdState, spec: BatterySpec = BatterySpec(),
                      year: int = 2030, pv_spec: PVSpec = PVSpec()) -> DispatchResult:
    """Half-hourly dispatch of the household's installed system in ``year``."""
    if profile.demand.step_minutes != 30:
        raise ValueError("household dispatch runs on 30-minute profiles")
    kwp = state.usable_pv(year, pv_spec)
    kwh = state.usable_battery_kwh(year, spec)
    return run_dispatch(profile.demand.values, profile.pv_yield.values * kwp, kwh,
                        kwh / spec.energy_to_power_ratio, spec.one_way_efficiency,
                        profile.demand.step_minutes, start_year=profile.demand.start_year)
