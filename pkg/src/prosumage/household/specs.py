"""Household-side parameters, installed-capacity state and degradation."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

BASE_YEAR = 2019
FINAL_YEAR = 2030


@dataclass(frozen=True)
class BatterySpec:
    energy_to_power_ratio: float = 2.5
    roundtrip_efficiency: float = 0.92
    life_years: int = 10
    end_of_life_capacity_fraction: float = 0.70

    def __post_init__(self):
        if not 0 < self.roundtrip_efficiency <= 1:
            raise ValueError("roundtrip_efficiency must lie in (0, 1]")
        if not 0 < self.end_of_life_capacity_fraction <= 1:
            raise ValueError("end_of_life_capacity_fraction must lie in (0, 1]")
        if self.energy_to_power_ratio <= 0 or self.life_years <= 0:
            raise ValueError("energy_to_power_ratio and life_years must be positive")

    @property
    def one_way_efficiency(self) -> float:
        return float(np.sqrt(self.roundtrip_efficiency))

    def capacity_factor(self, age: int) -> float:
        return _linear_fade(age, self.life_years, self.end_of_life_capacity_fraction)


@dataclass(frozen=True)
class PVSpec:
    life_years: int = 25
    end_of_life_capacity_fraction: float = 0.80

    def __post_init__(self):
        if not 0 < self.end_of_life_capacity_fraction <= 1 or self.life_years <= 0:
            raise ValueError("invalid PV lifetime parameters")

    def capacity_factor(self, age: int) -> float:
        return _linear_fade(age, self.life_years, self.end_of_life_capacity_fraction)


def _linear_fade(age: int, life: int, eol: float) -> float:
    # nominal at age 0, `eol` at age == life, retired once older than life
    if age < 0 or age > life:
        return 0.0
    return 1.0 - (1.0 - eol) * age / life


@dataclass(frozen=True)
class TariffSchedule:
    base_volumetric_rate: float = 0.29
    annual_escalation: float = 0.04
    fit_fraction: float = 0.25
    fit_eligibility_cap: float = 5.0
    fixed_daily_charge: float = 1.0
    base_year: int = BASE_YEAR

    def __post_init__(self):
        if min(self.base_volumetric_rate, self.fit_fraction, self.fit_eligibility_cap,
               self.fixed_daily_charge) < 0:
            raise ValueError("tariff parameters must be non-negative")

    def rate(self, year: int) -> float:
        return self.base_volumetric_rate * (1.0 + self.annual_escalation) ** (year - self.base_year)

    def fit_rate(self, year: int) -> float:
        return self.fit_fraction * self.rate(year)

    def fixed_charges(self) -> float:
        return 365.0 * self.fixed_daily_charge


# Raw curves before local scaling; 2019 values reproduce 1292 AUD/kWp and
# 1172 AUD/kWh once the 0.78 / 0.73 factors are applied.
_DEFAULT_PV_DECLINE = 0.035
_DEFAULT_BATTERY_DECLINE = 0.075


def _default_curve(start: float, decline: float) -> dict[int, float]:
    return {y: start * (1.0 - decline) ** (y - BASE_YEAR) for y in range(BASE_YEAR, FINAL_YEAR + 1)}


@dataclass(frozen=True)
class CostCurves:
    """Installed costs per year. ``pv_cost``/``battery_cost`` are the scaled values."""

    pv_cost: Mapping[int, float]
    battery_cost: Mapping[int, float]
    pv_scale: float = 0.78
    battery_scale: float = 0.73

    def __post_init__(self):
        for name, curve in (("pv_cost", self.pv_cost), ("battery_cost", self.battery_cost)):
            missing = [y for y in range(BASE_YEAR, FINAL_YEAR + 1) if y not in curve]
            if missing:
                raise ValueError(f"{name} lacks years {missing}")
            if min(curve.values()) <= 0:
                raise ValueError(f"{name} must be strictly positive")

    @classmethod
    def from_raw(cls, raw_pv: Mapping[int, float], raw_battery: Mapping[int, float],
                 pv_scale: float = 0.78, battery_scale: float = 0.73,
                 pv_multiplier: float = 1.0, battery_multiplier: float = 1.0) -> "CostCurves":
        """Apply the local scale factors (once) and any sensitivity multiplier."""
        return cls({int(y): v * pv_scale * pv_multiplier for y, v in raw_pv.items()},
                   {int(y): v * battery_scale * battery_multiplier for y, v in raw_battery.items()},
                   pv_scale, battery_scale)

    @classmethod
    def default(cls, pv_multiplier: float = 1.0, battery_multiplier: float = 1.0) -> "CostCurves":
        return cls.from_raw(_default_curve(1292.0 / 0.78, _DEFAULT_PV_DECLINE),
                            _default_curve(1172.0 / 0.73, _DEFAULT_BATTERY_DECLINE),
                            pv_multiplier=pv_multiplier, battery_multiplier=battery_multiplier)

    def pv(self, year: int) -> float:
        return self.pv_cost[_clamp_year(year, self.pv_cost)]

    def battery(self, year: int) -> float:
        return self.battery_cost[_clamp_year(year, self.battery_cost)]

    def capex(self, year: int, pv_kwp: float, battery_kwh: float) -> float:
        return self.pv(year) * pv_kwp + self.battery(year) * battery_kwh


def _clamp_year(year: int, curve: Mapping[int, float]) -> int:
    return min(max(year, min(curve)), max(curve))


@dataclass(frozen=True)
class EvaluationGrid:
    pv_step: float = 0.5
    pv_max: float = 10.0
    battery_step: float = 1.0
    battery_max: float = 18.0

    def __post_init__(self):
        for step, top in ((self.pv_step, self.pv_max), (self.battery_step, self.battery_max)):
            if step <= 0 or abs(top / step - round(top / step)) > 1e-9:
                raise ValueError("grid steps must be positive and divide the maxima")

    @property
    def pv_levels(self) -> np.ndarray:
        return np.arange(round(self.pv_max / self.pv_step) + 1) * self.pv_step

    @property
    def battery_levels(self) -> np.ndarray:
        return np.arange(round(self.battery_max / self.battery_step) + 1) * self.battery_step

    def points(self) -> np.ndarray:
        """All (ΔkWp, ΔkWh) pairs, PV-major, zero point first."""
        pv, bat = np.meshgrid(self.pv_levels, self.battery_levels, indexing="ij")
        return np.column_stack([pv.ravel(), bat.ravel()])


@dataclass(frozen=True)
class EconomicContext:
    tariff: TariffSchedule = field(default_factory=TariffSchedule)
    costs: CostCurves = field(default_factory=CostCurves.default)
    discount_rate: float = 0.05
    horizon_years: int = 10
    dpp_threshold: float = 5.0

    def __post_init__(self):
        if self.discount_rate <= 0:
            raise ValueError("discount_rate must be positive")
        if self.horizon_years < self.dpp_threshold:
            raise ValueError("horizon must cover the payback threshold")

    def with_fit(self, fit_fraction: float) -> "EconomicContext":
        return replace(self, tariff=replace(self.tariff, fit_fraction=fit_fraction))


@dataclass(frozen=True)
class HouseholdState:
    """Installed vintages as (install_year, nominal capacity) pairs."""

    pv_vintages: tuple[tuple[int, float], ...] = ()
    battery_vintages: tuple[tuple[int, float], ...] = ()

    def add(self, year: int, pv_kwp: float, battery_kwh: float) -> "HouseholdState":
        pv = self.pv_vintages + (((year, float(pv_kwp)),) if pv_kwp > 0 else ())
        bat = self.battery_vintages + (((year, float(battery_kwh)),) if battery_kwh > 0 else ())
        return HouseholdState(pv, bat)

    def usable_pv(self, year: int, pv: PVSpec) -> float:
        return sum(kw * pv.capacity_factor(year - y0) for y0, kw in self.pv_vintages)

    def usable_battery_kwh(self, year: int, bat: BatterySpec) -> float:
        return sum(kwh * bat.capacity_factor(year - y0) for y0, kwh in self.battery_vintages)

    def usable_battery_kw(self, year: int, bat: BatterySpec) -> float:
        return self.usable_battery_kwh(year, bat) / bat.energy_to_power_ratio

    def nominal_pv(self, year: int, pv: PVSpec) -> float:
        """Installed (alive) PV kWp; drives FiT eligibility and the investment cap."""
        return sum(kw for y0, kw in self.pv_vintages if 0 <= year - y0 <= pv.life_years)

    def nominal_battery(self, year: int, bat: BatterySpec) -> float:
        return sum(kwh for y0, kwh in self.battery_vintages if 0 <= year - y0 <= bat.life_years)


def degrade(state: HouseholdState, year: int, pv: PVSpec = PVSpec(),
            battery: BatterySpec = BatterySpec()) -> HouseholdState:
    """Retire vintages that are past their life in ``year``.

    Capacity fade itself is applied by the ``usable_*`` accessors, which take
    the evaluation year, so the nominal vintage record is kept intact.
    """
    return HouseholdState(
        tuple(v for v in state.pv_vintages if pv.capacity_factor(year - v[0]) > 0 or year < v[0]),
        tuple(v for v in state.battery_vintages if battery.capacity_factor(year - v[0]) > 0 or year < v[0]),
    )
