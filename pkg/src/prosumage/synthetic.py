"""Deterministic synthetic inputs: household profiles, network demand and availability.

The generator stands in for the metered household data and the system
operator's demand and wind series, which are not redistributable. Shapes are
plausible for a southern-hemisphere, mid-latitude, islanded grid: evening-peaked
residential load, daytime-heavy commercial load, a sea-breeze wind pattern.
Everything is derived from one seed, so repeated calls return identical arrays.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .timeseries import (HOURS_PER_YEAR, ProfileSet, TimeSeries, Unit, resample_to_hourly,
                         write_profiles, write_series)

LATITUDE_DEG = -32.0
NETWORK_TWH = 18.1
N_RESIDENTIAL = 1_000_000


def _solar_shape(step_minutes: int, rng: np.random.Generator) -> np.ndarray:
    """Per-kWp AC output in kW at mid-step times, with day-to-day cloudiness."""
    steps_per_day = 24 * 60 // step_minutes
    n = 365 * steps_per_day
    t = (np.arange(n) + 0.5) * step_minutes / 60.0  # hours since Jan 1
    day = np.floor(t / 24.0)
    hour = t % 24.0
    decl = np.deg2rad(23.45) * np.sin(2 * np.pi * (284 + day + 1) / 365.0)
    lat = np.deg2rad(LATITUDE_DEG)
    omega = np.deg2rad(15.0 * (hour - 12.0))
    sin_el = np.sin(lat) * np.sin(decl) + np.cos(lat) * np.cos(decl) * np.cos(omega)
    clear = np.clip(sin_el, 0.0, None) ** 1.15 * 0.82
    # daily clearness index, persistent across days
    k = np.empty(365)
    k[0] = 0.8
    shocks = rng.normal(0.0, 0.18, 365)
    for d in range(1, 365):
        k[d] = 0.55 * k[d - 1] + 0.45 * 0.78 + shocks[d]
    k = np.clip(k, 0.15, 1.0)
    return clear * k[day.astype(int)]


def _household_demand(step_minutes: int, rng: np.random.Generator, annual_kwh: float) -> np.ndarray:
    steps_per_day = 24 * 60 // step_minutes
    n = 365 * steps_per_day
    t = (np.arange(n) + 0.5) * step_minutes / 60.0
    day = np.floor(t / 24.0)
    hour = t % 24.0
    morning = 0.35 * np.exp(-0.5 * ((hour - rng.uniform(6.5, 8.0)) / 1.0) ** 2)
    evening = 0.9 * np.exp(-0.5 * ((hour - rng.uniform(18.0, 19.5)) / 1.8) ** 2)
    daytime = rng.uniform(0.05, 0.25) * np.exp(-0.5 * ((hour - 13.0) / 3.0) ** 2)
    base = 0.28
    # summer (Dec-Feb) cooling and winter (Jun-Aug) heating bumps
    season = 1.0 + 0.25 * np.cos(2 * np.pi * (day - 15) / 365.0) ** 2
    shape = (base + morning + evening + daytime) * season
    noise = rng.lognormal(0.0, 0.35, n)
    kw = shape * noise
    kwh = kw * step_minutes / 60.0
    return kwh * annual_kwh / kwh.sum()


def household_profiles(n: int = 20, seed: int = 2019, step_minutes: int = 30,
                       start_year: int = 2030) -> list[ProfileSet]:
    rng = np.random.default_rng(seed)
    solar = _solar_shape(step_minutes, np.random.default_rng(seed + 1))
    profiles = []
    for i in range(n):
        annual = rng.uniform(3500.0, 9000.0)
        demand = _household_demand(step_minutes, rng, annual)
        orientation = rng.uniform(0.85, 1.05)
        pv_kwh = solar * orientation * step_minutes / 60.0
        profiles.append(ProfileSet(
            f"hh{i:03d}",
            TimeSeries(np.round(demand, 6), step_minutes, Unit.KWH, start_year),
            TimeSeries(np.round(pv_kwh, 6), step_minutes, Unit.KWH, start_year),
        ))
    return profiles


def mean_hourly_yield(profiles: list[ProfileSet]) -> TimeSeries:
    """Average per-kWp hourly yield of the cohort, usable as utility PV availability."""
    hourly = np.mean([resample_to_hourly(p.pv_yield).values for p in profiles], axis=0)
    return TimeSeries(np.clip(hourly, 0.0, 1.0), 60, Unit.AVAILABILITY, profiles[0].pv_yield.start_year)


def wind_availability(seed: int = 7, start_year: int = 2030) -> TimeSeries:
    rng = np.random.default_rng(seed)
    h = np.arange(HOURS_PER_YEAR)
    x = np.empty(HOURS_PER_YEAR)
    x[0] = 0.0
    eps = rng.normal(0.0, 0.22, HOURS_PER_YEAR)
    for i in range(1, HOURS_PER_YEAR):
        x[i] = 0.96 * x[i - 1] + eps[i]
    hour = h % 24
    sea_breeze = 0.12 * np.exp(-0.5 * ((hour - 16.0) / 3.0) ** 2)
    winter = 0.06 * np.cos(2 * np.pi * (h / 24.0 - 180.0) / 365.0)
    cf = 1.0 / (1.0 + np.exp(-(x * 0.9 - 0.45))) * 0.85 + sea_breeze + winter
    return TimeSeries(np.clip(cf, 0.0, 1.0), 60, Unit.AVAILABILITY, start_year)


def network_demand(profiles: list[ProfileSet], seed: int = 11, annual_twh: float = NETWORK_TWH,
                   n_residential: int = N_RESIDENTIAL, start_year: int = 2030) -> TimeSeries:
    """Hourly operational demand (MWh) before any prosumage: residential + C&I."""
    rng = np.random.default_rng(seed)
    resid = np.mean([resample_to_hourly(p.demand).values for p in profiles], axis=0)
    resid_mwh = resid * n_residential / 1000.0
    h = np.arange(HOURS_PER_YEAR)
    hour = h % 24
    weekday = ((h // 24) % 7) < 5
    day_shape = 0.75 + 0.35 * np.exp(-0.5 * ((hour - 12.5) / 4.0) ** 2)
    ci = day_shape * np.where(weekday, 1.0, 0.85)
    ci *= 1.0 + 0.12 * np.cos(2 * np.pi * (h / 24.0 - 20.0) / 365.0) ** 2
    ci *= rng.lognormal(0.0, 0.03, HOURS_PER_YEAR)
    target = annual_twh * 1e6
    ci *= (target - resid_mwh.sum()) / ci.sum()
    return TimeSeries(resid_mwh + ci, 60, Unit.MWH, start_year)


@dataclass
class SyntheticDataset:
    profiles: list[ProfileSet]
    network_demand: TimeSeries
    wind: TimeSeries
    pv: TimeSeries


def generate(n_households: int = 20, seed: int = 2019) -> SyntheticDataset:
    profiles = household_profiles(n_households, seed)
    return SyntheticDataset(profiles, network_demand(profiles), wind_availability(), mean_hourly_yield(profiles))


def write_dataset(directory: str | Path, n_households: int = 20, seed: int = 2019) -> dict[str, Path]:
    """Materialise the dataset as the CSV files a run config points at."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    ds = generate(n_households, seed)
    paths = {
        "profiles": d / "household_profiles.csv",
        "network_demand": d / "network_demand.csv",
        "wind_availability": d / "wind_availability.csv",
        "pv_availability": d / "pv_availability.csv",
    }
    write_profiles(paths["profiles"], ds.profiles)
    write_series(paths["network_demand"], ds.network_demand, "MWh")
    write_series(paths["wind_availability"], ds.wind, "availability")
    write_series(paths["pv_availability"], ds.pv, "availability")
    return paths
