"""Run configuration: TOML schema, validation and fail-fast input loading.

Schema (all sections optional except ``[inputs]``; relative paths resolve
against the config file's directory)::

    [inputs]
    profiles = "profiles.csv"              # half-hourly <id>_demand / <id>_pv columns
    network_demand = "network_demand.csv"  # hourly MWh, one value column
    catalog = ""                           # technology CSV; empty = built-in catalog
    cost_curves = ""                       # year,pv_aud_per_kwp,battery_aud_per_kwh (unscaled)

    [inputs.availability]                  # profile key -> hourly CSV in [0, 1]
    wind = "wind_availability.csv"
    pv = "pv_availability.csv"

    [inputs.profile_columns]
    timestamp = "timestamp"
    demand_suffix = "_demand"
    pv_suffix = "_pv"

    [households]
    fit = [0.0, 0.25, 0.5]
    first_year = 2019
    final_year = 2030
    max_households = 0                     # 0 = all ingested households
    fixed_daily_charge = 1.0
    pv_cost_scale = 0.78
    battery_cost_scale = 0.73

    [fleet]
    n_households = 500000

    [sector]
    res_share = [0.39, 0.49, 0.59]         # values in (0, 1] or "endogenous"
    interest_rate = 0.04
    gross_demand_includes_household_pv = true
    backend = "highs"

    [sensitivity]                          # values other than the base add sweep cells
    pv_cost = [1.0]
    battery_cost = [1.0]
    fleet_sizes = [500000]

    [output]
    directory = "results"
"""
from __future__ import annotations

import csv
import hashlib
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..household import BASE_YEAR, FINAL_YEAR, CostCurves, TariffSchedule
from ..sector import ENDOGENOUS, CatalogError, Technology, default_catalog, read_catalog
from ..sector.solvers import BACKENDS
from ..timeseries import ParseError, ProfileSchema, ProfileSet, TimeSeries, Unit, ingest_profiles, read_series

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


_SCHEMA: dict[str, dict[str, type | tuple]] = {
    "inputs": {"profiles": str, "network_demand": str, "catalog": str, "cost_curves": str,
               "availability": dict, "profile_columns": dict},
    "households": {"fit": list, "first_year": int, "final_year": int, "max_households": int,
                   "fixed_daily_charge": (int, float), "pv_cost_scale": (int, float),
                   "battery_cost_scale": (int, float)},
    "fleet": {"n_households": int},
    "sector": {"res_share": list, "interest_rate": (int, float), "gross_demand_includes_household_pv": bool,
               "backend": str},
    "sensitivity": {"pv_cost": list, "battery_cost": list, "fleet_sizes": list},
    "output": {"directory": str},
}
_PROFILE_COLUMNS = {"timestamp": str, "demand_suffix": str, "pv_suffix": str}


@dataclass(frozen=True)
class RunConfig:
    base_dir: Path
    profiles: Path
    network_demand: Path
    availability: dict[str, Path]
    catalog: Path | None = None
    cost_curves: Path | None = None
    profile_columns: ProfileSchema = field(default_factory=ProfileSchema)
    fit_fractions: tuple[float, ...] = (0.0, 0.25, 0.5)
    first_year: int = BASE_YEAR
    final_year: int = FINAL_YEAR
    max_households: int = 0
    fixed_daily_charge: float = 1.0
    pv_cost_scale: float = 0.78
    battery_cost_scale: float = 0.73
    n_households: int = 500_000
    res_shares: tuple[float | str, ...] = (0.39, 0.49, 0.59)
    interest_rate: float = 0.04
    gross_demand_includes_household_pv: bool = True
    backend: str = "highs"
    pv_cost_multipliers: tuple[float, ...] = (1.0,)
    battery_cost_multipliers: tuple[float, ...] = (1.0,)
    fleet_sizes: tuple[int, ...] = (500_000,)
    output: Path = Path("results")

    def describe(self) -> dict[str, Any]:
        """JSON-friendly view with paths relative to the config directory."""

        def rel(p: Path | None) -> str:
            if p is None:
                return ""
            try:
                return p.relative_to(self.base_dir).as_posix()
            except ValueError:
                return p.as_posix()

        return {
            "inputs": {"profiles": rel(self.profiles), "network_demand": rel(self.network_demand),
                       "catalog": rel(self.catalog), "cost_curves": rel(self.cost_curves),
                       "availability": {k: rel(v) for k, v in sorted(self.availability.items())}},
            "households": {"fit": list(self.fit_fractions), "first_year": self.first_year,
                           "final_year": self.final_year, "max_households": self.max_households,
                           "fixed_daily_charge": self.fixed_daily_charge, "pv_cost_scale": self.pv_cost_scale,
                           "battery_cost_scale": self.battery_cost_scale},
            "fleet": {"n_households": self.n_households},
            "sector": {"res_share": list(self.res_shares), "interest_rate": self.interest_rate,
                       "gross_demand_includes_household_pv": self.gross_demand_includes_household_pv,
                       "backend": self.backend},
            "sensitivity": {"pv_cost": list(self.pv_cost_multipliers),
                            "battery_cost": list(self.battery_cost_multipliers),
                            "fleet_sizes": list(self.fleet_sizes)},
        }


def _check_types(raw: dict, schema: dict, where: str) -> None:
    for key, value in raw.items():
        if key not in schema:
            raise ConfigError(f"{where}: unknown key {key!r}")
        expected = schema[key]
        if isinstance(expected, dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where}.{key}: expected a table")
            continue
        if expected is int and isinstance(value, bool) or not isinstance(value, expected):
            raise ConfigError(f"{where}.{key}: expected {getattr(expected, '__name__', 'number')}, "
                              f"got {type(value).__name__}")


def _numbers(values: list, where: str, lo: float = 0.0, hi: float = float("inf"),
             lo_open: bool = False) -> tuple[float, ...]:
    out = []
    for v in values:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{where}: {v!r} is not a number")
        if v < lo or v > hi or (lo_open and v == lo):
            raise ConfigError(f"{where}: {v!r} out of range")
        out.append(float(v))
    if not out:
        raise ConfigError(f"{where}: must not be empty")
    if len(set(out)) != len(out):
        raise ConfigError(f"{where}: duplicate values")
    return tuple(out)


def parse_config(raw: dict, base_dir: Path) -> RunConfig:
    for section, body in raw.items():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        if not isinstance(body, dict):
            raise ConfigError(f"[{section}] must be a table")
        _check_types(body, _SCHEMA[section], section)
    inputs = raw.get("inputs")
    if not inputs:
        raise ConfigError("missing [inputs] section")
    for key in ("profiles", "network_demand"):
        if not inputs.get(key):
            raise ConfigError(f"inputs.{key} is required")

    def path(p: str) -> Path:
        q = Path(p)
        return q if q.is_absolute() else base_dir / q

    avail = inputs.get("availability", {})
    for k, v in avail.items():
        if not isinstance(v, str) or not v:
            raise ConfigError(f"inputs.availability.{k}: expected a file path")
    cols = inputs.get("profile_columns", {})
    _check_types(cols, _PROFILE_COLUMNS, "inputs.profile_columns")
    schema = ProfileSchema(**cols)

    hh = raw.get("households", {})
    sec = raw.get("sector", {})
    sens = raw.get("sensitivity", {})
    fleet = raw.get("fleet", {})
    n = fleet.get("n_households", 500_000)
    if n <= 0:
        raise ConfigError("fleet.n_households must be positive")

    res = []
    for v in sec.get("res_share", [0.39, 0.49, 0.59]):
        if v == ENDOGENOUS:
            res.append(ENDOGENOUS)
        else:
            res.append(_numbers([v], "sector.res_share", 0.0, 1.0, lo_open=True)[0])
    if not res or len(set(res)) != len(res):
        raise ConfigError("sector.res_share must be non-empty without duplicates")
    backend = sec.get("backend", "highs")
    if backend not in BACKENDS:
        raise ConfigError(f"sector.backend: unknown backend {backend!r}; choose from {sorted(BACKENDS)}")
    first, final = hh.get("first_year", BASE_YEAR), hh.get("final_year", FINAL_YEAR)
    if not BASE_YEAR <= first <= final <= FINAL_YEAR:
        raise ConfigError(f"households years must satisfy {BASE_YEAR} <= first_year <= final_year <= {FINAL_YEAR}")
    if hh.get("max_households", 0) < 0:
        raise ConfigError("households.max_households must be >= 0")
    sizes = sens.get("fleet_sizes", [n])
    for s in sizes:
        if isinstance(s, bool) or not isinstance(s, int) or s <= 0:
            raise ConfigError(f"sensitivity.fleet_sizes: {s!r} is not a positive integer")
    if len(set(sizes)) != len(sizes):
        raise ConfigError("sensitivity.fleet_sizes: duplicate values")

    return RunConfig(
        base_dir=base_dir,
        profiles=path(inputs["profiles"]),
        network_demand=path(inputs["network_demand"]),
        availability={k: path(v) for k, v in avail.items()},
        catalog=path(inputs["catalog"]) if inputs.get("catalog") else None,
        cost_curves=path(inputs["cost_curves"]) if inputs.get("cost_curves") else None,
        profile_columns=schema,
        fit_fractions=_numbers(hh.get("fit", [0.0, 0.25, 0.5]), "households.fit", 0.0, 1.0),
        first_year=first,
        final_year=final,
        max_households=hh.get("max_households", 0),
        fixed_daily_charge=float(_numbers([hh.get("fixed_daily_charge", 1.0)], "households.fixed_daily_charge")[0]),
        pv_cost_scale=_numbers([hh.get("pv_cost_scale", 0.78)], "households.pv_cost_scale", lo_open=True)[0],
        battery_cost_scale=_numbers([hh.get("battery_cost_scale", 0.73)], "households.battery_cost_scale",
                                    lo_open=True)[0],
        n_households=n,
        res_shares=tuple(res),
        interest_rate=_numbers([sec.get("interest_rate", 0.04)], "sector.interest_rate", lo_open=True)[0],
        gross_demand_includes_household_pv=sec.get("gross_demand_includes_household_pv", True),
        backend=backend,
        pv_cost_multipliers=_numbers(sens.get("pv_cost", [1.0]), "sensitivity.pv_cost", lo_open=True),
        battery_cost_multipliers=_numbers(sens.get("battery_cost", [1.0]), "sensitivity.battery_cost", lo_open=True),
        fleet_sizes=tuple(sizes),
        output=path(raw.get("output", {}).get("directory", "results")),
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such file") from None
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}") from None
    try:
        return parse_config(raw, path.resolve().parent)
    except ConfigError as e:
        raise ConfigError(f"{path}: {e}") from None


def read_cost_curves(path: str | Path) -> tuple[dict[int, float], dict[int, float]]:
    """Unscaled yearly PV (AUD/kWp) and battery (AUD/kWh) costs."""
    pv, bat = {}, {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        need = {"year", "pv_aud_per_kwp", "battery_aud_per_kwh"}
        if not need <= set(reader.fieldnames or ()):
            raise ParseError(f"columns {sorted(need)} required", 1, str(path))
        for row in reader:
            try:
                y = int(row["year"])
                pv[y] = float(row["pv_aud_per_kwp"])
                bat[y] = float(row["battery_aud_per_kwh"])
            except (TypeError, ValueError):
                raise ParseError("malformed row", reader.line_num, str(path)) from None
    return pv, bat


def sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class Inputs:
    """Everything a run needs, parsed and validated up front."""

    profiles: list[ProfileSet]
    rejected: dict[str, str]
    network: TimeSeries
    availability: dict[str, np.ndarray]
    catalog: list[Technology]
    raw_costs: tuple[dict[int, float], dict[int, float]] | None
    digests: dict[str, str]

    def cost_curves(self, cfg: RunConfig, pv_multiplier: float = 1.0, battery_multiplier: float = 1.0) -> CostCurves:
        if self.raw_costs is None:
            base = CostCurves.default(pv_multiplier, battery_multiplier)
            if (cfg.pv_cost_scale, cfg.battery_cost_scale) == (base.pv_scale, base.battery_scale):
                return base
            raise ConfigError("custom cost scale factors need an explicit inputs.cost_curves file")
        return CostCurves.from_raw(*self.raw_costs, cfg.pv_cost_scale, cfg.battery_cost_scale,
                                   pv_multiplier, battery_multiplier)

    def tariff(self, cfg: RunConfig, fit: float) -> TariffSchedule:
        return TariffSchedule(fit_fraction=fit, fixed_daily_charge=cfg.fixed_daily_charge)


def load_inputs(cfg: RunConfig) -> Inputs:
    """Parse every referenced file; any problem raises :class:`ConfigError`."""
    files = {"profiles": cfg.profiles, "network_demand": cfg.network_demand}
    files.update({f"availability.{k}": v for k, v in cfg.availability.items()})
    if cfg.catalog:
        files["catalog"] = cfg.catalog
    if cfg.cost_curves:
        files["cost_curves"] = cfg.cost_curves
    for name, p in files.items():
        if not p.is_file():
            raise ConfigError(f"inputs.{name}: {p} does not exist")
    try:
        report = ingest_profiles(cfg.profiles, cfg.profile_columns)
        network = read_series(cfg.network_demand, step_minutes=60, unit=Unit.MWH)
        availability = {k: read_series(p, step_minutes=60, unit=Unit.AVAILABILITY).values
                        for k, p in cfg.availability.items()}
        catalog = read_catalog(cfg.catalog) if cfg.catalog else default_catalog()
        raw_costs = read_cost_curves(cfg.cost_curves) if cfg.cost_curves else None
    except (ParseError, CatalogError, ValueError) as e:
        raise ConfigError(str(e)) from None
    profiles = report.profiles
    if cfg.max_households:
        profiles = profiles[: cfg.max_households]
    if not profiles:
        raise ConfigError("no complete household profiles")
    for p in profiles:
        if p.demand.step_minutes != 30:
            raise ConfigError("household profiles must be half-hourly")
    for t in catalog:
        if t.availability and t.availability not in availability:
            raise ConfigError(f"catalog technology {t.name!r} needs availability profile {t.availability!r}")
    inputs = Inputs(profiles, dict(report.rejected), network, availability, catalog, raw_costs,
                    {name: sha256(p) for name, p in sorted(files.items())})
    try:
        for pm in cfg.pv_cost_multipliers:
            for bm in cfg.battery_cost_multipliers:
                inputs.cost_curves(cfg, pm, bm)
    except ValueError as e:
        raise ConfigError(f"cost curves: {e}") from None
    return inputs
