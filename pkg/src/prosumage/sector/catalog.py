"""Utility-scale technology catalog and annuity arithmetic."""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Iterable

DISPATCHABLE = "dispatchable"
VARIABLE_RENEWABLE = "variable-renewable"
STORAGE = "storage"
KINDS = (DISPATCHABLE, VARIABLE_RENEWABLE, STORAGE)


class CatalogError(ValueError):
    pass


def annuitize(overnight: float, lifetime: float, rate: float) -> float:
    """Constant yearly payment repaying ``overnight`` over ``lifetime`` years at ``rate``."""
    if lifetime <= 0:
        raise ValueError("lifetime must be positive")
    if rate <= 0:
        raise ValueError("rate must be positive")
    return overnight * rate / (1.0 - (1.0 + rate) ** (-lifetime))


@dataclass(frozen=True)
class Technology:
    name: str
    kind: str
    overnight_cost_power: float = 0.0  # AUD/MW
    overnight_cost_energy: float = 0.0  # AUD/MWh, storage only
    fixed_om: float = 0.0  # AUD/MW/yr
    variable_om: float = 0.0  # AUD/MWh
    fuel_cost: float = 0.0  # AUD/MWh_th
    efficiency: float = 1.0  # thermal, or round-trip for storage
    lifetime: float = 25.0
    capacity_lower_bound: float = 0.0  # MW
    emission_factor: float = 0.0  # tCO2/MWh_th
    availability: str = ""  # profile key, variable renewables only
    renewable: bool = False
    cost_group: str = ""  # "pv" / "battery" for cost sensitivities

    def __post_init__(self):
        if self.kind not in KINDS:
            raise CatalogError(f"{self.name}: unknown kind {self.kind!r}")
        for f in ("overnight_cost_power", "overnight_cost_energy", "fixed_om", "variable_om",
                  "fuel_cost", "capacity_lower_bound", "emission_factor"):
            v = getattr(self, f)
            if not math.isfinite(v) or v < 0:
                raise CatalogError(f"{self.name}: {f} must be a non-negative number, got {v}")
        if not 0 < self.efficiency <= 1:
            raise CatalogError(f"{self.name}: efficiency must lie in (0, 1]")
        if self.lifetime <= 0:
            raise CatalogError(f"{self.name}: lifetime must be positive")
        if self.kind == VARIABLE_RENEWABLE and not self.availability:
            raise CatalogError(f"{self.name}: variable renewables need an availability profile")

    @property
    def is_storage(self) -> bool:
        return self.kind == STORAGE

    @property
    def one_way_efficiency(self) -> float:
        return math.sqrt(self.efficiency)

    def annual_power_cost(self, rate: float) -> float:
        """Annuity plus fixed O&M per MW of (power) capacity."""
        return annuitize(self.overnight_cost_power, self.lifetime, rate) + self.fixed_om

    def annual_energy_cost(self, rate: float) -> float:
        return annuitize(self.overnight_cost_energy, self.lifetime, rate) if self.is_storage else 0.0

    def marginal_cost(self) -> float:
        """Variable cost per MWh of output (fuel burn at the thermal efficiency)."""
        if self.is_storage or self.fuel_cost == 0:
            return self.variable_om
        return self.variable_om + self.fuel_cost / self.efficiency


# Emission factors are reporting-only defaults (tCO2/MWh_th).
DEFAULT_CATALOG = (
    Technology("coal", DISPATCHABLE, 3_195_000, 0, 53_200, 4.2, 12.06, 0.40, 25, 0, 0.34),
    Technology("ccgt", DISPATCHABLE, 1_254_000, 0, 10_500, 7.4, 31.68, 0.48, 25, 0, 0.20),
    Technology("ocgt", DISPATCHABLE, 877_000, 0, 4_200, 10.5, 31.68, 0.31, 25, 0, 0.20),
    Technology("bio", DISPATCHABLE, 12_432_000, 0, 131_600, 8.4, 4.5, 0.23, 25, 0, 0.0, renewable=True),
    Technology("wind", VARIABLE_RENEWABLE, 1_874_000, 0, 36_000, 2.7, 0, 1.0, 25, 419,
               availability="wind", renewable=True),
    Technology("pv", VARIABLE_RENEWABLE, 817_000, 0, 14_400, 0.0, 0, 1.0, 25, 202,
               availability="pv", renewable=True, cost_group="pv"),
    Technology("li-ion", STORAGE, 115_848, 173_773, 2_027, 0.5, 0, 0.92, 15, 0, cost_group="battery"),
    Technology("hydrogen", STORAGE, 2_384_615, 308, 16_694, 0.5, 0, 0.419, 22.5, 0),
)


def default_catalog() -> list[Technology]:
    return list(DEFAULT_CATALOG)


def scale_costs(catalog: Iterable[Technology], pv_multiplier: float = 1.0,
                battery_multiplier: float = 1.0) -> list[Technology]:
    """Apply PV/battery investment-cost sensitivities to the matching cost groups."""
    out = []
    for t in catalog:
        m = {"pv": pv_multiplier, "battery": battery_multiplier}.get(t.cost_group, 1.0)
        if m != 1.0:
            t = replace(t, overnight_cost_power=t.overnight_cost_power * m,
                        overnight_cost_energy=t.overnight_cost_energy * m)
        out.append(t)
    return out


_FIELDS = [f.name for f in fields(Technology)]


def write_catalog(path: str | Path, catalog: Iterable[Technology]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=_FIELDS, lineterminator="\n")
        w.writeheader()
        for t in catalog:
            row = asdict(t)
            row["renewable"] = "true" if t.renewable else "false"
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def read_catalog(path: str | Path) -> list[Technology]:
    """Read a catalog CSV (one row per technology, Technology field names as header)."""
    techs = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = {"name", "kind"} - set(reader.fieldnames or ())
        if missing:
            raise CatalogError(f"{path}: missing columns {sorted(missing)}")
        unknown = set(reader.fieldnames) - set(_FIELDS)
        if unknown:
            raise CatalogError(f"{path}: unknown columns {sorted(unknown)}")
        for row in reader:
            kw = {}
            for k, v in row.items():
                v = (v or "").strip()
                if k in ("name", "kind", "availability", "cost_group"):
                    kw[k] = v
                elif k == "renewable":
                    kw[k] = v.lower() in ("1", "true", "yes")
                elif v != "":
                    try:
                        kw[k] = float(v)
                    except ValueError:
                        raise CatalogError(f"{path}:{reader.line_num}: {k}={v!r} is not a number") from None
            try:
                techs.append(Technology(**kw))
            except CatalogError as e:
                raise CatalogError(f"{path}:{reader.line_num}: {e}") from None
    names = [t.name for t in techs]
    if len(set(names)) != len(names):
        raise CatalogError(f"{path}: duplicate technology names")
    return techs
