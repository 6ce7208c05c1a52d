"""Reproduction mode: published-result checks on a full matrix run, and converters for public data.

The checks only make sense on the real household and network data; on the
bundled synthetic dataset most of them are expected to fail.
"""
from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path
from typing import Iterable

import numpy as np

from ..analytics import COMMERCIAL, NON_PROSUMAGE, PROSUMAGE, rldc_decomposition, segment_prices
from ..timeseries import STEPS_PER_YEAR, ParseError, year_timestamps
from .matrix import Cell, HouseholdKey, MatrixResult

BASE_YEAR_TWH = 18.1


@dataclass(frozen=True)
class Claim:
    id: str
    description: str
    ok: bool
    detail: str = ""


def _within(value: float, target: float, tol: float) -> bool:
    return math.isfinite(value) and abs(value - target) <= tol


def _missing(cid: str, description: str, what: str) -> Claim:
    return Claim(cid, description, False, f"not evaluable: {what} missing from the run")


def _base_stage(result: MatrixResult, fit: float):
    return result.households.get(HouseholdKey(fit))


def _cell(result: MatrixResult, fit: float | None, res, n: int | None = None) -> Cell:
    if fit is None:
        return Cell(res)
    return Cell(res, 1.0, 1.0, fit, n or result.plan.cells[0].n_households)


def claim_fit50_endpoint(result: MatrixResult) -> Claim:
    desc = "FiT 50%: every household ends at 5.0 kWp and 0 kWh"
    stage = _base_stage(result, 0.5)
    if stage is None:
        return _missing("9", desc, "FiT 0.5 household stage")
    off = [h.household_id for h in stage.households if h.installed_pv != 5.0 or h.installed_battery != 0.0]
    return Claim("9", desc, not off, f"{len(off)} of {len(stage.households)} households differ"
                 + (f" (e.g. {off[0]})" if off else ""))


def claim_fleet_means(result: MatrixResult) -> list[Claim]:
    out = []
    for fit, pv, bat in ((0.25, 5.3, 5.9), (0.0, 4.7, 8.7)):
        desc = f"FiT {fit:g}: mean {pv} +/- 0.5 kWp and {bat} +/- 1.5 kWh"
        stage = _base_stage(result, fit)
        if stage is None:
            out.append(_missing("10", desc, f"FiT {fit:g} household stage"))
            continue
        mpv = float(np.mean([h.installed_pv for h in stage.households]))
        mbat = float(np.mean([h.installed_battery for h in stage.households]))
        out.append(Claim("10", desc, _within(mpv, pv, 0.5) and _within(mbat, bat, 1.5),
                         f"mean {mpv:.2f} kWp, {mbat:.2f} kWh"))
    return out


def claim_residuals(result: MatrixResult) -> list[Claim]:
    out = []
    refs = [c for c in result.plan.references if c.id in result.outcomes]
    desc = f"reference residual demand {BASE_YEAR_TWH} TWh +/- 2%"
    if not refs:
        return [_missing("11", desc, "reference cell")]
    twh = result.outcomes[refs[0].id].residual.annual_twh()
    out.append(Claim("11", desc, abs(twh / BASE_YEAR_TWH - 1) <= 0.02, f"{twh:.3f} TWh"))
    desc = "residual ranking FiT 25% < FiT 50% < FiT 0% < reference"
    res = refs[0].res
    cells = [_cell(result, f, res) for f in (0.25, 0.5, 0.0)]
    if any(c.id not in result.outcomes for c in cells):
        return out + [_missing("11", desc, "a base FiT cell")]
    vals = [result.outcomes[c.id].residual.annual_twh() for c in cells] + [twh]
    out.append(Claim("11", desc, all(a < b for a, b in zip(vals, vals[1:])),
                     " < ".join(f"{v:.3f}" for v in vals) + " TWh"))
    return out


def claim_reference_capacities(result: MatrixResult) -> Claim:
    desc = "reference 39%: utility PV 1.16 GW, wind 1.61 GW, battery 0.21 GW / 0.62 GWh, each +/- 10%"
    cell = Cell(0.39)
    if cell.id not in result.outcomes:
        return _missing("12", desc, "39% reference")
    sol = result.outcomes[cell.id].solution
    got = {"pv": sol.capacities.get("pv", 0.0) / 1e3, "wind": sol.capacities.get("wind", 0.0) / 1e3,
           "li-ion": sol.capacities.get("li-ion", 0.0) / 1e3,
           "li-ion energy": sol.energy_capacities.get("li-ion", 0.0) / 1e3}
    want = {"pv": 1.16, "wind": 1.61, "li-ion": 0.21, "li-ion energy": 0.62}
    ok = all(abs(got[k] / want[k] - 1) <= 0.10 for k in want)
    return Claim("12", desc, ok, ", ".join(f"{k} {got[k]:.3f}" for k in want))


def claim_substitution(result: MatrixResult) -> list[Claim]:
    out = []
    for res, pv, wind in ((0.39, 0.38, 0.20), (0.59, 0.70, 0.08)):
        desc = f"FiT 50% at {res:.0%}: substitution {pv} utility PV and {wind} wind per MW household PV, +/- 0.1"
        cell = _cell(result, 0.5, res)
        if cell.id not in result.deltas:
            out.append(_missing("13", desc, f"FiT 0.5 / {res} cell"))
            continue
        sub = result.deltas[cell.id].substitution_per_pv
        gpv, gwind = sub.get("pv", math.nan), sub.get("wind", math.nan)
        out.append(Claim("13", desc, _within(gpv, pv, 0.1) and _within(gwind, wind, 0.1),
                         f"PV {gpv:.3f}, wind {gwind:.3f}"))
    return out


def claim_directions(result: MatrixResult) -> list[Claim]:
    pv_down, cost_up, coal_up = [], [], []
    n_battery = 0
    for cell in result.plan.cells:
        if cell.id not in result.deltas:
            continue
        d = result.deltas[cell.id]
        if not d.capacity_mw.get("pv", 0.0) < 0:
            pv_down.append(cell.id)
        if not d.system_cost > 0:
            cost_up.append(cell.id)
        if cell.res_share is not None and result.outcomes[cell.id].household_capacity.battery_mwh > 0:
            n_battery += 1
            ref_gen = result.outcomes[cell.reference.id].solution.annual_generation().get("coal", 0.0) / 1e3
            if d.generation_gwh.get("coal", 0.0) < -1e-6 * max(ref_gen, 1.0):
                coal_up.append(cell.id)
    n = len(result.deltas)
    out = [
        Claim("14", "utility PV capacity decreases in every prosumage cell", n > 0 and not pv_down,
              f"{len(pv_down)} of {n} cells do not" if n else "no prosumage cells"),
        Claim("14", "system cost increases in every prosumage cell", n > 0 and not cost_up,
              f"{len(cost_up)} of {n} cells do not" if n else "no prosumage cells"),
        Claim("14", "coal generation weakly increases in cells with household batteries", n_battery > 0 and not coal_up,
              f"{len(coal_up)} of {n_battery} battery cells decrease" if n_battery else "no battery cells"),
    ]
    desc = "endogenous reference realises a renewable share of 59% +/- 3 pp"
    endo = Cell("endogenous")
    if endo.id not in result.outcomes:
        out.append(_missing("14", desc, "endogenous reference"))
    else:
        share = result.outcomes[endo.id].solution.renewable_share()
        out.append(Claim("14", desc, _within(share, 0.59, 0.03), f"{share:.4f}"))
    return out


def claim_system_costs(result: MatrixResult) -> list[Claim]:
    out = []
    for fit, lo, hi in ((0.0, 23.0, 23.0), (0.5, 6.0, 7.0)):
        desc = f"FiT {fit:g}: system cost increase {lo:g}-{hi:g}% +/- 5 pp at every fixed RES share"
        cells = [c for c in result.plan.cells if c.fit == fit and c.pv_mult == 1.0 and c.battery_mult == 1.0
                 and c.res_share is not None and c.n_households == result.plan.cells[0].n_households]
        got = {c.res: result.deltas[c.id].system_cost_pct for c in cells if c.id in result.deltas}
        if not got:
            out.append(_missing("15", desc, f"FiT {fit:g} cells"))
            continue
        ok = all(lo - 5 <= v <= hi + 5 for v in got.values())
        out.append(Claim("15", desc, ok, ", ".join(f"{r:g}: {v:.2f}%" for r, v in sorted(got.items()))))
    return out


def claim_analytics(result: MatrixResult) -> list[Claim]:
    """Qualitative analytics findings (not part of the numbered acceptance list)."""
    out = []
    cell = _cell(result, 0.25, 0.49)
    if cell.id in result.outcomes and cell.reference.id in result.outcomes:
        pro, ref = result.outcomes[cell.id], result.outcomes[cell.reference.id]
        curves = rldc_decomposition(pro, ref)
        spread = {k: float(v.max() - v.min()) for k, v in curves.items()}
        out.append(Claim("a", "FiT 25% at 49%: prosumage residual load flatter than reference",
                         spread["prosumage"] < spread["reference"],
                         f"spread {spread['prosumage']:.0f} vs {spread['reference']:.0f} MWh"))
        now = {p.name: p.price for p in segment_prices(pro)}
        before = {p.name: p.price for p in segment_prices(ref)}
        d = {k: now[k] - before[k] for k in now}
        ok = d[NON_PROSUMAGE] < d[PROSUMAGE] and d[COMMERCIAL] > 0
        out.append(Claim("a", "FiT 25% at 49%: non-prosumage price falls more than prosumage price, C&I rises",
                         ok, ", ".join(f"{k} {v:+.2f}" for k, v in d.items())))
    else:
        out.append(_missing("a", "FiT 25% at 49% analytics", "FiT 0.25 / 0.49 cell or reference"))
    worse = [c.id for c in result.plan.cells
             if c.id in result.deltas and c.res_share is not None
             and result.outcomes[c.id].household_capacity.battery_mwh > 0 and result.deltas[c.id].co2_intensity < 0]
    out.append(Claim("a", "CO2 intensity does not fall in cells with household batteries", not worse,
                     f"{len(worse)} cells fall"))
    return out


def evaluate_claims(result: MatrixResult) -> list[Claim]:
    return [claim_fit50_endpoint(result), *claim_fleet_means(result), *claim_residuals(result),
            claim_reference_capacities(result), *claim_substitution(result), *claim_directions(result),
            *claim_system_costs(result), *claim_analytics(result)]


def write_claims(path: str | Path, claims: Iterable[Claim]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["criterion", "status", "description", "detail"])
        for c in claims:
            w.writerow([c.id, "pass" if c.ok else "fail", c.description, c.detail])


# --------------------------------------------------------------------------- converters


def _grid_index(month: int, day: int, minutes: int, step: int, year: int) -> int | None:
    if month == 2 and day == 29:
        return None
    start = datetime(year, 1, 1)
    t = datetime(year, month, day) + timedelta(minutes=minutes)
    return int((t - start).total_seconds() // 60) // step


def convert_ausgrid(sources: Iterable[str | Path], out: str | Path, year: int = 2030) -> dict[str, str]:
    """Rewrite Ausgrid solar-home half-hour files as a wide profile CSV.

    Each source row holds one customer, one day and one consumption category
    (GC general, CL controlled load, GG gross generation) over 48 half-hour
    columns labelled by interval end. Demand is GC + CL; the PV column is GG
    divided by the customer's generator capacity, i.e. a per-kWp yield.
    Dates are mapped onto ``year`` by month and day and Feb 29 is dropped.
    Missing intervals are left blank so ingestion rejects that household.
    Returns the customers skipped here and why.
    """
    n = STEPS_PER_YEAR[30]
    demand: dict[str, np.ndarray] = defaultdict(lambda: np.full(n, np.nan))
    pv: dict[str, np.ndarray] = defaultdict(lambda: np.full(n, np.nan))
    controlled: dict[str, np.ndarray] = defaultdict(lambda: np.zeros(n))
    capacity: dict[str, float] = {}
    for src in sources:
        with open(src, newline="", encoding="utf-8-sig") as fh:
            reader = csv.reader(fh)
            header = None
            for row in reader:
                if header is None:
                    if row and row[0].strip() == "Customer":
                        header = [h.strip() for h in row]
                        i_cap, i_cat, i_date = (header.index("Generator Capacity"),
                                                header.index("Consumption Category"), header.index("date"))
                        first = i_date + 1
                    continue
                if not row or not row[0].strip():
                    continue
                try:
                    cid = f"c{int(row[0])}"
                    day = datetime.strptime(row[i_date].strip(), "%d/%m/%Y")
                    values = [float(v) for v in row[first:first + 48]]
                    capacity[cid] = float(row[i_cap])
                except (ValueError, IndexError):
                    raise ParseError("malformed Ausgrid row", reader.line_num, str(src)) from None
                start = _grid_index(day.month, day.day, 0, 30, year)
                if start is None:
                    continue
                cat = row[i_cat].strip()
                target = {"GC": demand, "CL": controlled, "GG": pv}.get(cat)
                if target is None:
                    raise ParseError(f"unknown consumption category {cat!r}", reader.line_num, str(src))
                target[cid][start:start + 48] = values
            if header is None:
                raise ParseError("no 'Customer' header row found", 1, str(src))
    skipped = {}
    ids = []
    for cid in sorted(demand, key=lambda c: int(c[1:])):
        if capacity.get(cid, 0.0) <= 0:
            skipped[cid] = "non-positive generator capacity"
        elif cid not in pv:
            skipped[cid] = "no generation rows"
        else:
            ids.append(cid)
    header = ["timestamp"]
    cols = []
    for cid in ids:
        header += [f"{cid}_demand", f"{cid}_pv"]
        cols += [demand[cid] + controlled[cid], pv[cid] / capacity[cid]]
    _write_with_blanks(out, header, year_timestamps(30, year), cols)
    return skipped


def convert_interval_demand(source: str | Path, out: str | Path, timestamp: str, column: str,
                            unit: str = "MW", fmt: str = "%Y-%m-%d %H:%M:%S", interval_minutes: int = 30,
                            stamp_at_end: bool = False, year: int = 2030) -> None:
    """Aggregate an interval demand export to hourly MWh on the model-year grid.

    ``unit`` is "MW" (average power per interval) or "MWh" (energy per
    interval). Dates map onto ``year`` by month and day; Feb 29 is dropped.
    """
    if unit not in ("MW", "MWh"):
        raise ValueError("unit must be 'MW' or 'MWh'")
    if 60 % interval_minutes:
        raise ValueError("interval must divide an hour")
    hourly = np.zeros(STEPS_PER_YEAR[60])
    seen = np.zeros(STEPS_PER_YEAR[60], dtype=int)
    factor = interval_minutes / 60 if unit == "MW" else 1.0
    with open(source, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        if not {timestamp, column} <= set(reader.fieldnames or ()):
            raise ParseError(f"columns {timestamp!r} and {column!r} required", 1, str(source))
        for row in reader:
            try:
                t = datetime.strptime(row[timestamp].strip(), fmt)
                v = float(row[column])
            except ValueError:
                raise ParseError("malformed row", reader.line_num, str(source)) from None
            if stamp_at_end:
                t -= timedelta(minutes=interval_minutes)
            i = _grid_index(t.month, t.day, t.hour * 60 + t.minute, 60, year)
            if i is None:
                continue
            hourly[i] += v * factor
            seen[i] += 1
    per_hour = 60 // interval_minutes
    if np.any(seen != per_hour):
        bad = int(np.count_nonzero(seen != per_hour))
        raise ParseError(f"{bad} hours do not have exactly {per_hour} intervals", None, str(source))
    _write_with_blanks(out, ["timestamp", "MWh"], year_timestamps(60, year), [hourly])


def _write_with_blanks(path, header, stamps, cols) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i, s in enumerate(stamps):
            w.writerow([s, *("" if math.isnan(c[i]) else repr(float(c[i])) for c in cols)])
