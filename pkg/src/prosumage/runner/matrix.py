"""Scenario matrix: plan, household stage, residual construction, sector solves, analytics.

Output layout under the run directory::

    manifest.json
    summary.csv
    households/<key>/   decisions.csv, installed.csv, net_grid.csv, representative.csv, stage.json
    cells/<id>/         cell.json, residual.csv, capacities.csv, dispatch.csv, *.npy, objective.json
    analysis/<id>/      delta.csv, rldc.csv, segments.csv

Every directory is written to a temporary sibling and renamed into place, so
an interrupted run never leaves a half-written stage behind. A rerun with the
same configuration reuses completed stages whose input digest matches.
"""
from __future__ import annotations

import contextlib
import csv
import hashlib
import json
import logging
import math
import multiprocessing
import os
import shutil
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator

import numpy as np

from .. import analytics
from ..fleet import (FleetSpec, RepresentativeProfile, ResidualDemand, build_residual, fleet_capacity,
                     fleet_investments, read_residual, reference_residual, representative_profile,
                     write_residual)
from ..household import EconomicContext, InvestmentDecision, run_household
from ..sector import (ENDOGENOUS, SectorScenario, SolveError, get_backend, load_solution, scale_costs, solve,
                      build_lp, validate_solution, write_solution)
from ..timeseries import ProfileSchema, TimeSeries, Unit, read_profile_table, write_columns, year_timestamps
from .config import ConfigError, Inputs, RunConfig, load_inputs, sha256

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
OK = "ok"
FAILED = "failed"  # solver error
INVALID = "invalid"  # solved, but the solution failed validation


def _fmt(v: float) -> str:
    return f"{v:g}"


@dataclass(frozen=True, order=True)
class HouseholdKey:
    fit: float
    pv_mult: float = 1.0
    battery_mult: float = 1.0

    @property
    def id(self) -> str:
        return f"fit{_fmt(self.fit)}_pv{_fmt(self.pv_mult)}_bat{_fmt(self.battery_mult)}"


@dataclass(frozen=True)
class Cell:
    """One sector solve. ``fit is None`` marks a no-prosumage reference."""

    res: float | str
    pv_mult: float = 1.0
    battery_mult: float = 1.0
    fit: float | None = None
    n_households: int | None = None

    @property
    def is_reference(self) -> bool:
        return self.fit is None

    @property
    def res_label(self) -> str:
        return "endo" if self.res == ENDOGENOUS else _fmt(self.res)

    @property
    def id(self) -> str:
        costs = f"pv{_fmt(self.pv_mult)}_bat{_fmt(self.battery_mult)}"
        if self.is_reference:
            return f"ref_res{self.res_label}_{costs}"
        return f"fit{_fmt(self.fit)}_res{self.res_label}_{costs}_n{self.n_households}"

    @property
    def household_key(self) -> HouseholdKey | None:
        return None if self.is_reference else HouseholdKey(self.fit, self.pv_mult, self.battery_mult)

    @property
    def reference(self) -> "Cell":
        return Cell(self.res, self.pv_mult, self.battery_mult)

    @property
    def res_share(self) -> float | None:
        return None if self.res == ENDOGENOUS else float(self.res)

    def describe(self) -> dict:
        return {"id": self.id, "kind": "reference" if self.is_reference else "prosumage", "fit": self.fit,
                "res_share": self.res, "pv_cost_multiplier": self.pv_mult,
                "battery_cost_multiplier": self.battery_mult, "n_households": self.n_households,
                "reference": None if self.is_reference else self.reference.id}


@dataclass
class Plan:
    household_keys: list[HouseholdKey]
    cells: list[Cell]  # prosumage cells
    references: list[Cell]

    @property
    def solves(self) -> list[Cell]:
        return self.references + self.cells


def plan_matrix(cfg: RunConfig) -> Plan:
    """Base FiT x RES matrix, one reference per RES share, plus sensitivity sweeps."""
    n0 = cfg.n_households
    cost_variants = [(1.0, 1.0)]
    cost_variants += [(m, 1.0) for m in cfg.pv_cost_multipliers if m != 1.0]
    cost_variants += [(1.0, m) for m in cfg.battery_cost_multipliers if m != 1.0]
    keys: list[HouseholdKey] = []
    cells: list[Cell] = []
    refs: list[Cell] = []
    for pm, bm in cost_variants:
        for fit in cfg.fit_fractions:
            keys.append(HouseholdKey(fit, pm, bm))
            cells += [Cell(res, pm, bm, fit, n0) for res in cfg.res_shares]
        refs += [Cell(res, pm, bm) for res in cfg.res_shares]
    for n in cfg.fleet_sizes:
        if n != n0:
            cells += [Cell(res, 1.0, 1.0, fit, n) for fit in cfg.fit_fractions for res in cfg.res_shares]
    return Plan(keys, cells, refs)


# --------------------------------------------------------------------------- I/O helpers


@contextlib.contextmanager
def atomic_dir(final: Path) -> Iterator[Path]:
    tmp = final.with_name(final.name + ".tmp")
    shutil.rmtree(tmp, ignore_errors=True)
    tmp.mkdir(parents=True)
    try:
        yield tmp
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    if final.exists():
        shutil.rmtree(final)
    os.replace(tmp, final)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n", encoding="utf-8")


def _read_json(path: Path):
    return json.loads(path.read_text(encoding="utf-8"))


def _digest(*parts) -> str:
    h = hashlib.sha256()
    for p in parts:
        if isinstance(p, np.ndarray):
            h.update(np.ascontiguousarray(p, dtype=np.float64).tobytes())
        else:
            h.update(json.dumps(p, sort_keys=True, default=str).encode())
        h.update(b"|")
    return h.hexdigest()


# --------------------------------------------------------------------------- household stage


@dataclass(frozen=True)
class HouseholdSummary:
    household_id: str
    installed_pv: float
    installed_battery: float
    decisions: tuple[InvestmentDecision, ...]


@dataclass
class HouseholdStage:
    key: HouseholdKey
    households: list[HouseholdSummary]
    representative: RepresentativeProfile


def _household_econ(cfg: RunConfig, inputs: Inputs, key: HouseholdKey) -> EconomicContext:
    return EconomicContext(inputs.tariff(cfg, key.fit), inputs.cost_curves(cfg, key.pv_mult, key.battery_mult))


def _household_digest(cfg: RunConfig, inputs: Inputs, key: HouseholdKey) -> str:
    return _digest(FORMAT_VERSION, inputs.digests.get("profiles"), inputs.digests.get("cost_curves"),
                   [p.household_id for p in inputs.profiles], key.id, cfg.first_year, cfg.final_year,
                   cfg.fixed_daily_charge, cfg.pv_cost_scale, cfg.battery_cost_scale)


def run_household_stage(cfg: RunConfig, inputs: Inputs, key: HouseholdKey, directory: Path) -> None:
    """Simulate every household for one (FiT, cost multiplier) key and write the stage."""
    econ = _household_econ(cfg, inputs, key)
    years = range(cfg.first_year, cfg.final_year + 1)
    runs = [run_household(p, econ, years) for p in inputs.profiles]
    rep = representative_profile(runs)
    with atomic_dir(directory) as tmp:
        with open(tmp / "decisions.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["household_id", "year", "added_pv_kwp", "added_battery_kwh", "npv_aud", "dpp_years",
                        "capex_aud"])
            for r in runs:
                for d in r.decisions:
                    w.writerow([r.household_id, d.year, repr(d.added_pv), repr(d.added_battery), repr(d.npv),
                                d.dpp_label if math.isinf(d.dpp) else repr(d.dpp), repr(d.capex)])
        with open(tmp / "installed.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["household_id", "pv_kwp", "battery_kwh"])
            for r in runs:
                w.writerow([r.household_id, repr(r.installed_pv), repr(r.installed_battery)])
        step, year = rep.net_grid.step_minutes, rep.net_grid.start_year
        stamps = year_timestamps(step, year)
        write_columns(tmp / "net_grid.csv", ["timestamp", *[r.household_id for r in runs]], stamps,
                      [r.net_grid().values for r in runs])
        write_columns(tmp / "representative.csv",
                      ["timestamp", "net_grid_kwh", "demand_kwh", "pv_generation_kwh", "import_kwh", "export_kwh"],
                      stamps, [rep.net_grid.values, rep.demand.values, rep.pv_generation.values,
                               rep.grid_import.values, rep.grid_export.values])
        _write_json(tmp / "stage.json", {"key": key.id, "digest": _household_digest(cfg, inputs, key),
                                         "n_households": len(runs), "status": OK})


def load_household_stage(directory: Path, key: HouseholdKey) -> HouseholdStage:
    decisions: dict[str, list[InvestmentDecision]] = {}
    with open(directory / "decisions.csv", newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            dpp = math.inf if row["dpp_years"] == "never" else float(row["dpp_years"])
            decisions.setdefault(row["household_id"], []).append(InvestmentDecision(
                int(row["year"]), float(row["added_pv_kwp"]), float(row["added_battery_kwh"]),
                float(row["npv_aud"]), dpp, float(row["capex_aud"])))
    households = []
    with open(directory / "installed.csv", newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            hid = row["household_id"]
            households.append(HouseholdSummary(hid, float(row["pv_kwp"]), float(row["battery_kwh"]),
                                               tuple(decisions.get(hid, ()))))
    stamps, cols = read_profile_table(directory / "representative.csv", ProfileSchema(step_minutes=30))
    year = int(stamps[0].year)

    def ts(name):
        return TimeSeries(cols[name], 30, Unit.KWH, year)

    rep = RepresentativeProfile(ts("net_grid_kwh"), ts("demand_kwh"), ts("pv_generation_kwh"), ts("import_kwh"),
                                ts("export_kwh"), len(households))
    return HouseholdStage(key, households, rep)


def _stage_is_current(directory: Path, digest: str) -> bool:
    meta = directory / "stage.json"
    if not meta.is_file():
        return False
    try:
        info = _read_json(meta)
    except ValueError:
        return False
    return info.get("digest") == digest and info.get("status") == OK


# --------------------------------------------------------------------------- sector stage


@dataclass
class SectorJob:
    cell: Cell
    scenario: SectorScenario
    residual: ResidualDemand
    backend: str
    directory: Path
    digest: str
    start_year: int = 2030


@dataclass
class CellStatus:
    cell: Cell
    status: str
    message: str = ""
    validation: str = ""
    objective: float = math.nan


def solve_cell(job: SectorJob) -> CellStatus:
    """Build, solve, validate and write one cell. Never raises for solver trouble."""
    cell = job.cell
    with atomic_dir(job.directory) as tmp:
        write_residual(tmp / "residual.csv", job.residual)
        meta = cell.describe() | {"digest": job.digest, "backend": job.backend}
        try:
            sol = solve(build_lp(job.scenario), get_backend(job.backend))
        except (SolveError, ValueError) as e:
            logger.error("cell %s failed: %s", cell.id, e)
            _write_json(tmp / "cell.json", meta | {"status": FAILED, "message": str(e)})
            return CellStatus(cell, FAILED, str(e))
        report = validate_solution(sol)
        write_solution(tmp, sol, job.start_year)
        status = OK if report.ok else INVALID
        message = "" if report.ok else f"solution failed validation: {report.summary()}"
        if message:
            logger.error("cell %s: %s", cell.id, message)
        _write_json(tmp / "cell.json", meta | {"status": status, "message": message, "objective": sol.objective,
                                              "validation": report.summary(),
                                              "realized_res_share": sol.renewable_share()})
    return CellStatus(cell, status, message, report.summary(), sol.objective)


def _cell_is_current(directory: Path, digest: str) -> dict | None:
    meta = directory / "cell.json"
    if not meta.is_file():
        return None
    try:
        info = _read_json(meta)
    except ValueError:
        return None
    if info.get("digest") != digest or info.get("status") != OK:
        return None
    return info


def _scenario(cfg: RunConfig, inputs: Inputs, cell: Cell, rd: ResidualDemand) -> SectorScenario:
    catalog = scale_costs(inputs.catalog, cell.pv_mult, cell.battery_mult)
    return SectorScenario(rd.residual.values, inputs.availability, catalog,
                          household_pv_generation=rd.household_pv.values,
                          res_share=cell.res_share, interest_rate=cfg.interest_rate,
                          gross_demand_includes_household_pv=cfg.gross_demand_includes_household_pv, name=cell.id)


def _scenario_digest(cfg: RunConfig, inputs: Inputs, cell: Cell, scenario: SectorScenario,
                     rd: ResidualDemand) -> str:
    return _digest(FORMAT_VERSION, cell.id, scenario.residual_demand, scenario.household_pv_generation,
                   rd.household_net.values, rd.household_demand.values, rd.household_import.values,
                   {k: inputs.digests.get(k) for k in sorted(inputs.digests) if k != "profiles"},
                   [repr(t) for t in scenario.technologies], cfg.interest_rate,
                   cfg.gross_demand_includes_household_pv, cfg.backend)


# --------------------------------------------------------------------------- orchestration


@dataclass
class MatrixResult:
    directory: Path
    plan: Plan
    households: dict[HouseholdKey, HouseholdStage]
    statuses: dict[str, CellStatus]
    outcomes: dict[str, analytics.ScenarioOutcome] = field(default_factory=dict)
    deltas: dict[str, analytics.ScenarioDelta] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(s.status == OK for s in self.statuses.values())

    @property
    def exit_code(self) -> int:
        return exit_code(self.statuses.values())


def exit_code(statuses) -> int:
    """0 all cells fine, 2 if any solve failed, else 1 if any solution failed validation."""
    found = {s.status for s in statuses}
    if FAILED in found:
        return 2
    return 1 if INVALID in found else 0


def _pool(jobs: int):
    return ProcessPoolExecutor(max_workers=jobs, mp_context=multiprocessing.get_context("spawn"))


def prepare_households(cfg: RunConfig, inputs: Inputs, out: Path, keys: list[HouseholdKey],
                       jobs: int = 1) -> dict[HouseholdKey, HouseholdStage]:
    """Run missing or stale household stages, then load every stage back from disk."""
    todo = []
    for key in keys:
        d = out / "households" / key.id
        if _stage_is_current(d, _household_digest(cfg, inputs, key)):
            logger.info("household stage %s: cached", key.id)
        else:
            todo.append((key, d))
    if jobs > 1 and len(todo) > 1:
        with _pool(min(jobs, len(todo))) as ex:
            for f in [ex.submit(run_household_stage, cfg, inputs, k, d) for k, d in todo]:
                f.result()
    else:
        for key, d in todo:
            logger.info("household stage %s: %d households", key.id, len(inputs.profiles))
            run_household_stage(cfg, inputs, key, d)
    # always read back, so a fresh run and a cached run see identical numbers
    return {k: load_household_stage(out / "households" / k.id, k) for k in keys}


def cell_residual(cfg: RunConfig, inputs: Inputs, cell: Cell,
                  stages: dict[HouseholdKey, HouseholdStage]) -> ResidualDemand:
    if cell.is_reference:
        # the residual is the network demand; companion series come from the first FiT's cohort
        stage = stages.get(HouseholdKey(cfg.fit_fractions[0], cell.pv_mult, cell.battery_mult))
        rep = (stage or next(iter(stages.values()))).representative
        return reference_residual(inputs.network, rep, FleetSpec(cfg.n_households))
    return build_residual(inputs.network, stages[cell.household_key].representative, FleetSpec(cell.n_households))


def run_cells(cfg: RunConfig, inputs: Inputs, cells: list[Cell], stages: dict[HouseholdKey, HouseholdStage],
              out: Path, jobs: int = 1) -> dict[str, CellStatus]:
    todo: list[SectorJob] = []
    statuses: dict[str, CellStatus] = {}
    for cell in cells:
        rd = cell_residual(cfg, inputs, cell, stages)
        sc = _scenario(cfg, inputs, cell, rd)
        d = out / "cells" / cell.id
        digest = _scenario_digest(cfg, inputs, cell, sc, rd)
        cached = _cell_is_current(d, digest)
        if cached:
            logger.info("cell %s: cached", cell.id)
            statuses[cell.id] = CellStatus(cell, OK, "", cached.get("validation", ""),
                                           cached.get("objective", math.nan))
        else:
            todo.append(SectorJob(cell, sc, rd, cfg.backend, d, digest, inputs.network.start_year))
    if jobs > 1 and len(todo) > 1:
        with _pool(min(jobs, len(todo))) as ex:
            for st in ex.map(solve_cell, todo):
                statuses[st.cell.id] = st
    else:
        for job in todo:
            logger.info("solving %s", job.cell.id)
            statuses[job.cell.id] = solve_cell(job)
    return {c.id: statuses[c.id] for c in cells}


def with_backend(cfg: RunConfig, backend: str | None) -> RunConfig:
    if not backend:
        return cfg
    get_backend(backend)
    return replace(cfg, backend=backend)


def run_matrix(cfg: RunConfig, out: Path | None = None, jobs: int = 1, backend: str | None = None,
               inputs: Inputs | None = None, plan: Plan | None = None) -> MatrixResult:
    """Run (or resume) the whole matrix. Cell failures are recorded, not raised."""
    out = Path(out or cfg.output)
    cfg = with_backend(cfg, backend)
    inputs = inputs or load_inputs(cfg)
    plan = plan or plan_matrix(cfg)
    out.mkdir(parents=True, exist_ok=True)
    logger.info("matrix: %d household stage(s), %d sector solve(s)", len(plan.household_keys), len(plan.solves))
    stages = prepare_households(cfg, inputs, out, plan.household_keys, jobs)
    statuses = run_cells(cfg, inputs, plan.solves, stages, out, jobs)
    return analyze(cfg, out, inputs, plan, stages, statuses)


def _read_statuses(out: Path, cells: list[Cell]) -> dict[str, CellStatus]:
    statuses = {}
    for cell in cells:
        meta = out / "cells" / cell.id / "cell.json"
        if not meta.is_file():
            raise ConfigError(f"{meta.parent}: cell missing; run the matrix first")
        info = _read_json(meta)
        statuses[cell.id] = CellStatus(cell, info["status"], info.get("message", ""), info.get("validation", ""),
                                       info.get("objective", math.nan))
    return statuses


def analyze(cfg: RunConfig, out: Path | None = None, inputs: Inputs | None = None, plan: Plan | None = None,
            stages: dict[HouseholdKey, HouseholdStage] | None = None,
            statuses: dict[str, CellStatus] | None = None, write: bool = True) -> MatrixResult:
    """Deltas, curves and segment prices for every solved cell, read back from the run directory."""
    out = Path(out or cfg.output)
    inputs = inputs or load_inputs(cfg)
    plan = plan or plan_matrix(cfg)
    if stages is None:
        stages = {}
        for k in plan.household_keys:
            d = out / "households" / k.id
            if not (d / "stage.json").is_file():
                raise ConfigError(f"{d}: household stage missing; run the matrix first")
            stages[k] = load_household_stage(d, k)
    statuses = statuses or _read_statuses(out, plan.solves)
    result = MatrixResult(out, plan, stages, statuses)
    for cell in plan.solves:
        if statuses[cell.id].status == OK:
            result.outcomes[cell.id] = _outcome(cfg, inputs, result, cell)
    for cell in plan.cells:
        if cell.id in result.outcomes and cell.reference.id in result.outcomes:
            result.deltas[cell.id] = _analyse_cell(inputs, result, cell, write)
    if write:
        _write_summary(result)
        _write_manifest(cfg, inputs, result)
    return result


def load_result(cfg: RunConfig, out: Path | None = None, inputs: Inputs | None = None) -> MatrixResult:
    """Reload a finished run directory without writing anything."""
    return analyze(cfg, out, inputs, write=False)


def _outcome(cfg: RunConfig, inputs: Inputs, result: MatrixResult, cell: Cell) -> analytics.ScenarioOutcome:
    d = result.directory / "cells" / cell.id
    rd = read_residual(d / "residual.csv", cell.n_households or cfg.n_households, inputs.network.start_year)
    sol = load_solution(d, _scenario(cfg, inputs, cell, rd))
    if cell.is_reference:
        return analytics.ScenarioOutcome(cell.id, cell.res_share, sol, rd)
    stage = result.households[cell.household_key]
    fleet = FleetSpec(cell.n_households)
    costs = inputs.cost_curves(cfg, cell.pv_mult, cell.battery_mult)
    return analytics.ScenarioOutcome(cell.id, cell.res_share, sol, rd, fleet_capacity(stage.households, fleet),
                                     fleet_investments(stage.households, costs, fleet))


def _analyse_cell(inputs: Inputs, result: MatrixResult, cell: Cell, write: bool) -> analytics.ScenarioDelta:
    pro = result.outcomes[cell.id]
    ref = result.outcomes[cell.reference.id]
    # the reference seen with this cell's households and fleet size, so segments line up
    ref_rd = reference_residual(inputs.network, result.households[cell.household_key].representative,
                                FleetSpec(cell.n_households))
    ref_view = analytics.ScenarioOutcome(ref.name, ref.res_share, ref.solution, ref_rd)
    delta = analytics.delta_report(pro, ref_view)
    if not write:
        return delta
    with atomic_dir(result.directory / "analysis" / cell.id) as tmp:
        analytics.write_delta(tmp / "delta.csv", delta)
        analytics.write_rldc(tmp / "rldc.csv", analytics.rldc_decomposition(pro, ref_view))
        with open(tmp / "segments.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["segment", "profile", "price_aud_per_mwh", "reference_price_aud_per_mwh",
                        "energy_mwh", "reference_energy_mwh", "price_effect_aud", "volume_effect_aud"])
            for imports_only in (False, True):
                cur = analytics.segment_prices(pro, imports_only)
                base = {p.name: p for p in analytics.segment_prices(ref_view, imports_only)}
                changes = {c.name: c for c in analytics.segment_price_changes(pro, ref_view, imports_only)}
                for p in cur:
                    b, c = base[p.name], changes[p.name]
                    w.writerow([p.name, "imports" if imports_only else "net", repr(p.price), repr(b.price),
                                repr(p.energy), repr(b.energy), repr(c.price_effect), repr(c.volume_effect)])
    return delta


def _write_summary(result: MatrixResult) -> None:
    rows = []
    for cell in result.plan.solves:
        row: dict[str, object] = {"cell": cell.id, "status": result.statuses[cell.id].status}
        if cell.id in result.outcomes:
            row.update(analytics.scenario_summary(result.outcomes[cell.id]))
        if cell.id in result.deltas:
            d = result.deltas[cell.id]
            row["system_cost_change_pct"] = d.system_cost_pct
            for k, v in d.substitution_per_pv.items():
                row[f"substitution_per_household_pv_{k}"] = v
        rows.append(row)
    columns = ["cell", "status"] + sorted({k for r in rows for k in r} - {"cell", "status"})
    with open(result.directory / "summary.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else str(v) for v in (r.get(c, "") for c in columns)])


def _write_manifest(cfg: RunConfig, inputs: Inputs, result: MatrixResult) -> None:
    out = result.directory

    def files(d: Path) -> dict[str, str]:
        if not d.is_dir():
            return {}
        return {p.relative_to(out).as_posix(): sha256(p) for p in sorted(d.rglob("*")) if p.is_file()}

    cells = []
    for c in result.plan.solves:
        st = result.statuses[c.id]
        cells.append(c.describe() | {"status": st.status, "message": st.message,
                                     "outputs": files(out / "cells" / c.id) | files(out / "analysis" / c.id)})
    manifest = {
        "format_version": FORMAT_VERSION,
        "config": cfg.describe(),
        "inputs": inputs.digests,
        "households": {"ingested": [p.household_id for p in inputs.profiles], "rejected": inputs.rejected},
        "household_stages": {k.id: files(out / "households" / k.id) for k in result.plan.household_keys},
        "cells": cells,
        "summary": sha256(out / "summary.csv"),
    }
    _write_json(out / "manifest.json", manifest)
