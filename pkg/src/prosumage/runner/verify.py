"""Self-check suite run by ``prosumage verify`` on the bundled synthetic dataset."""
from __future__ import annotations

import logging
import math
import tempfile
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .. import analytics, synthetic
from ..fleet import FleetSpec, build_residual, reference_residual, representative_profile
from ..household import (BatterySpec, EconomicContext, HouseholdState, TariffSchedule, discounted_payback,
                         dispatch_step, evaluate_candidates, npv, run_household, select, simulate_dispatch)
from ..household.specs import EvaluationGrid
from ..sector import (DISPATCHABLE, CatalogError, SectorScenario, Technology, annuitize,
                      build_lp, default_catalog, get_backend, read_catalog, solve, validate_solution,
                      write_catalog)

logger = logging.getLogger(__name__)


@dataclass
class Check:
    name: str
    ok: bool
    detail: str = ""


@dataclass
class VerifyReport:
    checks: list[Check]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.ok]

    def lines(self) -> list[str]:
        return [f"{'PASS' if c.ok else 'FAIL'}  {c.name}" + (f": {c.detail}" if c.detail else "")
                for c in self.checks]


def toy_scenario() -> SectorScenario:
    """Two hours, demand [1, 2], one plant at 10 AUD/MW capacity and 5 AUD/MWh energy."""
    plant = Technology("plant", DISPATCHABLE, fixed_om=10.0, variable_om=5.0)
    return SectorScenario(np.array([1.0, 2.0]), {}, [plant], res_share=None)


SHORT_CATALOG = ("coal", "wind", "ocgt")


def short_scenario(hours: int = 48, names=SHORT_CATALOG, res_share: float | None = None,
                   dataset: synthetic.SyntheticDataset | None = None) -> SectorScenario:
    """A slice of the synthetic year with a reduced catalog.

    Lower bounds are dropped so the capacity choice is free.
    """
    ds = dataset or synthetic.generate(2)
    catalog = [replace(t, capacity_lower_bound=0.0) for t in default_catalog() if t.name in names]
    avail = {"wind": ds.wind.values[:hours], "pv": ds.pv.values[:hours]}
    return SectorScenario(ds.network_demand.values[:hours], avail, catalog, res_share=res_share)


# --------------------------------------------------------------------------- checks


def _dispatch_balance(seed: int = 1) -> Check:
    rng = np.random.default_rng(seed)
    eta = math.sqrt(BatterySpec().roundtrip_efficiency)
    worst_gen = worst_load = 0.0
    bad_soc = 0
    for _ in range(10_000):
        pv, load = rng.uniform(0, 3, 2) * (rng.random(2) > 0.2)
        cap = rng.uniform(0, 18)
        soc0 = rng.uniform(0, cap)
        limit = cap / 2.5 * 0.5
        s, ch, dis, ex, im, soc = dispatch_step(pv, load, soc0, cap, limit, eta)
        worst_gen = max(worst_gen, abs(pv - (s + ch + ex)))
        worst_load = max(worst_load, abs(load - (s + dis + im)))
        bad_soc += not (-1e-12 <= soc <= cap + 1e-12)
    ok = worst_gen <= 1e-9 and worst_load <= 1e-9 and bad_soc == 0
    return Check("household dispatch balances", ok,
                 f"max generation residual {worst_gen:.2e}, max load residual {worst_load:.2e}, "
                 f"SoC out of bounds {bad_soc}")


def _roundtrip(ds: synthetic.SyntheticDataset) -> Check:
    state = HouseholdState().add(2030, 5.0, 10.0)
    d = simulate_dispatch(ds.profiles[0], state, BatterySpec(), 2030)
    eta2 = BatterySpec().roundtrip_efficiency
    # SoC starts at zero; what is left in the battery at the end was charged but not yet discharged
    expected = eta2 * d.battery_charge_ac.sum() - math.sqrt(eta2) * d.state_of_charge[-1]
    rel = abs(d.battery_discharge_ac.sum() - expected) / max(expected, 1e-12)
    return Check("battery annual roundtrip", rel <= 1e-6, f"relative error {rel:.2e}")


def _economics() -> Check:
    v = float(npv(5000.0, [1000.0] * 10, 0.05))
    dpp = discounted_payback(3000.0, [1000.0] * 10, 0.05)
    ann = annuitize(5000.0, 10, 0.04)
    ok = abs(v - 2721.73) <= 1e-2 and abs(dpp - 3.336) <= 1e-2 and abs(ann - 616.45) <= 1e-2
    return Check("NPV / DPP / annuity oracles", ok, f"NPV {v:.2f}, DPP {dpp:.3f}, annuity {ann:.2f}")


def _argmax(ds: synthetic.SyntheticDataset) -> Check:
    grid = EvaluationGrid()
    worst = ""
    for p in ds.profiles[:2]:
        for fit in (0.0, 0.25, 0.5):
            econ = EconomicContext(TariffSchedule(fit_fraction=fit))
            table = evaluate_candidates(p, HouseholdState(), econ, grid, 2019)
            dec = select(table, econ.dpp_threshold)
            best = float(table.npv.max())
            if dec is None:
                gate = best <= 0 or not np.any(table.dpp[1:] <= econ.dpp_threshold)
                if not gate:
                    worst = f"{p.household_id} FiT {fit}: no decision despite NPV {best:.2f}"
            elif dec.npv != best or len(table.npv) != 399:
                worst = f"{p.household_id} FiT {fit}: chose NPV {dec.npv:.2f}, best {best:.2f}"
    return Check("investment argmax over the 399-point grid", not worst, worst)


def _toy_lp() -> Check:
    problems = []
    for name in ("dense", "ipm", "highs"):
        sol = solve(build_lp(toy_scenario()), get_backend(name))
        if abs(sol.objective - 35) > 1e-6 or not np.allclose(sol.duals, [5, 15], atol=1e-6):
            problems.append(f"{name}: objective {sol.objective}, duals {sol.duals.tolist()}")
        if abs(validate_solution(sol).duality_gap) > 1e-6:
            problems.append(f"{name}: duality gap")
    return Check("toy LP objective and duals", not problems, "; ".join(problems))


def _short_lp(ds: synthetic.SyntheticDataset, backend: str, tolerance: float) -> list[Check]:
    sc = short_scenario(dataset=ds)
    lp = build_lp(sc)
    sol = solve(lp, get_backend(backend, tol=tolerance) if backend in ("ipm", "dense") else get_backend(backend))
    rep = validate_solution(sol)
    checks = [Check(f"48-h LP validation ({backend}, tolerance {tolerance:g})", rep.ok, rep.summary())]
    other = solve(lp, get_backend("dense"))
    rel = abs(sol.objective - other.objective) / abs(other.objective)
    checks.append(Check("48-h LP objective agrees with dense simplex", rel <= 1e-6, f"relative difference {rel:.2e}"))
    checks.append(Check("48-h LP balance duals non-negative", bool(sol.duals.min() >= -1e-6),
                        f"min dual {sol.duals.min():.3g}"))
    return checks


def _negative_cost() -> Check:
    try:
        Technology("bad", DISPATCHABLE, overnight_cost_power=-1.0)
    except CatalogError:
        pass
    else:
        return Check("negative-cost catalog rejected", False, "Technology accepted a negative cost")
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "catalog.csv"
        write_catalog(path, default_catalog())
        lines = path.read_text(encoding="utf-8").splitlines()
        header = lines[0].split(",")
        row = lines[1].split(",")
        row[header.index("variable_om")] = "-4.2"
        path.write_text("\n".join([lines[0], ",".join(row), *lines[2:]]) + "\n", encoding="utf-8")
        try:
            read_catalog(path)
        except CatalogError as e:
            return Check("negative-cost catalog rejected", True, str(e))
    return Check("negative-cost catalog rejected", False, "read_catalog accepted a negative cost")


def _reference_identities(ds: synthetic.SyntheticDataset) -> Check:
    problems = []
    econ = EconomicContext(TariffSchedule(fit_fraction=0.25))
    runs = [run_household(p, econ, range(2029, 2031)) for p in ds.profiles[:2]]
    rep = representative_profile(runs)
    rd = reference_residual(ds.network_demand, rep, FleetSpec())
    if not np.array_equal(rd.residual.values, ds.network_demand.values):
        problems.append("reference residual differs from network demand")
    pro = build_residual(ds.network_demand, rep, FleetSpec())
    acct = ds.network_demand.values.sum() - FleetSpec().n_households * (
        rep.demand.values.sum() - rep.net_grid.values.sum()) / 1000
    if abs(pro.residual.values.sum() - acct) > 1e-6 * abs(acct):
        problems.append("annual residual accounting")
    sol = solve(build_lp(short_scenario(dataset=ds)), get_backend("dense"))
    ref = analytics.ScenarioOutcome("ref", None, sol, rd)
    if analytics.outcome_system_cost(ref).total != sol.objective:
        problems.append("reference system cost differs from LP objective")
    delta = analytics.delta_report(ref, ref)
    if any(v != 0 for _, _, v in delta.rows()):
        problems.append("delta_report(x, x) is not zero")
    return Check("reference identities", not problems, "; ".join(problems))


def verify(backend: str = "ipm", solver_tolerance: float = 1e-9, seed: int = 1) -> VerifyReport:
    """Run every check; a crashing check is recorded as a failure, not raised."""
    ds = synthetic.generate(2)
    steps: list[tuple[str, Callable[[], Check | list[Check]]]] = [
        ("household dispatch balances", lambda: _dispatch_balance(seed)),
        ("battery annual roundtrip", lambda: _roundtrip(ds)),
        ("NPV / DPP / annuity oracles", _economics),
        ("investment argmax over the 399-point grid", lambda: _argmax(ds)),
        ("toy LP objective and duals", _toy_lp),
        ("48-h LP", lambda: _short_lp(ds, backend, solver_tolerance)),
        ("negative-cost catalog rejected", _negative_cost),
        ("reference identities", lambda: _reference_identities(ds)),
    ]
    checks: list[Check] = []
    for name, fn in steps:
        logger.info("verify: %s", name)
        try:
            out = fn()
        except Exception as e:  # noqa: BLE001 - report every failing property
            logger.exception("verify: %s crashed", name)
            out = Check(name, False, f"{type(e).__name__}: {e}")
        checks += out if isinstance(out, list) else [out]
    return VerifyReport(checks)
