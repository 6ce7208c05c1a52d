"""Solving scenarios, unpacking solutions and checking them independently."""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..timeseries import write_columns, year_timestamps
from .catalog import DISPATCHABLE, STORAGE, VARIABLE_RENEWABLE
from .lp import LinearProgram, SectorScenario, build_lp
from .solvers import (INFEASIBLE, OPTIMAL, UNBOUNDED, HighsBackend, SolveError, diagnose_infeasibility,
                      unbounded_candidates)

logger = logging.getLogger(__name__)


@dataclass
class SectorSolution:
    lp: LinearProgram
    x: np.ndarray
    y_eq: np.ndarray
    y_ub: np.ndarray
    objective: float
    backend: str = ""

    @property
    def scenario(self) -> SectorScenario:
        return self.lp.scenario

    @property
    def technologies(self):
        return list(self.scenario.technologies)

    @property
    def capacities(self) -> dict[str, float]:
        """MW of (power) capacity per technology."""
        cap = self.lp.var("cap", self.x)
        return {t.name: float(cap[i]) for i, t in enumerate(self.technologies)}

    @property
    def energy_capacities(self) -> dict[str, float]:
        ecap = self.lp.var("energy_cap", self.x)
        return {t.name: float(ecap[k]) for k, t in enumerate(self._stores)}

    @property
    def _gens(self):
        return [t for t in self.technologies if t.kind in (DISPATCHABLE, VARIABLE_RENEWABLE)]

    @property
    def _stores(self):
        return [t for t in self.technologies if t.kind == STORAGE]

    @property
    def dispatch(self) -> dict[str, np.ndarray]:
        """Hourly generation (MWh) of generators and discharge of storage."""
        gen = self.lp.var("gen", self.x)
        out = {t.name: gen[g] for g, t in enumerate(self._gens)}
        dis = self.lp.var("discharge", self.x)
        out.update({t.name: dis[k] for k, t in enumerate(self._stores)})
        return out

    @property
    def charge(self) -> dict[str, np.ndarray]:
        ch = self.lp.var("charge", self.x)
        return {t.name: ch[k] for k, t in enumerate(self._stores)}

    @property
    def levels(self) -> dict[str, np.ndarray]:
        lvl = self.lp.var("level", self.x)
        return {t.name: lvl[k] for k, t in enumerate(self._stores)}

    @property
    def spill(self) -> np.ndarray:
        """Household feed-in curtailed per hour (MWh)."""
        out = np.zeros(self.scenario.hours)
        out[self.lp.spill_hours] = self.lp.var("spill", self.x)
        return out

    @property
    def duals(self) -> np.ndarray:
        """Hourly energy-balance shadow prices (AUD/MWh)."""
        return self.y_eq[self.lp.balance_rows()]

    @property
    def res_dual(self) -> float | None:
        blk = self.lp.ub_rows.get("res_share")
        return None if blk is None else float(-self.y_ub[blk.start])

    def curtailment(self) -> dict[str, np.ndarray]:
        s = self.scenario
        caps = self.capacities
        return {t.name: s.availability[t.availability] * caps[t.name] - self.dispatch[t.name]
                for t in self._gens if t.kind == VARIABLE_RENEWABLE}

    def annual_generation(self) -> dict[str, float]:
        return {k: float(v.sum()) for k, v in self.dispatch.items()}

    def renewable_share(self) -> float:
        s = self.scenario
        ren = sum(float(self.dispatch[t.name].sum()) for t in self._gens if t.renewable)
        hh = float(s.household_pv_generation.sum() - self.spill.sum())
        return (ren + hh) / s.gross_demand()

    def recomputed_cost(self) -> float:
        """Objective rebuilt from capacities and dispatch, independent of the LP vector."""
        s = self.scenario
        r = s.interest_rate
        caps, ecaps, disp = self.capacities, self.energy_capacities, self.dispatch
        total = 0.0
        for t in self.technologies:
            total += t.annual_power_cost(r) * caps[t.name]
            if t.kind == STORAGE:
                total += t.annual_energy_cost(r) * ecaps[t.name]
            total += t.marginal_cost() * float(disp[t.name].sum())
        return total


def solve(lp: LinearProgram, backend=None) -> SectorSolution:
    backend = backend or HighsBackend()
    res = backend.solve(lp)
    if res.status == INFEASIBLE:
        classes = diagnose_infeasibility(lp)
        raise SolveError(INFEASIBLE, f"infeasible; violated row classes: {sorted(classes) or ['bounds']}")
    if res.status == UNBOUNDED:
        raise SolveError(UNBOUNDED, f"unbounded; suspect variable blocks: {unbounded_candidates(lp)}")
    if res.status != OPTIMAL:
        raise SolveError(res.status, f"solver failed: {res.message}")
    return SectorSolution(lp, res.x, res.y_eq, res.y_ub, res.objective, getattr(backend, "name", ""))


def solve_scenario(s: SectorScenario, backend=None) -> SectorSolution:
    return solve(build_lp(s), backend)


def run_endogenous(s: SectorScenario, backend=None) -> tuple[SectorSolution, float]:
    """Solve without the RES-share row and report the share the optimum reaches."""
    free = replace(s, res_share=None)
    sol = solve_scenario(free, backend)
    return sol, sol.renewable_share()


@dataclass
class ValidationReport:
    violations: list[tuple[str, float]] = field(default_factory=list)
    primal_objective: float = 0.0
    dual_objective: float = 0.0
    dual_infeasibility: float = 0.0
    cost_mismatch: float = 0.0
    tol: float = 1e-6

    @property
    def duality_gap(self) -> float:
        return abs(self.primal_objective - self.dual_objective) / max(1.0, abs(self.primal_objective))

    @property
    def ok(self) -> bool:
        return (not self.violations and self.duality_gap <= self.tol
                and self.dual_infeasibility <= self.tol and self.cost_mismatch <= self.tol)

    def summary(self) -> str:
        return (f"violations={len(self.violations)} gap={self.duality_gap:.3e} "
                f"dual_infeas={self.dual_infeasibility:.3e} cost_mismatch={self.cost_mismatch:.3e}")


def validate_solution(sol: SectorSolution, lp: LinearProgram | None = None, tol: float = 1e-6) -> ValidationReport:
    """Recompute every row residual and the primal/dual objective gap.

    Row tolerance is ``tol`` times the row scale ``max(1, |b_i|, max_j |a_ij x_j|)``.
    The dual objective is rebuilt from the row duals alone: reduced costs are
    attributed to whichever variable bound they price, and any reduced cost
    that no bound can absorb counts as dual infeasibility.
    """
    lp = lp or sol.lp
    x = sol.x
    report = ValidationReport(tol=tol)
    for kind, A, b in (("eq", lp.A_eq, lp.b_eq), ("ub", lp.A_ub, lp.b_ub)):
        if A.shape[0] == 0:
            continue
        Ax = A @ x
        scale = np.maximum(1.0, np.maximum(np.abs(b), abs(A).multiply(np.abs(x)).max(axis=1).toarray().ravel()))
        resid = Ax - b if kind == "eq" else np.maximum(Ax - b, 0.0)
        bad = np.flatnonzero(np.abs(resid) > tol * scale)
        report.violations += [(f"{kind}:{lp.row_label(kind, i)}", float(resid[i])) for i in bad]
    below = np.flatnonzero(x < lp.lb - tol * np.maximum(1.0, np.abs(lp.lb)))
    above = np.flatnonzero(x > lp.ub + tol * np.maximum(1.0, np.abs(lp.ub)))
    report.violations += [(f"bound:{j}", float(x[j] - lp.lb[j])) for j in below]
    report.violations += [(f"bound:{j}", float(x[j] - lp.ub[j])) for j in above]

    primal = float(lp.c @ x)
    d = lp.c - lp.A_eq.T @ sol.y_eq - (lp.A_ub.T @ sol.y_ub if lp.n_ub else 0.0)
    dual = float(lp.b_eq @ sol.y_eq + (lp.b_ub @ sol.y_ub if lp.n_ub else 0.0))
    at_lb = d >= 0
    dual += float(lp.lb[at_lb] @ d[at_lb])
    neg = ~at_lb
    finite_ub = np.isfinite(lp.ub)
    dual += float(lp.ub[neg & finite_ub] @ d[neg & finite_ub])
    cscale = max(1.0, float(np.abs(lp.c).max(initial=0.0)))
    infeas = max(float(np.max(-d[neg & ~finite_ub], initial=0.0)),
                 float(np.max(sol.y_ub, initial=0.0)) if lp.n_ub else 0.0)
    report.primal_objective = primal
    report.dual_objective = dual
    report.dual_infeasibility = infeas / cscale
    if lp.scenario is not None and lp is sol.lp:
        report.cost_mismatch = abs(sol.recomputed_cost() - primal) / max(1.0, abs(primal))
    return report


def write_solution(directory: str | Path, sol: SectorSolution, start_year: int = 2030) -> list[Path]:
    """Capacities, wide hourly dispatch with prices, and raw solver vectors for exact reloading."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    caps, ecaps, gen = sol.capacities, sol.energy_capacities, sol.annual_generation()
    with open(d / "capacities.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["technology", "capacity_mw", "energy_capacity_mwh", "generation_mwh"])
        for t in sol.technologies:
            w.writerow([t.name, repr(caps[t.name]), repr(ecaps.get(t.name, 0.0)), repr(gen[t.name])])
    header = ["timestamp", "residual_demand_mwh"]
    cols = [sol.scenario.residual_demand]
    for name, v in sol.dispatch.items():
        header.append(f"gen_{name}")
        cols.append(v)
    for name, v in sol.charge.items():
        header.append(f"charge_{name}")
        cols.append(v)
    for name, v in sol.levels.items():
        header.append(f"level_{name}")
        cols.append(v)
    header += ["household_pv_spill_mwh", "price_aud_per_mwh"]
    cols += [sol.spill, sol.duals]
    write_columns(d / "dispatch.csv", header, year_timestamps(60, start_year), cols)
    for name in ("x", "y_eq", "y_ub"):
        np.save(d / f"{name}.npy", np.ascontiguousarray(getattr(sol, name), dtype=np.float64))
    (d / "objective.json").write_text(json.dumps({"objective": sol.objective, "backend": sol.backend}) + "\n",
                                      encoding="utf-8")
    return [d / f for f in ("capacities.csv", "dispatch.csv", "x.npy", "y_eq.npy", "y_ub.npy", "objective.json")]


def load_solution(directory: str | Path, scenario: SectorScenario) -> SectorSolution:
    """Rebuild a solution written by :func:`write_solution` for the same scenario."""
    d = Path(directory)
    lp = build_lp(scenario)
    x, y_eq, y_ub = (np.load(d / f"{n}.npy") for n in ("x", "y_eq", "y_ub"))
    if x.shape[0] != lp.n_vars or y_eq.shape[0] != lp.n_eq or y_ub.shape[0] != lp.n_ub:
        raise ValueError(f"{d}: stored solution does not fit the scenario")
    meta = json.loads((d / "objective.json").read_text(encoding="utf-8"))
    return SectorSolution(lp, x, y_eq, y_ub, float(meta["objective"]), meta.get("backend", ""))
