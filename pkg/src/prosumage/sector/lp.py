"""Construction of the annual least-cost dispatch and investment LP.

Canonical form handed to solvers::

    min c·x   s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  lb <= x <= ub

Variables and rows are laid out in named blocks so solutions and residuals can
be addressed by technology and hour.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from ..timeseries import TimeSeries
from .catalog import DISPATCHABLE, STORAGE, VARIABLE_RENEWABLE, Technology, default_catalog

ENDOGENOUS = "endogenous"


@dataclass
class SectorScenario:
    residual_demand: np.ndarray  # MWh per hour
    availability: dict[str, np.ndarray]
    technologies: Sequence[Technology] = field(default_factory=default_catalog)
    household_pv_generation: np.ndarray | None = None  # MWh per hour
    res_share: float | str | None = 0.49  # None or ENDOGENOUS drops the RES constraint
    interest_rate: float = 0.04
    gross_demand_includes_household_pv: bool = True
    name: str = ""

    def __post_init__(self):
        self.residual_demand = _as_hourly(self.residual_demand, "residual_demand")
        n = self.residual_demand.shape[0]
        if self.household_pv_generation is None:
            self.household_pv_generation = np.zeros(n)
        self.household_pv_generation = _as_hourly(self.household_pv_generation, "household_pv_generation")
        if self.household_pv_generation.shape[0] != n:
            raise ValueError("household PV series length differs from demand")
        if np.any(self.household_pv_generation < 0):
            raise ValueError("household PV generation must be non-negative")
        self.availability = {k: _as_hourly(v, f"availability[{k}]") for k, v in self.availability.items()}
        for k, v in self.availability.items():
            if v.shape[0] != n:
                raise ValueError(f"availability {k!r} length differs from demand")
            if v.min() < 0 or v.max() > 1:
                raise ValueError(f"availability {k!r} must lie in [0, 1]")
        if self.res_share == ENDOGENOUS:
            self.res_share = None
        if self.res_share is not None and not 0 < float(self.res_share) <= 1:
            raise ValueError(f"res_share must lie in (0, 1], got {self.res_share}")
        if self.interest_rate <= 0:
            raise ValueError("interest_rate must be positive")
        names = [t.name for t in self.technologies]
        if len(set(names)) != len(names):
            raise ValueError("duplicate technology names")
        for t in self.technologies:
            if t.kind == VARIABLE_RENEWABLE and t.availability not in self.availability:
                raise ValueError(f"{t.name}: availability profile {t.availability!r} not supplied")

    @property
    def hours(self) -> int:
        return self.residual_demand.shape[0]

    @property
    def endogenous(self) -> bool:
        return self.res_share is None

    def gross_demand(self) -> float:
        total = float(self.residual_demand.sum())
        if self.gross_demand_includes_household_pv:
            total += float(self.household_pv_generation.sum())
        return total


def _as_hourly(values, name) -> np.ndarray:
    if isinstance(values, TimeSeries):
        if values.step_minutes != 60:
            raise ValueError(f"{name} must be hourly")
        values = values.values
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be a finite 1-d series")
    return arr


@dataclass
class Block:
    start: int
    shape: tuple[int, ...]

    @property
    def size(self) -> int:
        return int(np.prod(self.shape)) if self.shape else 1

    @property
    def slice(self) -> slice:
        return slice(self.start, self.start + self.size)


class _Layout:
    def __init__(self):
        self.blocks: dict[str, Block] = {}
        self.n = 0

    def add(self, name: str, *shape: int) -> Block:
        b = Block(self.n, tuple(shape))
        self.blocks[name] = b
        self.n += b.size
        return b

    def label(self, i: int) -> str:
        for name, b in self.blocks.items():
            if b.start <= i < b.start + b.size:
                idx = np.unravel_index(i - b.start, b.shape) if b.shape else ()
                return f"{name}[{','.join(str(int(j)) for j in idx)}]"
        raise IndexError(i)


@dataclass
class LinearProgram:
    c: np.ndarray
    A_eq: sp.csr_matrix
    b_eq: np.ndarray
    A_ub: sp.csr_matrix
    b_ub: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    variables: dict[str, Block]
    eq_rows: dict[str, Block]
    ub_rows: dict[str, Block]
    scenario: SectorScenario | None = None
    spill_hours: np.ndarray | None = None

    @property
    def n_vars(self) -> int:
        return self.c.shape[0]

    @property
    def n_eq(self) -> int:
        return self.b_eq.shape[0]

    @property
    def n_ub(self) -> int:
        return self.b_ub.shape[0]

    def var(self, name: str, x: np.ndarray) -> np.ndarray:
        b = self.variables[name]
        return x[b.slice].reshape(b.shape) if b.shape else x[b.start]

    def row_label(self, kind: str, i: int) -> str:
        blocks = self.eq_rows if kind == "eq" else self.ub_rows
        for name, b in blocks.items():
            if b.start <= i < b.start + b.size:
                idx = np.unravel_index(i - b.start, b.shape) if b.shape else ()
                return f"{name}[{','.join(str(int(j)) for j in idx)}]"
        raise IndexError(i)

    def balance_rows(self) -> slice:
        return self.eq_rows["balance"].slice

    def to_lp_format(self) -> str:
        """CPLEX-LP text for cross-checking with external solvers."""
        out = io.StringIO()
        names = [_var_name(self, j) for j in range(self.n_vars)]
        out.write("\\ prosumage sector model\nMinimize\n obj:")
        _write_expr(out, self.c, names)
        out.write("\nSubject To\n")
        for kind, A, b, op in (("eq", self.A_eq, self.b_eq, "="), ("ub", self.A_ub, self.b_ub, "<=")):
            A = A.tocsr()
            for i in range(A.shape[0]):
                row = A.getrow(i)
                label = self.row_label(kind, i).replace("[", "(").replace("]", ")").replace(",", "_")
                out.write(f" {label}:")
                dense = np.zeros(self.n_vars)
                dense[row.indices] = row.data
                _write_expr(out, dense, names)
                out.write(f" {op} {float(b[i])!r}\n")
        out.write("Bounds\n")
        for j in range(self.n_vars):
            hi = "+inf" if np.isinf(self.ub[j]) else repr(float(self.ub[j]))
            out.write(f" {float(self.lb[j])!r} <= {names[j]} <= {hi}\n")
        out.write("End\n")
        return out.getvalue()


def _var_name(lp: LinearProgram, j: int) -> str:
    for name, b in lp.variables.items():
        if b.start <= j < b.start + b.size:
            idx = np.unravel_index(j - b.start, b.shape) if b.shape else ()
            return name + "".join(f"_{int(i)}" for i in idx)
    raise IndexError(j)


def _write_expr(out, coeffs, names):
    nz = np.flatnonzero(coeffs)
    if nz.size == 0:
        out.write(f" 0 {names[0]}")
    for j in nz:
        v = float(coeffs[j])
        out.write(f" {'+' if v >= 0 else '-'} {abs(v)!r} {names[j]}")


def build_lp(s: SectorScenario) -> LinearProgram:
    """Assemble objective, hourly balance, capacity, storage and RES-share rows."""
    H = s.hours
    techs = list(s.technologies)
    gens = [t for t in techs if t.kind in (DISPATCHABLE, VARIABLE_RENEWABLE)]
    stores = [t for t in techs if t.kind == STORAGE]
    hh_pv = s.household_pv_generation
    spill_hours = np.flatnonzero(hh_pv > 0)

    vl = _Layout()
    v_cap = vl.add("cap", len(techs))
    v_ecap = vl.add("energy_cap", len(stores))
    v_gen = vl.add("gen", len(gens), H)
    v_ch = vl.add("charge", len(stores), H)
    v_dis = vl.add("discharge", len(stores), H)
    v_lvl = vl.add("level", len(stores), H)
    v_spill = vl.add("spill", spill_hours.size)
    n = vl.n

    c = np.zeros(n)
    lb = np.zeros(n)
    ub = np.full(n, np.inf)
    tech_idx = {t.name: i for i, t in enumerate(techs)}
    for i, t in enumerate(techs):
        c[v_cap.start + i] = t.annual_power_cost(s.interest_rate)
        lb[v_cap.start + i] = t.capacity_lower_bound
    for k, t in enumerate(stores):
        c[v_ecap.start + k] = t.annual_energy_cost(s.interest_rate)
    for g, t in enumerate(gens):
        c[v_gen.start + g * H: v_gen.start + (g + 1) * H] = t.marginal_cost()
    for k, t in enumerate(stores):
        c[v_dis.start + k * H: v_dis.start + (k + 1) * H] = t.marginal_cost()
    ub[v_spill.slice] = hh_pv[spill_hours]

    hours = np.arange(H)
    eq = _Rows()
    ubr = _Rows()

    # hourly balance: gen + discharge - charge - spill = residual demand
    r = eq.block("balance", H)
    for g in range(len(gens)):
        eq.add(r + hours, v_gen.start + g * H + hours, 1.0)
    for k in range(len(stores)):
        eq.add(r + hours, v_dis.start + k * H + hours, 1.0)
        eq.add(r + hours, v_ch.start + k * H + hours, -1.0)
    eq.add(r + spill_hours, v_spill.start + np.arange(spill_hours.size), -1.0)
    eq.rhs(r, s.residual_demand)

    # storage level dynamics, cyclic over the year
    for k, t in enumerate(stores):
        r = eq.block(f"level[{t.name}]", H)
        eta = t.one_way_efficiency
        base = v_lvl.start + k * H
        eq.add(r + hours, base + hours, 1.0)
        eq.add(r + hours, base + (hours - 1) % H, -1.0)
        eq.add(r + hours, v_ch.start + k * H + hours, -eta)
        eq.add(r + hours, v_dis.start + k * H + hours, 1.0 / eta)
        eq.rhs(r, np.zeros(H))

    # generation within available capacity; spare VRE output is curtailed
    for g, t in enumerate(gens):
        r = ubr.block(f"gen_cap[{t.name}]", H)
        avail = s.availability[t.availability] if t.kind == VARIABLE_RENEWABLE else np.ones(H)
        ubr.add(r + hours, v_gen.start + g * H + hours, 1.0)
        ubr.add(r + hours, np.full(H, v_cap.start + tech_idx[t.name]), -avail)
        ubr.rhs(r, np.zeros(H))

    for k, t in enumerate(stores):
        cap_col = np.full(H, v_cap.start + tech_idx[t.name])
        for name, blk in (("charge_cap", v_ch), ("discharge_cap", v_dis)):
            r = ubr.block(f"{name}[{t.name}]", H)
            ubr.add(r + hours, blk.start + k * H + hours, 1.0)
            ubr.add(r + hours, cap_col, -1.0)
            ubr.rhs(r, np.zeros(H))
        r = ubr.block(f"level_cap[{t.name}]", H)
        ubr.add(r + hours, v_lvl.start + k * H + hours, 1.0)
        ubr.add(r + hours, np.full(H, v_ecap.start + k), -1.0)
        ubr.rhs(r, np.zeros(H))

    if not s.endogenous:
        # renewable gen + (household PV - spill) >= share * gross demand, negated into <= form
        r = ubr.block("res_share", 1)
        for g, t in enumerate(gens):
            if t.renewable:
                ubr.add(np.full(H, r), v_gen.start + g * H + hours, -1.0)
        ubr.add(np.full(spill_hours.size, r), v_spill.start + np.arange(spill_hours.size), 1.0)
        ubr.rhs(r, np.array([float(hh_pv.sum()) - float(s.res_share) * s.gross_demand()]))

    A_eq, b_eq = eq.matrix(n)
    A_ub, b_ub = ubr.matrix(n)
    return LinearProgram(c, A_eq, b_eq, A_ub, b_ub, lb, ub, vl.blocks, eq.blocks, ubr.blocks, s,
                         spill_hours)


class _Rows:
    def __init__(self):
        self.blocks: dict[str, Block] = {}
        self.n = 0
        self.rows: list[np.ndarray] = []
        self.cols: list[np.ndarray] = []
        self.vals: list[np.ndarray] = []
        self.b: list[np.ndarray] = []

    def block(self, name: str, size: int) -> int:
        self.blocks[name] = Block(self.n, (size,))
        start = self.n
        self.n += size
        return start

    def add(self, rows, cols, vals):
        rows = np.asarray(rows)
        self.rows.append(rows)
        self.cols.append(np.asarray(cols))
        self.vals.append(np.broadcast_to(np.asarray(vals, dtype=np.float64), rows.shape))

    def rhs(self, start: int, values):
        self.b.append(np.asarray(values, dtype=np.float64))

    def matrix(self, n_cols: int):
        if not self.rows:
            return sp.csr_matrix((0, n_cols)), np.zeros(0)
        A = sp.coo_matrix((np.concatenate(self.vals), (np.concatenate(self.rows), np.concatenate(self.cols))),
                          shape=(self.n, n_cols)).tocsr()
        A.sum_duplicates()
        return A, np.concatenate(self.b)
