"""Independent re-implementations used as test oracles.

These deliberately avoid the package's household and sector code paths: the
investment enumeration runs its own vectorised dispatch, degradation, bill and
payback arithmetic, and the capacity oracle searches a grid of plant sizes
with merit-order dispatch instead of solving an LP.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

# household parameters, restated from the model description
E2P = 2.5
ROUNDTRIP = 0.92
BAT_LIFE, BAT_EOL = 10, 0.70
PV_LIFE, PV_EOL = 25, 0.80
RETAIL_2019, ESCALATION = 0.29, 0.04
FIT_CAP_KWP = 5.0
DISCOUNT = 0.05
HORIZON = 10
DPP_LIMIT = 5.0
PV_GRID = [0.5 * i for i in range(21)]
BAT_GRID = [float(i) for i in range(19)]


def fade(age, life, eol):
    if age < 0 or age > life:
        return 0.0
    return 1.0 - (1.0 - eol) * age / life


def batch_dispatch(demand, pv_yield, kwp, kwh, step_h=0.5):
    """Greedy self-consumption for many systems at once; returns (imports, exports)."""
    eta = math.sqrt(ROUNDTRIP)
    kwp = np.asarray(kwp, dtype=float)
    kwh = np.asarray(kwh, dtype=float)
    lim = kwh / E2P * step_h
    soc = np.zeros_like(kwh)
    imp = np.zeros_like(kwh)
    exp = np.zeros_like(kwh)
    for load, y in zip(demand.tolist(), pv_yield.tolist()):
        net = y * kwp - load
        surplus = np.maximum(net, 0.0)
        deficit = np.maximum(-net, 0.0)
        ch = np.minimum(np.minimum(surplus, lim), np.maximum((kwh - soc) / eta, 0.0))
        dis = np.minimum(np.minimum(deficit, lim), soc * eta)
        soc = np.minimum(np.maximum(soc + ch * eta - dis / eta, 0.0), kwh)
        exp += surplus - ch
        imp += deficit - dis
    return imp, exp


def payback(capex, savings):
    if capex <= 0:
        return 0.0
    cum = 0.0
    for k, s in enumerate(savings):
        d = s / (1 + DISCOUNT) ** (k + 1)
        if d > 0 and cum + d >= capex:
            return k + (capex - cum) / d
        cum += d
    return math.inf


class Enumeration:
    """Exhaustive search over the 21 x 19 grid for one household and year.

    ``vintages`` lists existing (install_year, kWp, kWh) additions. Dispatch
    totals are FiT independent, so :meth:`decide` can be called for several
    FiT fractions after one simulation.
    """

    def __init__(self, demand, pv_yield, year, pv_cost, bat_cost, vintages=()):
        self.year = year
        self.pv_cost, self.bat_cost = pv_cost, bat_cost
        alive_pv = sum(p for y0, p, _ in vintages if 0 <= year - y0 <= PV_LIFE)
        alive_bat = sum(b for y0, _, b in vintages if 0 <= year - y0 <= BAT_LIFE)
        self.points = [(p, b) for p, b in itertools.product(PV_GRID, BAT_GRID)
                       if p <= 10.0 - alive_pv + 1e-9 and b <= 18.0 - alive_bat + 1e-9]
        cols = []
        for k in range(1, HORIZON + 1):
            yk = year + k
            pv0 = sum(p * fade(yk - y0, PV_LIFE, PV_EOL) for y0, p, _ in vintages)
            bat0 = sum(b * fade(yk - y0, BAT_LIFE, BAT_EOL) for y0, _, b in vintages)
            nominal0 = sum(p for y0, p, _ in vintages if 0 <= yk - y0 <= PV_LIFE)
            for p, b in self.points:
                cols.append((k, pv0 + p * fade(k, PV_LIFE, PV_EOL), bat0 + b * fade(k, BAT_LIFE, BAT_EOL),
                             nominal0 + (p if k <= PV_LIFE else 0.0)))
        self.cols = cols
        imp, exp = batch_dispatch(np.asarray(demand), np.asarray(pv_yield), [c[1] for c in cols],
                                  [c[2] for c in cols])
        self.imp = imp.reshape(HORIZON, len(self.points))
        self.exp = exp.reshape(HORIZON, len(self.points))
        self.nominal = np.array([c[3] for c in cols]).reshape(HORIZON, len(self.points))

    def table(self, fit):
        """(points, capex, npv, dpp) for every feasible addition."""
        savings = np.empty((len(self.points), HORIZON))
        for k in range(1, HORIZON + 1):
            rate = RETAIL_2019 * (1 + ESCALATION) ** (self.year + k - 2019)
            paid = np.where(self.nominal[k - 1] <= FIT_CAP_KWP + 1e-9, fit * rate, 0.0)
            bill = rate * self.imp[k - 1] - paid * self.exp[k - 1]
            savings[:, k - 1] = bill[0] - bill
        capex = np.array([p * self.pv_cost + b * self.bat_cost for p, b in self.points])
        disc = np.array([(1 + DISCOUNT) ** -k for k in range(1, HORIZON + 1)])
        npv = savings @ disc - capex
        npv[0] = 0.0
        dpp = np.array([payback(c, s) for c, s in zip(capex, savings)])
        return self.points, capex, npv, dpp

    def decide(self, fit):
        points, capex, npv, dpp = self.table(fit)
        best = min(range(len(points)), key=lambda i: (-npv[i], capex[i], points[i][1]))
        if npv[best] <= 0:
            return None
        if not any(dpp[i] <= DPP_LIMIT for i in range(1, len(points))):
            return None
        return points[best]


# --------------------------------------------------------------------------- sector


def annual_capacity_cost(overnight, fixed_om, lifetime, rate=0.04):
    return overnight * rate / (1 - (1 + rate) ** -lifetime) + fixed_om


def merit_order_cost(demand, techs, caps):
    """Cost of serving ``demand`` with fixed capacities, cheapest energy first.

    ``techs`` are dicts with ``capacity_cost``, ``energy_cost`` and ``profile``
    (availability, 1.0 for dispatchable plant). The last technology is the
    peaker and is sized to whatever is left over.
    """
    order = sorted(range(len(techs) - 1), key=lambda i: techs[i]["energy_cost"])
    remaining = np.asarray(demand, dtype=float).copy()
    cost = 0.0
    for i in order:
        out = np.minimum(remaining, caps[i] * techs[i]["profile"])
        remaining -= out
        cost += caps[i] * techs[i]["capacity_cost"] + techs[i]["energy_cost"] * out.sum()
    peak = techs[-1]
    cost += remaining.max() * peak["capacity_cost"] + peak["energy_cost"] * remaining.sum()
    return cost


def capacity_grid_search(demand, techs, grids):
    """Minimum of :func:`merit_order_cost` over the Cartesian product of ``grids``."""
    best = math.inf
    best_caps = None
    for caps in itertools.product(*grids):
        c = merit_order_cost(demand, techs, caps)
        if c < best:
            best, best_caps = c, caps
    return best, best_caps
