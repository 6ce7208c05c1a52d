"""Bills and discounted-cashflow metrics for household investments."""
from __future__ import annotations

import math

import numpy as np

from .dispatch import DispatchResult
from .specs import HouseholdState, PVSpec, TariffSchedule

NEVER = math.inf


def fit_eligible(installed_pv_kwp, tariff: TariffSchedule):
    # systems above the cap forfeit all export revenue, not just the excess
    return np.asarray(installed_pv_kwp) <= tariff.fit_eligibility_cap + 1e-9


def bill_from_totals(imports, exports, tariff: TariffSchedule, year: int, installed_pv_kwp):
    """Vectorised annual bill from import/export totals (kWh)."""
    revenue = tariff.fit_rate(year) * np.asarray(exports) * fit_eligible(installed_pv_kwp, tariff)
    return tariff.rate(year) * np.asarray(imports) - revenue + tariff.fixed_charges()


def annual_bill(d: DispatchResult, tariff: TariffSchedule, state: HouseholdState, year: int,
                pv_spec: PVSpec = PVSpec()) -> float:
    return float(bill_from_totals(d.total_import, d.total_export, tariff, year,
                                  state.nominal_pv(year, pv_spec)))


def discount_factors(rate: float, horizon: int) -> np.ndarray:
    return (1.0 + rate) ** -np.arange(1, horizon + 1, dtype=np.float64)


def npv(capex, savings, rate: float):
    """``-capex + Σ_k savings_k / (1+r)^k``; ``savings`` may be (n, horizon)."""
    savings = np.asarray(savings, dtype=np.float64)
    return savings @ discount_factors(rate, savings.shape[-1]) - np.asarray(capex, dtype=np.float64)


def discounted_payback(capex: float, savings, rate: float) -> float:
    """Years until cumulative discounted savings cover ``capex`` (``NEVER`` if not in horizon).

    The crossing year is interpolated linearly.
    """
    if capex <= 0:
        return 0.0
    disc = np.asarray(savings, dtype=np.float64) * discount_factors(rate, len(savings))
    cum = 0.0
    for k, d in enumerate(disc):
        if cum + d >= capex and d > 0:
            return k + (capex - cum) / d
        cum += d
    return NEVER


def discounted_payback_many(capex, savings, rate: float) -> np.ndarray:
    savings = np.atleast_2d(savings)
    capex = np.broadcast_to(np.asarray(capex, dtype=np.float64), savings.shape[:1])
    return np.array([discounted_payback(c, s, rate) for c, s in zip(capex, savings)])
