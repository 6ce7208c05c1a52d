import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from prosumage.fleet import (FleetSpec, build_residual, fleet_capacity, fleet_investments, read_residual,
                             reference_residual, representative_profile, write_residual)
from prosumage.household import (CostCurves, EconomicContext, HouseholdState, InvestmentDecision, TariffSchedule,
                                 run_dispatch, run_household, simulate_dispatch)
from prosumage.timeseries import HOURS_PER_YEAR, TimeSeries, Unit

HALF_HOURS = 2 * HOURS_PER_YEAR
ETA = math.sqrt(0.92)


def flat_dispatch(load, pv=0.0):
    """Dispatch of a household with a flat half-hourly load and PV but no battery."""
    return run_dispatch(np.full(HALF_HOURS, load), np.full(HALF_HOURS, pv), 0.0, 0.0, ETA)


def network(mwh_per_hour):
    return TimeSeries(np.full(HOURS_PER_YEAR, float(mwh_per_hour)), 60, Unit.MWH)


@pytest.fixture(scope="module")
def cohort(small_dataset):
    states = [HouseholdState().add(2025, 5.0, 0.0), HouseholdState().add(2026, 4.0, 9.0)]
    return [simulate_dispatch(p, s) for p, s in zip(small_dataset.profiles, states)]


def test_representative_mean_of_two():
    rep = representative_profile([flat_dispatch(1.0), flat_dispatch(3.0)])
    assert np.array_equal(rep.net_grid.values, np.full(HALF_HOURS, 2.0))
    assert rep.n_source == 2


def test_representative_of_single_household_is_itself(cohort):
    rep = representative_profile(cohort[:1])
    d = cohort[0]
    assert np.array_equal(rep.net_grid.values, d.grid_import - d.grid_export)
    assert np.array_equal(rep.demand.values, d.demand)
    assert np.array_equal(rep.pv_generation.values, d.pv_generation)


def test_representative_matches_plain_mean(cohort):
    rep = representative_profile(cohort)
    annual = [math.fsum((d.grid_import - d.grid_export).tolist()) for d in cohort]
    assert rep.net_grid.values.sum() == pytest.approx(sum(annual) / len(annual), rel=1e-12)


def test_representative_accepts_household_runs(small_dataset):
    econ = EconomicContext(TariffSchedule(fit_fraction=0.5))
    run = run_household(small_dataset.profiles[0], econ, range(2029, 2031))
    rep = representative_profile([run])
    assert rep.net_grid == run.net_grid()


def test_empty_cohort_rejected():
    with pytest.raises(ValueError):
        representative_profile([])
    with pytest.raises(ValueError):
        fleet_capacity([])
    with pytest.raises(ValueError):
        FleetSpec(0)


def test_residual_example():
    # 1.0 kWh/h underlying and -0.2 kWh/h net, as two half hours each
    d = run_dispatch(np.full(HALF_HOURS, 0.5), np.full(HALF_HOURS, 0.6), 0.0, 0.0, ETA)
    rd = build_residual(network(1000.0), representative_profile([d]), FleetSpec(500_000))
    np.testing.assert_allclose(rd.reduction.values, 600.0, rtol=1e-12)
    np.testing.assert_allclose(rd.residual.values, 400.0, rtol=1e-12)
    np.testing.assert_allclose(rd.household_pv.values, 600.0, rtol=1e-12)
    np.testing.assert_allclose(rd.household_net.values, -100.0, rtol=1e-12)


def test_no_prosumage_leaves_network_unchanged(cohort, small_dataset):
    demand = small_dataset.network_demand
    d = flat_dispatch(0.4)
    assert np.array_equal(build_residual(demand, representative_profile([d])).residual.values, demand.values)
    ref = reference_residual(demand, representative_profile(cohort))
    assert np.array_equal(ref.residual.values, demand.values)
    assert not ref.reduction.values.any()
    assert np.array_equal(ref.household_import.values, ref.household_demand.values)


def test_annual_accounting(cohort, small_dataset):
    rep = representative_profile(cohort)
    n = 500_000
    rd = build_residual(small_dataset.network_demand, rep, FleetSpec(n))
    expected = small_dataset.network_demand.values.sum() - n * (rep.demand.values.sum() - rep.net_grid.values.sum()) / 1000
    assert rd.residual.values.sum() == pytest.approx(expected, rel=1e-6)
    np.testing.assert_array_equal(rd.residual.values, small_dataset.network_demand.values - rd.reduction.values)


@given(st.integers(1, 2_000_000))
def test_doubling_fleet_doubles_reduction(n):
    d = run_dispatch(np.linspace(0.1, 1.0, HALF_HOURS), np.linspace(1.0, 0.0, HALF_HOURS), 3.0, 1.2, ETA)
    rep = representative_profile([d])
    one = build_residual(network(2000.0), rep, FleetSpec(n))
    two = build_residual(network(2000.0), rep, FleetSpec(2 * n))
    assert np.array_equal(two.reduction.values, 2 * one.reduction.values)


def test_length_and_unit_checks(cohort):
    rep = representative_profile(cohort)
    with pytest.raises(ValueError):
        build_residual(TimeSeries(np.ones(HOURS_PER_YEAR), 60, Unit.KWH), rep)


def test_residual_file_round_trip(tmp_path, cohort, small_dataset):
    rd = build_residual(small_dataset.network_demand, representative_profile(cohort), FleetSpec(123_456))
    path = tmp_path / "residual.csv"
    write_residual(path, rd)
    back = read_residual(path, 123_456)
    for name in ("residual", "network", "household_pv", "household_net", "household_demand", "household_import",
                 "reduction"):
        assert getattr(back, name) == getattr(rd, name), name
    assert back.annual_twh() == rd.annual_twh()


def test_fleet_capacity_and_investments():
    class Run:
        def __init__(self, pv, bat, decisions):
            self.installed_pv, self.installed_battery, self.decisions = pv, bat, decisions

    runs = [Run(5.0, 0.0, [InvestmentDecision(2019, 5.0, 0.0, 1.0, 2.0)]),
            Run(3.0, 10.0, [InvestmentDecision(2019, 3.0, 0.0, 1.0, 2.0), InvestmentDecision(2024, 0.0, 10.0, 1.0, 4.0)])]
    cap = fleet_capacity(runs, FleetSpec(500_000))
    assert cap.pv_mw == pytest.approx(2000.0)
    assert cap.battery_mwh == pytest.approx(2500.0)
    assert cap.battery_mw == pytest.approx(1000.0)
    costs = CostCurves.default()
    inv = fleet_investments(runs, costs, FleetSpec(500_000))
    assert [i.year for i in inv] == [2019, 2024]
    assert inv[0].pv_kwp == pytest.approx(2_000_000.0)
    assert inv[0].pv_capex == pytest.approx(2_000_000.0 * costs.pv(2019))
    assert inv[1].battery_capex == pytest.approx(2_500_000.0 * costs.battery(2024))
