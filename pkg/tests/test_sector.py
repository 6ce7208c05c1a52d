from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import annual_capacity_cost, capacity_grid_search
from prosumage.runner.verify import toy_scenario
from prosumage.sector import (DISPATCHABLE, STORAGE, VARIABLE_RENEWABLE, CatalogError, SectorScenario, SolveError,
                              Technology, annuitize, build_lp, default_catalog, get_backend, load_solution,
                              read_catalog, run_endogenous, scale_costs, solve, solve_scenario, validate_solution,
                              write_catalog, write_solution)

BACKENDS = ("highs", "highs-ds", "dense", "ipm")
BRUTE_FORCE_START = 3528  # a window where coal, wind and OCGT all enter the optimum


def catalog(*names, lower_bounds=True):
    techs = [t for t in default_catalog() if t.name in names]
    return techs if lower_bounds else [replace(t, capacity_lower_bound=0.0) for t in techs]


def window(ds, start, hours):
    sl = slice(start, start + hours)
    return ds.network_demand.values[sl], {"wind": ds.wind.values[sl], "pv": ds.pv.values[sl]}


def prorated(techs, hours):
    """Scale capacity costs to a horizon of ``hours`` so short instances have interior optima."""
    f = hours / 8760
    return [replace(t, overnight_cost_power=t.overnight_cost_power * f, overnight_cost_energy=t.overnight_cost_energy * f,
                    fixed_om=t.fixed_om * f) for t in techs]


@pytest.fixture(scope="module")
def storage_scenario(small_dataset):
    demand, avail = window(small_dataset, BRUTE_FORCE_START, 48)
    techs = prorated(catalog("ccgt", "ocgt", "wind", "pv", "li-ion", lower_bounds=False), 48)
    hh_pv = 300.0 * avail["pv"]
    return SectorScenario(demand, avail, techs, household_pv_generation=hh_pv, res_share=0.5)


# --------------------------------------------------------------------------- catalog


def test_annuity_examples():
    # amortisation oracle: payment = P r / (1 - (1 + r)^-n)
    ccgt = 1_254_000 * 0.04 / (1 - 1.04 ** -25)
    li_ion = 173_773 * 0.04 / (1 - 1.04 ** -15)
    assert annuitize(1_254_000, 25, 0.04) == pytest.approx(ccgt, rel=1e-12)
    assert round(annuitize(1_254_000, 25, 0.04)) == 80_271
    assert annuitize(173_773, 15, 0.04) == pytest.approx(li_ion, rel=1e-12)
    assert annuitize(173_773, 15, 0.04) == pytest.approx(15_629.33, abs=0.01)
    # the rounded reference figure of 15,628 is within 0.01 %
    assert annuitize(173_773, 15, 0.04) == pytest.approx(15_628, rel=1e-4)
    assert annuitize(5000, 10, 0.04) == pytest.approx(616.45, abs=1e-2)


def test_annuity_small_rate_limit():
    assert annuitize(1_000_000, 25, 1e-9) == pytest.approx(1_000_000 / 25, rel=1e-6)
    with pytest.raises(ValueError):
        annuitize(1.0, 0, 0.04)


def test_default_catalog_values():
    cat = {t.name: t for t in default_catalog()}
    assert [cat[n].overnight_cost_power for n in ("coal", "ccgt", "ocgt", "bio", "wind", "pv")] == [
        3_195_000, 1_254_000, 877_000, 12_432_000, 1_874_000, 817_000]
    assert (cat["li-ion"].overnight_cost_energy, cat["hydrogen"].overnight_cost_energy) == (173_773, 308)
    assert (cat["wind"].capacity_lower_bound, cat["pv"].capacity_lower_bound) == (419, 202)
    assert cat["coal"].marginal_cost() == pytest.approx(4.2 + 12.06 / 0.40)


def test_catalog_validation_and_csv_round_trip(tmp_path):
    with pytest.raises(CatalogError):
        Technology("x", DISPATCHABLE, fixed_om=-1.0)
    with pytest.raises(CatalogError):
        Technology("x", DISPATCHABLE, efficiency=1.5)
    with pytest.raises(CatalogError):
        Technology("x", VARIABLE_RENEWABLE)
    with pytest.raises(CatalogError):
        Technology("x", "nuclear")
    path = tmp_path / "catalog.csv"
    write_catalog(path, default_catalog())
    assert read_catalog(path) == default_catalog()


def test_cost_sensitivity_scales_only_its_group():
    scaled = {t.name: t for t in scale_costs(default_catalog(), pv_multiplier=0.8, battery_multiplier=1.2)}
    base = {t.name: t for t in default_catalog()}
    assert scaled["pv"].overnight_cost_power == pytest.approx(0.8 * base["pv"].overnight_cost_power)
    assert scaled["li-ion"].overnight_cost_energy == pytest.approx(1.2 * base["li-ion"].overnight_cost_energy)
    assert scaled["wind"] == base["wind"]
    assert scaled["hydrogen"] == base["hydrogen"]


# --------------------------------------------------------------------------- LP structure


def test_full_year_counts(small_dataset):
    ds = small_dataset
    s = SectorScenario(ds.network_demand.values, {"wind": ds.wind.values, "pv": ds.pv.values})
    lp = build_lp(s)
    H, gens, stores = 8760, 6, 2
    assert lp.eq_rows["balance"].size == H
    assert lp.n_vars == (gens + stores) + stores + gens * H + 3 * stores * H
    assert lp.n_eq == H + stores * H
    assert lp.n_ub == gens * H + 3 * stores * H + 1
    assert lp.row_label("eq", 17) == "balance[17]"
    hh = np.where(ds.pv.values > 0, 100.0, 0.0)
    with_pv = build_lp(replace(s, household_pv_generation=hh))
    assert with_pv.n_vars == lp.n_vars + int((hh > 0).sum())


def test_toy_structure():
    lp = build_lp(toy_scenario())
    assert lp.n_eq == 2
    assert lp.variables["cap"].size == 1
    text = lp.to_lp_format()
    assert text.startswith("\\ prosumage sector model\nMinimize")
    assert " balance(0): + 1.0 gen_0_0 = 1.0" in text
    assert " balance(1): + 1.0 gen_0_1 = 2.0" in text
    assert "Subject To" in text and text.rstrip().endswith("End")


def test_res_share_out_of_range_rejected():
    with pytest.raises(ValueError):
        SectorScenario(np.ones(2), {}, [Technology("p", DISPATCHABLE)], res_share=1.2)
    with pytest.raises(ValueError):
        SectorScenario(np.ones(2), {}, [Technology("p", DISPATCHABLE)], res_share=0.0)


# --------------------------------------------------------------------------- solving


@pytest.mark.parametrize("backend", BACKENDS)
def test_toy_lp(backend):
    sol = solve(build_lp(toy_scenario()), get_backend(backend))
    assert sol.objective == pytest.approx(35.0, abs=1e-6)
    assert sol.capacities["plant"] == pytest.approx(2.0, abs=1e-6)
    np.testing.assert_allclose(sol.dispatch["plant"], [1.0, 2.0], atol=1e-6)
    np.testing.assert_allclose(sol.duals, [5.0, 15.0], atol=1e-6)
    rep = validate_solution(sol)
    assert rep.ok, rep.summary()
    assert rep.dual_objective == pytest.approx(35.0, abs=1e-6)


@pytest.mark.parametrize("backend", ("highs", "dense"))
def test_zero_demand_costs_nothing(backend):
    s = SectorScenario(np.zeros(4), {}, [Technology("plant", DISPATCHABLE, 1000.0, fixed_om=10.0, variable_om=5.0)],
                       res_share=None)
    sol = solve(build_lp(s), get_backend(backend))
    assert sol.objective == pytest.approx(0.0, abs=1e-9)
    assert sol.capacities["plant"] == pytest.approx(0.0, abs=1e-9)


def test_48h_matches_capacity_grid_search(small_dataset):
    demand, avail = window(small_dataset, BRUTE_FORCE_START, 48)
    techs = prorated(catalog("coal", "wind", "ocgt", lower_bounds=False), 48)
    s = SectorScenario(demand, avail, techs, res_share=None)
    sol = solve(build_lp(s), get_backend("dense"))

    spec = {t.name: t for t in techs}

    def oracle_tech(name, profile):
        t = spec[name]
        return {"capacity_cost": annual_capacity_cost(t.overnight_cost_power, t.fixed_om, t.lifetime),
                "energy_cost": t.variable_om + t.fuel_cost / t.efficiency, "profile": profile}

    ones = np.ones(48)
    oracle = [oracle_tech("coal", ones), oracle_tech("wind", avail["wind"]), oracle_tech("ocgt", ones)]
    peak = demand.max()
    best, caps = capacity_grid_search(demand, oracle, [np.linspace(0, peak, 81), np.linspace(0, 3 * peak, 81)])
    assert sol.objective <= best * (1 + 1e-9)
    assert best == pytest.approx(sol.objective, rel=0.01)
    assert min(sol.capacities.values()) > 100  # all three technologies used


def test_backends_agree_with_storage(storage_scenario):
    lp = build_lp(storage_scenario)
    objectives = {}
    for name in BACKENDS:
        sol = solve(lp, get_backend(name))
        rep = validate_solution(sol)
        assert rep.ok, f"{name}: {rep.summary()}"
        objectives[name] = sol.objective
    ref = objectives["dense"]
    for name, obj in objectives.items():
        assert obj == pytest.approx(ref, rel=1e-6), name


def test_storage_conservation_and_cycle(storage_scenario):
    sol = solve_scenario(storage_scenario, get_backend("highs-ds"))
    s = storage_scenario
    supply = sum(sol.dispatch.values()) - sum(sol.charge.values()) - sol.spill
    np.testing.assert_allclose(supply, s.residual_demand, atol=1e-6 * s.residual_demand.max())
    ch, dis = sol.charge["li-ion"], sol.dispatch["li-ion"]
    assert ch.sum() > 1.0
    assert dis.sum() == pytest.approx(0.92 * ch.sum(), rel=1e-6)
    assert sol.renewable_share() >= 0.5 - 1e-6
    assert sol.res_dual is not None and sol.res_dual >= -1e-6
    assert sol.duals.min() >= -1e-6
    assert sol.recomputed_cost() == pytest.approx(sol.objective, rel=1e-6)


def test_perturbed_dispatch_flags_its_balance_row(small_dataset):
    demand, avail = window(small_dataset, BRUTE_FORCE_START, 48)
    s = SectorScenario(demand, avail, prorated(catalog("coal", "wind", "ocgt", lower_bounds=False), 48), res_share=None)
    sol = solve_scenario(s, get_backend("dense"))
    assert validate_solution(sol).violations == []
    ocgt = sol.dispatch["ocgt"]
    h = int(np.argmin(ocgt))
    assert ocgt[h] < sol.capacities["ocgt"] - 1
    names = [t.name for t in s.technologies if t.kind != STORAGE]
    j = sol.lp.variables["gen"].start + names.index("ocgt") * 48 + h
    x = sol.x.copy()
    x[j] += 1.0
    rep = validate_solution(replace(sol, x=x))
    assert [name for name, _ in rep.violations] == [f"eq:balance[{h}]"]
    assert rep.violations[0][1] == pytest.approx(1.0)
    assert not rep.ok


def test_infeasible_names_row_class(small_dataset):
    demand, avail = window(small_dataset, 0, 24)
    only_pv = SectorScenario(demand, avail, catalog("pv"), res_share=None)
    with pytest.raises(SolveError) as exc:
        solve_scenario(only_pv)
    assert exc.value.status == "infeasible"
    assert "balance" in str(exc.value)
    no_green = SectorScenario(demand, avail, catalog("coal", "ocgt", "pv"), res_share=1.0)
    with pytest.raises(SolveError) as exc:
        solve_scenario(no_green)
    assert "res_share" in str(exc.value) or "balance" in str(exc.value)


def test_endogenous_dominance():
    green = Technology("green", DISPATCHABLE, fixed_om=1.0, variable_om=1.0, renewable=True)
    plant = Technology("plant", DISPATCHABLE, fixed_om=10.0, variable_om=5.0)
    s = SectorScenario(np.array([1.0, 2.0, 3.0]), {}, [plant, green], res_share=0.4)
    sol, share = run_endogenous(s, get_backend("dense"))
    assert share == pytest.approx(1.0, abs=1e-9)
    assert "res_share" not in sol.lp.ub_rows


def test_endogenous_expensive_renewables_only_meet_lower_bound():
    demand = np.array([50.0, 60.0, 70.0, 40.0])
    avail = np.array([0.2, 0.9, 0.5, 0.0])
    wind = Technology("wind", VARIABLE_RENEWABLE, 1e9, fixed_om=1e6, variable_om=0.0, capacity_lower_bound=10.0,
                      availability="wind", renewable=True)
    plant = Technology("plant", DISPATCHABLE, fixed_om=10.0, variable_om=5.0)
    s = SectorScenario(demand, {"wind": avail}, [plant, wind], res_share="endogenous")
    sol, share = run_endogenous(s, get_backend("dense"))
    assert sol.capacities["wind"] == pytest.approx(10.0, abs=1e-9)
    assert share == pytest.approx(10.0 * avail.sum() / demand.sum(), abs=1e-9)


def test_cost_scaling_scales_objective_and_duals(storage_scenario):
    k = 3.0
    techs = [replace(t, overnight_cost_power=t.overnight_cost_power * k, overnight_cost_energy=t.overnight_cost_energy * k,
                     fixed_om=t.fixed_om * k, variable_om=t.variable_om * k, fuel_cost=t.fuel_cost * k)
             for t in storage_scenario.technologies]
    base = solve_scenario(storage_scenario, get_backend("dense"))
    scaled = solve_scenario(replace(storage_scenario, technologies=techs), get_backend("dense"))
    assert scaled.objective == pytest.approx(k * base.objective, rel=1e-9)
    np.testing.assert_allclose(scaled.x, base.x, rtol=1e-7, atol=1e-6)
    np.testing.assert_allclose(scaled.duals, k * base.duals, rtol=1e-7, atol=1e-6)


@st.composite
def small_instances(draw):
    hours = 24
    start = draw(st.integers(0, 8760 // hours - 1)) * hours
    scale = draw(st.floats(0.5, 1.5))
    lo, hi = sorted(draw(st.lists(st.floats(0.1, 0.6), min_size=2, max_size=2)))
    return start, scale, lo, hi


@given(small_instances())
@settings(max_examples=15)
def test_res_share_monotone_and_solutions_valid(small_dataset, args):
    start, scale, lo, hi = args
    demand, avail = window(small_dataset, start, 24)
    techs = prorated(catalog("ccgt", "ocgt", "wind", "pv", "li-ion", lower_bounds=False), 24)
    objs = []
    for share in (lo, hi):
        sol = solve_scenario(SectorScenario(demand * scale, avail, techs, res_share=share), get_backend("highs"))
        rep = validate_solution(sol)
        assert rep.ok, rep.summary()
        assert sol.duals.min() >= -1e-6
        assert sol.renewable_share() >= share - 1e-6
        objs.append(sol.objective)
    assert objs[1] >= objs[0] * (1 - 1e-9)


def test_solution_files_round_trip(tmp_path, storage_scenario):
    sol = solve_scenario(storage_scenario, get_backend("highs"))
    files = write_solution(tmp_path, sol)
    assert all(f.exists() for f in files)
    back = load_solution(tmp_path, storage_scenario)
    assert np.array_equal(back.x, sol.x)
    assert np.array_equal(back.duals, sol.duals)
    assert back.objective == sol.objective
    header = (tmp_path / "dispatch.csv").read_text().splitlines()[0]
    assert header.endswith("price_aud_per_mwh")
    with pytest.raises(ValueError):
        load_solution(tmp_path, toy_scenario())
