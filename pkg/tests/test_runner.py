import json
import shutil
from datetime import datetime, timedelta

import numpy as np
import pytest

from runs import make_run, tree_bytes
from prosumage.cli import main
from prosumage.runner.config import ConfigError, RunConfig, load_config, load_inputs, parse_config
from prosumage.runner.matrix import FAILED, OK, plan_matrix, run_matrix
from prosumage.runner.reproduction import convert_ausgrid, convert_interval_demand, evaluate_claims, write_claims
from prosumage.timeseries import HOURS_PER_YEAR, ParseError, ingest_profiles, read_series

MINIMAL = {"inputs": {"profiles": "p.csv", "network_demand": "d.csv"}}


def _raw(**sections):
    raw = {k: dict(v) for k, v in MINIMAL.items()}
    for name, body in sections.items():
        raw.setdefault(name, {}).update(body)
    return raw


# --------------------------------------------------------------------------- configuration


def test_minimal_config_defaults(tmp_path):
    cfg = parse_config(_raw(), tmp_path)
    assert cfg.profiles == tmp_path / "p.csv"
    assert cfg.fit_fractions == (0.0, 0.25, 0.5)
    assert cfg.res_shares == (0.39, 0.49, 0.59)
    assert cfg.n_households == 500_000
    assert cfg.output == tmp_path / "results"


@pytest.mark.parametrize("raw", [
    {},
    {"inputs": {"profiles": "p.csv"}},
    _raw(solver={"x": 1}),
    _raw(households={"fit": [0.5, 0.5]}),
    _raw(households={"fit": [1.5]}),
    _raw(households={"fit": "0.5"}),
    _raw(households={"first_year": 2018}),
    _raw(sector={"res_share": [0.0]}),
    _raw(sector={"res_share": [1.2]}),
    _raw(sector={"res_share": ["lots"]}),
    _raw(sector={"backend": "cplex"}),
    _raw(sector={"interest": 0.04}),
    _raw(fleet={"n_households": 0}),
    _raw(fleet={"n_households": True}),
    _raw(sensitivity={"fleet_sizes": [400000, 400000]}),
    _raw(sensitivity={"pv_cost": [0.0]}),
], ids=lambda r: json.dumps(r)[:60])
def test_bad_configs_rejected(tmp_path, raw):
    with pytest.raises(ConfigError):
        parse_config(raw, tmp_path)


def test_endogenous_res_share_accepted(tmp_path):
    assert parse_config(_raw(sector={"res_share": [0.49, "endogenous"]}), tmp_path).res_shares == (0.49, "endogenous")


def test_load_config_errors_name_the_file(tmp_path):
    with pytest.raises(ConfigError, match="no such file"):
        load_config(tmp_path / "missing.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("[inputs\n")
    with pytest.raises(ConfigError, match="bad.toml"):
        load_config(bad)


def test_inputs_checked_before_compute(tmp_path):
    path = make_run(tmp_path)
    (tmp_path / "pv_availability.csv").unlink()
    with pytest.raises(ConfigError, match="availability.pv"):
        load_inputs(load_config(path))
    # the catalog's PV technology needs an availability profile the config no longer provides
    path.write_text(path.read_text().replace('pv = "pv_availability.csv"\n', ""))
    with pytest.raises(ConfigError, match="availability profile 'pv'"):
        load_inputs(load_config(path))


# --------------------------------------------------------------------------- planning


def test_default_plan_counts(tmp_path):
    plan = plan_matrix(parse_config(_raw(), tmp_path))
    assert len(plan.household_keys) == 3
    assert len(plan.cells) == 9 and len(plan.references) == 3
    assert len(plan.solves) == 12


def test_single_cell_plan(tmp_path):
    plan = plan_matrix(parse_config(_raw(households={"fit": [0.25]}, sector={"res_share": [0.49]}), tmp_path))
    assert [c.id for c in plan.solves] == ["ref_res0.49_pv1_bat1", "fit0.25_res0.49_pv1_bat1_n500000"]


def test_full_sweep_plan_counts(tmp_path):
    cfg = parse_config(_raw(sensitivity={"pv_cost": [0.8, 1.0, 1.2], "battery_cost": [0.8, 1.0, 1.2],
                                         "fleet_sizes": [400000, 500000, 600000]}), tmp_path)
    plan = plan_matrix(cfg)
    assert len(plan.household_keys) == 3 + 2 * 3 + 2 * 3
    assert len(plan.cells) == 9 + 2 * 9 + 2 * 9 + 2 * 9
    assert len(plan.references) == 3 + 2 * 3 + 2 * 3
    ref_ids = {r.id for r in plan.references}
    assert all(c.reference.id in ref_ids for c in plan.cells)
    assert len({c.id for c in plan.solves}) == len(plan.solves)


# --------------------------------------------------------------------------- running


@pytest.fixture(scope="module")
def finished_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("run")
    cfg = load_config(make_run(root))
    result = run_matrix(cfg, root / "out")
    return cfg, result, root / "out"


def test_matrix_outputs(finished_run):
    cfg, result, out = finished_run
    assert result.exit_code == 0
    assert {s.status for s in result.statuses.values()} == {OK}
    cell = "fit0.5_res0.49_pv1_bat1_n500000"
    assert cell in result.deltas
    for name in ("delta.csv", "rldc.csv", "segments.csv"):
        assert (out / "analysis" / cell / name).is_file()
    assert (out / "summary.csv").read_text().startswith("cell,status,")


def test_manifest_is_relative(finished_run, tmp_path_factory):
    cfg, result, out = finished_run
    text = (out / "manifest.json").read_text()
    manifest = json.loads(text)
    assert str(cfg.base_dir) not in text and "/tmp" not in text
    assert manifest["config"]["inputs"]["profiles"] == "household_profiles.csv"
    assert set(manifest["inputs"]) >= {"profiles", "network_demand", "catalog", "availability.pv"}
    refs = {c["id"] for c in manifest["cells"] if c["kind"] == "reference"}
    assert all(c["reference"] in refs for c in manifest["cells"] if c["kind"] == "prosumage")


def test_rerun_reuses_every_stage(finished_run, tmp_path):
    cfg, _, out = finished_run
    copy = tmp_path / "out"
    shutil.copytree(out, copy)
    before = tree_bytes(copy)
    stamps = {p: p.stat().st_mtime_ns for p in copy.rglob("*.npy")}
    result = run_matrix(cfg, copy)
    assert result.exit_code == 0
    assert tree_bytes(copy) == before
    assert {p: p.stat().st_mtime_ns for p in copy.rglob("*.npy")} == stamps


def test_cached_households_equal_fresh_recomputation(finished_run, tmp_path):
    cfg, _, out = finished_run
    copy = tmp_path / "out"
    shutil.copytree(out, copy)
    before = tree_bytes(copy)
    shutil.rmtree(copy / "households")
    shutil.rmtree(copy / "cells" / "fit0.5_res0.49_pv1_bat1_n500000")
    # a stage killed mid-write leaves only a temporary sibling behind
    (copy / "cells" / "fit0.5_res0.49_pv1_bat1_n500000.tmp").mkdir()
    run_matrix(cfg, copy)
    after = tree_bytes(copy)
    assert not (copy / "cells" / "fit0.5_res0.49_pv1_bat1_n500000.tmp").exists()
    assert after == before


def test_failing_cell_does_not_stop_others(tmp_path, capsys):
    path = make_run(tmp_path, res=(0.49, 1.0), techs=("ccgt", "ocgt", "pv"))
    code = main(["matrix", "--config", str(path), "--out", str(tmp_path / "out")])
    assert code == 2
    result = run_matrix(load_config(path), tmp_path / "out")
    status = {cid: st.status for cid, st in result.statuses.items()}
    assert status["ref_res0.49_pv1_bat1"] == OK and status["fit0.5_res0.49_pv1_bat1_n500000"] == OK
    assert status["ref_res1_pv1_bat1"] == FAILED and status["fit0.5_res1_pv1_bat1_n500000"] == FAILED
    assert "fit0.5_res0.49_pv1_bat1_n500000" in result.deltas
    info = json.loads((tmp_path / "out" / "cells" / "ref_res1_pv1_bat1" / "cell.json").read_text())
    assert info["status"] == FAILED and "infeasible" in info["message"]


def test_claims_on_a_partial_run(finished_run, tmp_path):
    _, result, _ = finished_run
    claims = evaluate_claims(result)
    assert {c.id for c in claims} == {"9", "10", "11", "12", "13", "14", "15", "a"}
    # only FiT 50% at 49% was run, so the claims needing other cells say so instead of passing
    assert all(not c.ok for c in claims if c.id in ("10", "12", "13"))
    assert any("not evaluable" in c.detail for c in claims)
    write_claims(tmp_path / "claims.csv", claims)
    assert (tmp_path / "claims.csv").read_text().startswith("criterion,status,description,detail\n")


# --------------------------------------------------------------------------- CLI


def test_cli_verify_exit_codes(capsys):
    assert main(["verify"]) == 0
    assert "FAIL" not in capsys.readouterr().out
    assert main(["verify", "--solver-tolerance", "1e-2"]) == 1
    out = capsys.readouterr().out
    assert "FAIL  48-h LP validation" in out


def test_cli_bad_config_exit_code(tmp_path, capsys):
    path = tmp_path / "config.toml"
    path.write_text("[inputs]\nprofiles = 'p.csv'\n")
    assert main(["matrix", "--config", str(path)]) == 1
    assert "network_demand" in capsys.readouterr().err


def test_cli_sector_and_analyze(finished_run, tmp_path, capsys):
    cfg, _, out = finished_run
    copy = tmp_path / "out"
    shutil.copytree(out, copy)
    config = str(cfg.base_dir / "config.toml")
    assert main(["sector", "--config", config, "--out", str(copy), "--fit", "0.5", "--res", "0.49"]) == 0
    assert capsys.readouterr().out.startswith("ok fit0.5_res0.49_pv1_bat1_n500000")
    assert main(["analyze", "--config", config, "--out", str(copy)]) == 0
    assert main(["analyze", "--config", config, "--out", str(tmp_path / "empty")]) == 1


def test_cli_synth_writes_loadable_config(tmp_path):
    assert main(["synth", "--out", str(tmp_path), "--households", "2"]) == 0
    inputs = load_inputs(load_config(tmp_path / "config.toml"))
    assert len(inputs.profiles) == 2
    assert main(["verify", "--config", str(tmp_path / "config.toml"), "--backend", "highs"]) == 0


# --------------------------------------------------------------------------- converters


def _ausgrid_rows(cid, capacity, category, day_values):
    return [f"{cid},1234,{capacity},{category},{d:%d/%m/%Y}," + ",".join(map(str, v)) for d, v in day_values]


def test_convert_ausgrid(tmp_path):
    days = [datetime(2012, 1, 1) + timedelta(days=i) for i in range(366)]  # a leap year
    gc = [(d, [0.5] * 48) for d in days]
    cl = [(d, [0.1 if d.month == 2 and d.day == 29 else 0.25] * 48) for d in days]
    gg = [(d, [0.0] * 20 + [1.2] * 8 + [0.0] * 20) for d in days]
    lines = ["Solar home electricity data,,,,", "Customer,Postcode,Generator Capacity,Consumption Category,date,"
             + ",".join(f"{h // 2}:{30 * (h % 2):02d}" for h in range(1, 49))]
    lines += _ausgrid_rows(1, 3.0, "GC", gc) + _ausgrid_rows(1, 3.0, "CL", cl) + _ausgrid_rows(1, 3.0, "GG", gg)
    lines += _ausgrid_rows(2, 0.0, "GC", gc) + _ausgrid_rows(2, 0.0, "GG", gg)
    src = tmp_path / "ausgrid.csv"
    src.write_text("\n".join(lines) + "\n")
    skipped = convert_ausgrid([src], tmp_path / "profiles.csv")
    assert skipped == {"c2": "non-positive generator capacity"}
    (p,) = ingest_profiles(tmp_path / "profiles.csv").profiles
    assert p.household_id == "c1"
    assert np.all(p.demand.values == 0.75)
    assert p.pv_yield.values[:48].tolist() == [0.0] * 20 + [1.2 / 3.0] * 8 + [0.0] * 20
    assert p.demand.values.sum() == pytest.approx(0.75 * 17520)


def test_convert_ausgrid_partial_year_is_rejected_at_ingest(tmp_path):
    days = [datetime(2013, 1, 1) + timedelta(days=i) for i in range(200)]
    header = "Customer,Postcode,Generator Capacity,Consumption Category,date," + ",".join(str(i) for i in range(48))
    lines = [header] + _ausgrid_rows(5, 2.0, "GC", [(d, [0.3] * 48) for d in days])
    lines += _ausgrid_rows(5, 2.0, "GG", [(d, [0.0] * 48) for d in days])
    src = tmp_path / "part.csv"
    src.write_text("\n".join(lines) + "\n")
    convert_ausgrid([src], tmp_path / "profiles.csv")
    report = ingest_profiles(tmp_path / "profiles.csv")
    assert report.profiles == [] and set(report.rejected) == {"c5"}


def test_convert_interval_demand(tmp_path):
    start = datetime(2030, 1, 1)
    steps = [start + timedelta(minutes=30 * i) for i in range(2 * HOURS_PER_YEAR)]
    mw = [1000.0 + (i % 2) * 200.0 for i in range(len(steps))]
    src = tmp_path / "demand.csv"
    src.write_text("SETTLEMENTDATE,TOTALDEMAND\n" + "".join(f"{t:%Y/%m/%d %H:%M},{v}\n" for t, v in zip(steps, mw)))
    out = tmp_path / "network.csv"
    convert_interval_demand(src, out, "SETTLEMENTDATE", "TOTALDEMAND", "MW", "%Y/%m/%d %H:%M")
    series = read_series(out)
    assert np.all(series.values == 1100.0)
    lines = src.read_text().splitlines()
    src.write_text("\n".join(lines[:100] + lines[101:]) + "\n")
    with pytest.raises(ParseError):
        convert_interval_demand(src, out, "SETTLEMENTDATE", "TOTALDEMAND", "MW", "%Y/%m/%d %H:%M")


def test_cli_convert_demand_error_exit(tmp_path, capsys):
    src = tmp_path / "demand.csv"
    src.write_text("t,v\n2030-01-01 00:00:00,abc\n")
    assert main(["convert-demand", str(src), "--out", str(tmp_path / "o.csv"), "--timestamp", "t",
                 "--column", "v"]) == 1
    assert ":2:" in capsys.readouterr().err


def test_run_config_describe_is_json(tmp_path):
    cfg = RunConfig(tmp_path, tmp_path / "p.csv", tmp_path / "d.csv", {"pv": tmp_path / "a" / "pv.csv"})
    desc = cfg.describe()
    json.dumps(desc)
    assert desc["inputs"]["availability"] == {"pv": "a/pv.csv"}
