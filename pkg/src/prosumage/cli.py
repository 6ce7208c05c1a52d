"""Command-line entry point: ``prosumage <command> ...``.

Exit codes: 0 success, 1 validation failure (bad config or inputs, a solution
failing validation, a failed verify check), 2 solve failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import synthetic
from .fleet import write_residual
from .runner import matrix as mx
from .runner import reproduction
from .runner.config import ConfigError, load_config, load_inputs
from .runner.verify import verify
from .sector import default_catalog, write_catalog
from .sector.solvers import BACKENDS

logger = logging.getLogger("prosumage")

EXIT_OK, EXIT_INVALID, EXIT_SOLVE = 0, 1, 2

SYNTH_CONFIG = """\
# Bundled synthetic dataset: {n} generated households, one network-demand year.
[inputs]
profiles = "household_profiles.csv"
network_demand = "network_demand.csv"

[inputs.availability]
wind = "wind_availability.csv"
pv = "pv_availability.csv"

[households]
fit = [0.0, 0.25, 0.5]

[fleet]
n_households = 500000

[sector]
res_share = [0.39, 0.49, 0.59]
backend = "highs"

[output]
directory = "results"
"""


def _add_common(p: argparse.ArgumentParser, config: bool = True) -> None:
    if config:
        p.add_argument("--config", required=True, type=Path, help="run configuration (TOML)")
    p.add_argument("--out", type=Path, help="output directory (default: [output] directory of the config)")


def _add_solver(p: argparse.ArgumentParser) -> None:
    p.add_argument("--backend", choices=sorted(BACKENDS), help="override the configured LP backend")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="prosumage", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write the synthetic dataset and a matching config")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--households", type=int, default=20)
    p.add_argument("--seed", type=int, default=2019)

    p = sub.add_parser("households", help="run the household stage for every FiT and cost multiplier")
    _add_common(p)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("residual", help="build residual demand files for every household stage and fleet size")
    _add_common(p)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("sector", help="solve one scenario cell")
    _add_common(p)
    _add_solver(p)
    p.add_argument("--fit", type=float, help="FiT fraction; omit for the no-prosumage reference")
    p.add_argument("--res", required=True, help="RES share, or 'endogenous'")
    p.add_argument("--pv-cost", type=float, default=1.0, help="PV cost multiplier")
    p.add_argument("--battery-cost", type=float, default=1.0, help="battery cost multiplier")
    p.add_argument("--households-count", type=int, help="fleet size (default: config fleet size)")

    p = sub.add_parser("analyze", help="deltas, curves, segment prices and summary for a finished run")
    _add_common(p)
    p.add_argument("--reproduction-mode", action="store_true", help="also evaluate the published-result checks")

    p = sub.add_parser("matrix", help="full sweep: households, residuals, sector solves, analytics")
    _add_common(p)
    _add_solver(p)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--reproduction-mode", action="store_true", help="also evaluate the published-result checks")

    p = sub.add_parser("verify", help="run the self-check suite on the synthetic dataset")
    p.add_argument("--backend", choices=sorted(BACKENDS), default="ipm")
    p.add_argument("--solver-tolerance", type=float, default=1e-9)
    p.add_argument("--config", type=Path, help="also check that this config and its inputs load")

    p = sub.add_parser("convert-ausgrid", help="convert Ausgrid solar home half-hour files to a profile CSV")
    p.add_argument("sources", nargs="+", type=Path)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("convert-demand", help="aggregate an interval demand export to hourly MWh")
    p.add_argument("source", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--timestamp", required=True, help="timestamp column")
    p.add_argument("--column", required=True, help="demand column")
    p.add_argument("--unit", choices=("MW", "MWh"), default="MW")
    p.add_argument("--format", default="%Y-%m-%d %H:%M:%S", help="strptime format of the timestamps")
    p.add_argument("--interval", type=int, default=30, help="interval length in minutes")
    p.add_argument("--stamp-at-end", action="store_true", help="timestamps mark interval ends")
    return ap


def _setup(args):
    cfg = mx.with_backend(load_config(args.config), getattr(args, "backend", None))
    out = Path(args.out or cfg.output)
    return cfg, out, load_inputs(cfg)


def _report_claims(result: mx.MatrixResult) -> None:
    claims = reproduction.evaluate_claims(result)
    reproduction.write_claims(result.directory / "reproduction.csv", claims)
    for c in claims:
        print(f"{'PASS' if c.ok else 'FAIL'}  [{c.id}] {c.description}: {c.detail}")


def _print_cells(result: mx.MatrixResult) -> None:
    for st in result.statuses.values():
        print(f"{st.status:8s} {st.cell.id}" + (f"  {st.message}" if st.message else ""))


def cmd_synth(args) -> int:
    synthetic.write_dataset(args.out, args.households, args.seed)
    write_catalog(args.out / "catalog.csv", default_catalog())
    (args.out / "config.toml").write_text(SYNTH_CONFIG.format(n=args.households), encoding="utf-8")
    print(f"wrote synthetic dataset and config.toml to {args.out}")
    return EXIT_OK


def cmd_households(args) -> int:
    cfg, out, inputs = _setup(args)
    stages = mx.prepare_households(cfg, inputs, out, mx.plan_matrix(cfg).household_keys, args.jobs)
    for key, st in stages.items():
        pv = sum(h.installed_pv for h in st.households) / len(st.households)
        bat = sum(h.installed_battery for h in st.households) / len(st.households)
        print(f"{key.id}: mean {pv:.2f} kWp, {bat:.2f} kWh over {len(st.households)} households")
    return EXIT_OK


def cmd_residual(args) -> int:
    cfg, out, inputs = _setup(args)
    plan = mx.plan_matrix(cfg)
    stages = mx.prepare_households(cfg, inputs, out, plan.household_keys, args.jobs)
    seen = set()
    for cell in plan.solves:
        name = "reference" if cell.is_reference else f"{cell.household_key.id}_n{cell.n_households}"
        if name in seen:
            continue
        seen.add(name)
        rd = mx.cell_residual(cfg, inputs, cell, stages)
        path = out / "residuals" / f"{name}.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        write_residual(path, rd)
        print(f"{path}: {rd.annual_twh():.4f} TWh")
    return EXIT_OK


def cmd_sector(args) -> int:
    cfg, out, inputs = _setup(args)
    res = args.res if args.res == "endogenous" else float(args.res)
    n = args.households_count or cfg.n_households
    if args.fit is None:
        cell = mx.Cell(res, args.pv_cost, args.battery_cost)
        key = mx.HouseholdKey(cfg.fit_fractions[0], args.pv_cost, args.battery_cost)
    else:
        cell = mx.Cell(res, args.pv_cost, args.battery_cost, args.fit, n)
        key = cell.household_key
    stages = mx.prepare_households(cfg, inputs, out, [key])
    status = mx.run_cells(cfg, inputs, [cell], stages, out)[cell.id]
    print(f"{status.status} {cell.id} objective {status.objective:.6g}" + (f"  {status.message}" if status.message else ""))
    return mx.exit_code([status])


def cmd_analyze(args) -> int:
    cfg, out, inputs = _setup(args)
    result = mx.analyze(cfg, out, inputs)
    _print_cells(result)
    if args.reproduction_mode:
        _report_claims(result)
    return result.exit_code


def cmd_matrix(args) -> int:
    cfg, out, inputs = _setup(args)
    result = mx.run_matrix(cfg, out, args.jobs, inputs=inputs)
    _print_cells(result)
    if args.reproduction_mode:
        _report_claims(result)
    return result.exit_code


def cmd_verify(args) -> int:
    if args.config:
        load_inputs(load_config(args.config))
        print(f"PASS  config {args.config} and its inputs load")
    report = verify(args.backend, args.solver_tolerance)
    print("\n".join(report.lines()))
    if not report.ok:
        print(f"{len(report.failures)} check(s) failed")
        return EXIT_INVALID
    return EXIT_OK


def cmd_convert_ausgrid(args) -> int:
    skipped = reproduction.convert_ausgrid(args.sources, args.out)
    for cid, why in skipped.items():
        print(f"skipped {cid}: {why}")
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_convert_demand(args) -> int:
    reproduction.convert_interval_demand(args.source, args.out, args.timestamp, args.column, args.unit,
                                         args.format, args.interval, args.stamp_at_end)
    print(f"wrote {args.out}")
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth, "households": cmd_households, "residual": cmd_residual, "sector": cmd_sector,
    "analyze": cmd_analyze, "matrix": cmd_matrix, "verify": cmd_verify,
    "convert-ausgrid": cmd_convert_ausgrid, "convert-demand": cmd_convert_demand,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as e:
        # ParseError and friends from converters and input checks
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
