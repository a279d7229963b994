"""Command-line interface.

Exit codes: 0 success, 1 invalid input (data, config, arguments), 2 runtime
failure (estimation or I/O).  All randomness derives from ``--seed``.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import dataio
from .config import ProjectConfig, config_keys, load_config
from .demand import (LoadRegressionParams, TemperatureModelParams, fit_load_regression,
                     fit_temperature_model, simulate_demand)
from .dispatch import SCENARIOS, CapacityPlan, aggregate_penalty, dispatch
from .errors import EstimationError, InvalidParameters, ParseError, ValidationError
from .fixtures import DEFAULT_FIXTURE_SEED, generate_fixtures
from .sweep import (FACTORS, SensitivitySpec, argmin_surface, dominance_map, penalty_profiles, realization_seed,
                    sensitivity, simulate_year, sweep)
from .weather import fit_wind, simulate_wind

log = logging.getLogger("windflex")


class _Parser(argparse.ArgumentParser):
    """Usage errors print the full help and exit with the validation code."""

    def error(self, message):
        self.print_help(sys.stderr)
        self.exit(1, f"\n{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# fitting workflows (also used by scripts/refit_defaults.py)


def fit_wind_file(path):
    return fit_wind(dataio.ingest_timeseries(path, "cf").as_capacity_factors())


def fit_temperature_file(path) -> TemperatureModelParams:
    ts = dataio.ingest_timeseries(path, "temp")
    return fit_temperature_model(ts.values, ts.day_of_year, ts.regions)


def fit_load_files(load_path, temp_path, holidays=()) -> LoadRegressionParams:
    """Regress load on the temperatures of the same dates.

    ``holidays`` are ISO dates treated as Sundays.
    """
    load = dataio.ingest_timeseries(load_path, "load")
    temp = dataio.ingest_timeseries(temp_path, "temp")
    if load.regions != temp.regions:
        raise ParseError(f"region columns differ: {load.regions} vs {temp.regions}", 1)
    index = {d: k for k, d in enumerate(temp.dates)}
    missing = [d for d in load.dates if d not in index]
    if missing:
        raise ParseError(f"{temp_path}: no temperature for {missing[0]} (and {len(missing) - 1} more load dates)")
    temps = temp.values[[index[d] for d in load.dates]]
    weekday = load.weekday.copy()
    holiday_set = set(holidays)
    weekday[[k for k, d in enumerate(load.dates) if d in holiday_set]] = 6
    return fit_load_regression(load.values, temps, weekday, regions=load.regions)


def _update_json_section(path, key, payload):
    path = Path(path)
    data = {}
    if path.exists():
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError:
            data = {}
    data[key] = payload
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _models(cfg: ProjectConfig):
    return dataio.load_wind_params(cfg.wind_params), dataio.load_demand_params(cfg.demand_params)


# ---------------------------------------------------------------------------
# commands


def cmd_fixtures(args, cfg):
    out = Path(args.out or "fixtures")
    seed = DEFAULT_FIXTURE_SEED if args.seed is None else args.seed
    for kind, path in generate_fixtures(out, seed).items():
        print(f"{kind}: {path}")


def cmd_fit(args, cfg):
    if args.target == "wind":
        data = args.data or cfg.cf_data
        if not data:
            raise InvalidParameters("fit wind needs --data or cf_data in the config")
        params = fit_wind_file(data)
        out = Path(args.out or "wind_params.json")
        dataio.save_wind_params(params, out)
        lam = ", ".join(f"{v:.3f}" for v in params.ou.lam)
        print(f"wrote {out} (lambda = {lam})")
        return
    out = Path(args.out or "demand_params.json")
    if args.target == "temperature":
        data = args.data or cfg.temp_data
        if not data:
            raise InvalidParameters("fit temperature needs --data or temp_data in the config")
        params = fit_temperature_file(data)
        _update_json_section(out, "temperature", params.to_dict())
        std = ", ".join(f"{v:.2f}" for v in params.innovation_std)
        print(f"wrote temperature section of {out} (innovation std = {std} degC)")
    else:
        data = args.data or cfg.load_data
        temp = args.temperature or cfg.temp_data
        if not data or not temp:
            raise InvalidParameters("fit load needs --data and --temperature (or load_data/temp_data in the config)")
        params = fit_load_files(data, temp)
        _update_json_section(out, "load_regression", params.to_dict())
        print(f"wrote load_regression section of {out}")


def _write_wide(path, regions, values, extra_cols, extra):
    path = Path(path)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(extra_cols + list(regions)) + "\n")
        for k in range(values.shape[0]):
            fh.write(",".join([str(e[k]) for e in extra] + [repr(float(v)) for v in values[k]]) + "\n")


def cmd_simulate(args, cfg):
    wind, demand = _models(cfg)
    out = Path(args.out or "simulated")
    out.mkdir(parents=True, exist_ok=True)
    wind_ss, temp_ss = np.random.SeedSequence(cfg.master_seed).spawn(2)
    cf = simulate_wind(wind, args.years, np.random.default_rng(wind_ss))
    temps, load = simulate_demand(demand, args.years, np.random.default_rng(temp_ss), cfg.coverage_share,
                                  cfg.start_weekday, cfg.holidays_doy)
    n = cf.values.shape[0]
    cols = ["step", "year", "day_of_year"]
    extra = [np.arange(1, n + 1), np.arange(n) // 365 + 1, cf.day_of_year]
    _write_wide(out / "capacity_factors.csv", wind.regions, cf.values, cols, extra)
    _write_wide(out / "temperature.csv", demand.temperature.regions, temps, cols, extra)
    _write_wide(out / "load.csv", demand.load_regression.regions, load.values, cols + ["weekday"],
                extra + [load.weekday])
    print(f"wrote {args.years} simulated years to {out}")


def cmd_dispatch(args, cfg):
    wind, demand = _models(cfg)
    plan = CapacityPlan(args.plan if args.plan else cfg.reference_plan)
    flex = cfg.flex()
    scenarios = args.scenario or list(cfg.scenarios)
    seed = realization_seed(cfg.master_seed, args.realization)
    cf, load = simulate_year(wind, demand, seed, cfg.coverage_share, cfg.start_weekday, cfg.holidays_doy)
    out = Path(args.out or "dispatch")
    out.mkdir(parents=True, exist_ok=True)
    for scen in scenarios:
        trace = dispatch(scen, plan.production(cf), load, flex)
        per_node, total = aggregate_penalty(trace)
        path = out / f"trace_{scen}.csv"
        dataio.write_trace(trace, path, wind.regions)
        print(f"{scen:>9}: penalty {total:.6g} (per node {per_node[0]:.6g}, {per_node[1]:.6g}) -> {path}")
        if args.emit_plotdata:
            sc = cfg.sweep_config(n_realizations=args.realizations or cfg.n_realizations)
            rows = penalty_profiles(plan.wind_mw, scen, sc, wind, demand, flex)
            pd_path = out / f"plotdata_{scen}.csv"
            dataio.write_plotdata(rows, pd_path, wind.regions)
            print(f"{'':>9}  plot data over {sc.n_realizations} realizations -> {pd_path}")


def _sweep_config(args, cfg: ProjectConfig):
    over = {}
    if args.nn:
        over["grid_nn"] = tuple(args.nn)
    if args.ns:
        over["grid_ns"] = tuple(args.ns)
    if args.realizations:
        over["n_realizations"] = args.realizations
    if args.stride:
        over["stride"] = args.stride
    if getattr(args, "scenario", None):
        over["scenarios"] = tuple(args.scenario)
    return cfg.sweep_config(**over)


def _print_optima(surface, reference):
    optima = argmin_surface(surface, reference)
    print(f"{'scenario':>9} {'opt_nn_mw':>10} {'opt_ns_mw':>10} {'penalty':>12} {'improvement':>11}")
    for scen, o in optima.items():
        print(f"{scen:>9} {o.opt_nn_mw:10.1f} {o.opt_ns_mw:10.1f} {o.expected_penalty:12.5g} {o.improvement:11.1%}")
    return optima


def cmd_sweep(args, cfg):
    wind, demand = _models(cfg)
    sc = _sweep_config(args, cfg)
    surface = sweep(sc, wind, demand, threads=args.threads, checkpoint=args.checkpoint)
    out = Path(args.out or "surface.csv")
    dataio.write_surface(surface, out)
    print(f"wrote {out} ({surface.expected.size} rows)")
    _print_optima(surface, cfg.reference_plan)


def cmd_sensitivity(args, cfg):
    wind, demand = _models(cfg)
    sc = _sweep_config(args, cfg)
    factors = args.factor or list(FACTORS)
    specs = []
    for f in factors:
        if f == "demand_node":
            specs += [SensitivitySpec(f, tuple(args.multipliers), node) for node in (0, 1)]
        else:
            specs.append(SensitivitySpec(f, tuple(args.multipliers)))
    rows = sensitivity(sc, specs, wind, demand, threads=args.threads, reference=cfg.reference_plan)
    out = Path(args.out or "sensitivity.csv")
    dataio.write_sensitivity(rows, out)
    print(f"wrote {out} ({len(rows)} rows)")


def cmd_report(args, cfg):
    surface = dataio.read_surface(args.surface)
    out = Path(args.out or "dominance.csv")
    if len(surface.scenarios) >= 2:
        best, second = dominance_map(surface)
        dataio.write_dominance(surface, best, second, out)
        labels, counts = np.unique(best, return_counts=True)
        share = ", ".join(f"{lab} {c / best.size:.1%}" for lab, c in zip(labels, counts))
        print(f"wrote {out}; best scenario share: {share}")
    _print_optima(surface, cfg.reference_plan)


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--config", default=argparse.SUPPRESS,
                   help=f"flat TOML config; keys: {', '.join(config_keys())}")
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master seed (overrides config)")
    g.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="sweep worker processes")
    g.add_argument("--out", default=argparse.SUPPRESS, help="output file or directory")
    g.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    parser = _Parser(prog="windflex", description="Wind capacity planning under flexibility options.",
                     parents=[common])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fixtures", parents=[common], help="write synthetic input CSVs")
    p.set_defaults(func=cmd_fixtures)

    p = sub.add_parser("fit", parents=[common], help="estimate model parameters from CSV data")
    p.add_argument("target", choices=("wind", "temperature", "load"))
    p.add_argument("--data", help="input CSV (date,<region>,...)")
    p.add_argument("--temperature", help="temperature CSV covering the load dates (fit load)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", parents=[common], help="simulate capacity factors, temperature and load")
    p.add_argument("--years", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("dispatch", parents=[common], help="dispatch one simulated year and write traces")
    p.add_argument("--plan", type=float, nargs=2, metavar=("NN_MW", "NS_MW"))
    p.add_argument("--scenario", action="append", choices=SCENARIOS)
    p.add_argument("--realization", type=int, default=0)
    p.add_argument("--emit-plotdata", action="store_true", help="also write daily loss quantile bands")
    p.add_argument("--realizations", type=int, help="realizations for --emit-plotdata")
    p.set_defaults(func=cmd_dispatch)

    for name, func, text in (("sweep", cmd_sweep, "expected penalties over the capacity grid"),
                             ("sensitivity", cmd_sensitivity, "optima with one factor scaled")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--nn", type=float, nargs=3, metavar=("MIN", "MAX", "STEP"))
        p.add_argument("--ns", type=float, nargs=3, metavar=("MIN", "MAX", "STEP"))
        p.add_argument("--realizations", type=int)
        p.add_argument("--stride", type=int, help="use every k-th grid point")
        p.add_argument("--scenario", action="append", choices=SCENARIOS)
        p.set_defaults(func=func)
        if name == "sweep":
            p.add_argument("--checkpoint", help="npz file for resumable sweeps")
        else:
            p.add_argument("--factor", action="append", choices=FACTORS)
            p.add_argument("--multipliers", type=float, nargs="+", default=[0.5, 0.9, 1.1, 1.5])

    p = sub.add_parser("report", parents=[common], help="dominance map and optima from a surface CSV")
    p.add_argument("--surface", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name, default in (("config", None), ("seed", None), ("threads", 1), ("out", None), ("verbose", False)):
        if not hasattr(args, name):
            setattr(args, name, default)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, master_seed=args.seed)
        args.func(args, cfg)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (EstimationError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - surface anything else as a runtime failure
        log.debug("unhandled exception", exc_info=True)
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
