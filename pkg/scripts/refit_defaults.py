"""Regenerate the bundled fixtures and the default parameter files fitted to them.

    python3 scripts/refit_defaults.py [--seed N]
"""
import argparse
from pathlib import Path

from windflex import dataio
from windflex.cli import fit_load_files, fit_temperature_file, fit_wind_file
from windflex.demand import DemandModelParams
from windflex.fixtures import DEFAULT_FIXTURE_SEED, generate_fixtures

DATA = Path(__file__).resolve().parents[1] / "src" / "windflex" / "data"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=DEFAULT_FIXTURE_SEED)
    args = ap.parse_args()

    paths = generate_fixtures(DATA / "fixtures", args.seed)
    wind = fit_wind_file(paths["cf"])
    demand = DemandModelParams(fit_temperature_file(paths["temp"]), fit_load_files(paths["load"], paths["temp"]))
    dataio.save_wind_params(wind, DATA / "wind_params.json")
    dataio.save_demand_params(demand, DATA / "demand_params.json")

    print("wind lambda", wind.ou.lam.round(3), "nu", wind.ou.jump_intensity.round(3))
    print("sigma", wind.ou.sigma.round(3).tolist())
    t = demand.temperature
    print("temperature AR", t.ar_coeffs.round(3).tolist(), "std", t.innovation_std.round(3))
    r = demand.load_regression
    print("load heating", r.beta_heating.round(1), "cooling", r.beta_cooling.round(1))


if __name__ == "__main__":
    main()
