"""Synthetic stand-ins for reanalysis capacity factors, temperatures and load.

The CSVs written here are generated from the documented ground-truth
parameters below and are clearly synthetic.  They exist so that the fitting
chain can be exercised end to end and so the shipped default parameters have
a reproducible origin (see ``scripts/refit_defaults.py``).

Ground truth
------------
Wind: parameters chosen so that long simulations give capacity-factor
means 0.269 / 0.180, standard deviations about 0.15 / 0.13, skewness about
0.66 / 1.36 and a cross-region correlation about 0.47; the latent process
has unit stationary mean in both regions.  Derivation:
``scripts/calibrate_ground_truth.py``.

Temperature: harmonic means 3.0 / 6.0 degC with a winter minimum in late
January, AR(3) anomalies with innovation std 2.6 / 2.2 degC.

Load: weekday profile (Mon..Sun) 1.00, 1.01, 1.01, 1.00, 0.98, 0.92, 0.88
times a base of 3913 / 7686 MW, heating 95 / 260 MW per HDD, cooling
0 / 15 MW per CDD.  At a coverage share of 0.128 this averages to about
5.6 / 11.2 TWh per year.  Observed load adds 1.5 % multiplicative noise.
"""
from __future__ import annotations

import datetime as dt
from pathlib import Path

import numpy as np

from .demand import LoadRegressionParams, TemperatureModelParams, degree_days, simulate_temperature
from .weather import OUParams, SeasonalityParams, WindModelParams, simulate_wind

DEFAULT_FIXTURE_SEED = 20230101
REGIONS = ("NO-N", "NO-S")

WEEKDAY_PROFILE = np.array([1.00, 1.01, 1.01, 1.00, 0.98, 0.92, 0.88])
LOAD_NOISE = 0.015

WIND_YEARS = (1980, 2020)
TEMPERATURE_YEARS = (1991, 2020)
LOAD_YEARS = (2014, 2018)


def _wind_truth() -> WindModelParams:
    lam = np.array([0.447, 0.404])
    nu = np.array([0.874, 0.198])
    phi = np.exp(-lam)
    share = 0.485  # part of the southern mean driven by the northern jumps
    sigma = np.array([
        [(1 - phi[0]) / nu[0], 0.0],
        [share * (1 - phi[1]) / nu[0], (1 - share) * (1 - phi[1]) / nu[1]],
    ])
    seas = (SeasonalityParams(0.336, 0.0, 0.047), SeasonalityParams(0.218, 0.0, 0.075))
    return WindModelParams(seas, OUParams(lam, sigma, nu), REGIONS)


WIND_TRUTH = _wind_truth()

TEMPERATURE_TRUTH = TemperatureModelParams(
    (SeasonalityParams(3.0, -2.0, -7.5), SeasonalityParams(6.0, -2.0, -7.8)),
    np.array([[0.95, -0.22, 0.07], [0.92, -0.20, 0.08]]),
    np.array([2.6, 2.2]),
    REGIONS,
)

LOAD_TRUTH = LoadRegressionParams(
    np.outer([3913.0, 7686.0], WEEKDAY_PROFILE),
    np.array([95.0, 260.0]),
    np.array([0.0, 15.0]),
    regions=REGIONS,
)


def calendar_dates(first_year: int, last_year: int) -> list:
    day = dt.date(first_year, 1, 1)
    end = dt.date(last_year, 12, 31)
    out = []
    while day <= end:
        out.append(day)
        day += dt.timedelta(days=1)
    return out


def _expand_leap_days(dates, values):
    """Map a 365-day series onto real dates; Feb 29 repeats Feb 28."""
    rows, k = [], 0
    for day in dates:
        if day.month == 2 and day.day == 29:
            rows.append(values[k - 1])
        else:
            rows.append(values[k])
            k += 1
    return np.array(rows)


def _write(path: Path, dates, values, fmt: str):
    with open(path, "w", newline="\n") as fh:
        fh.write("date," + ",".join(REGIONS) + "\n")
        for day, row in zip(dates, values):
            fh.write(day.isoformat() + "," + ",".join(format(v, fmt) for v in row) + "\n")


def _n_days(first, last):
    return sum(1 for d in calendar_dates(first, last) if not (d.month == 2 and d.day == 29))


def generate_fixtures(out_dir, seed: int = DEFAULT_FIXTURE_SEED) -> dict:
    """Write ``capacity_factors.csv``, ``temperature.csv`` and ``load.csv``.

    Output is byte-identical for a given seed.  Returns the written paths.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    wind_ss, temp_ss, noise_ss = np.random.SeedSequence(seed).spawn(3)

    wind_dates = calendar_dates(*WIND_YEARS)
    n_wind_years = WIND_YEARS[1] - WIND_YEARS[0] + 1
    cf = simulate_wind(WIND_TRUTH, n_wind_years, np.random.default_rng(wind_ss)).values
    assert cf.shape[0] == _n_days(*WIND_YEARS)

    temp_dates = calendar_dates(*TEMPERATURE_YEARS)
    n_temp_years = TEMPERATURE_YEARS[1] - TEMPERATURE_YEARS[0] + 1
    temps = simulate_temperature(TEMPERATURE_TRUTH, n_temp_years, np.random.default_rng(temp_ss))
    temps = np.round(temps, 3)
    temps_full = _expand_leap_days(temp_dates, temps)

    load_rows = [i for i, d in enumerate(temp_dates) if LOAD_YEARS[0] <= d.year <= LOAD_YEARS[1]]
    load_dates = [temp_dates[i] for i in load_rows]
    t_load = temps_full[load_rows]
    weekday = np.array([d.weekday() for d in load_dates])
    hdd, cdd = degree_days(t_load, LOAD_TRUTH.threshold)
    clean = LOAD_TRUTH.beta_weekday[:, weekday].T + LOAD_TRUTH.beta_heating * hdd + LOAD_TRUTH.beta_cooling * cdd
    noise = np.random.default_rng(noise_ss).standard_normal(clean.shape) * LOAD_NOISE
    load = clean * (1.0 + noise)

    paths = {
        "cf": out / "capacity_factors.csv",
        "temp": out / "temperature.csv",
        "load": out / "load.csv",
    }
    _write(paths["cf"], wind_dates, _expand_leap_days(wind_dates, np.minimum(cf, 0.999999)), ".6f")
    _write(paths["temp"], temp_dates, temps_full, ".3f")
    _write(paths["load"], load_dates, load, ".2f")
    return paths
