"""Daily temperature and load synthesis.

Temperature is a yearly harmonic plus a deseasonalised AR(3) anomaly with
Gaussian innovations.  Load follows a weekday / degree-day regression

    D_i(t) = beta_weekday_i(day) + beta_heating_i * HDD_i(t) + beta_cooling_i * CDD_i(t)

with HDD = max(15.5 - T, 0) and CDD = max(T - 15.5, 0); holidays use the
Sunday coefficient.  Synthesised load is scaled to the share of demand that
wind is meant to cover.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .errors import (
    InsufficientData,
    InvalidParameters,
    NonStationaryFit,
    RankDeficient,
    ShapeMismatch,
)
from .weather import DAYS_PER_YEAR, DEFAULT_REGIONS, SeasonalityParams, fit_seasonality

AR_ORDER = 3
HDD_THRESHOLD_DEGC = 15.5
SUNDAY = 6
WEEKDAYS = ("monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday")


def ar_is_stationary(coeffs) -> bool:
    """True if all roots of 1 - sum_k phi_k z^k lie outside the unit circle."""
    coeffs = np.asarray(coeffs, dtype=float)
    p = coeffs.size
    companion = np.zeros((p, p))
    companion[0] = coeffs
    companion[1:, :-1] = np.eye(p - 1)
    return bool(np.max(np.abs(np.linalg.eigvals(companion))) < 1.0)


@dataclass(frozen=True, eq=False)
class TemperatureModelParams:
    seasonality: tuple
    ar_coeffs: np.ndarray
    innovation_std: np.ndarray
    regions: tuple = DEFAULT_REGIONS

    def __post_init__(self):
        seas = tuple(self.seasonality)
        d = len(seas)
        ar = np.asarray(self.ar_coeffs, dtype=float).reshape(d, AR_ORDER)
        std = np.atleast_1d(np.asarray(self.innovation_std, dtype=float))
        if std.shape != (d,):
            raise InvalidParameters("need one innovation std per region")
        # zero is allowed: it is the deterministic limit
        if np.any(std < 0) or not np.all(np.isfinite(std)):
            raise InvalidParameters(f"innovation std must be >= 0, got {std}")
        for i in range(d):
            if not ar_is_stationary(ar[i]):
                raise InvalidParameters(f"AR(3) coefficients {ar[i]} of region {i} are not stationary")
        object.__setattr__(self, "seasonality", seas)
        object.__setattr__(self, "ar_coeffs", ar)
        object.__setattr__(self, "innovation_std", std)
        if len(self.regions) != d:
            object.__setattr__(self, "regions", tuple(f"region{i + 1}" for i in range(d)))

    @property
    def dims(self) -> int:
        return len(self.seasonality)

    def seasonal_matrix(self, day_of_year) -> np.ndarray:
        return np.column_stack([s(day_of_year) for s in self.seasonality])

    def to_dict(self) -> dict:
        return {
            "regions": list(self.regions),
            "seasonality_degc": [s.to_dict() for s in self.seasonality],
            "ar_coeffs": self.ar_coeffs.tolist(),
            "innovation_std_degc": self.innovation_std.tolist(),
        }

    @classmethod
    def from_dict(cls, d) -> "TemperatureModelParams":
        return cls(
            tuple(SeasonalityParams.from_dict(s) for s in d["seasonality_degc"]),
            np.asarray(d["ar_coeffs"], dtype=float),
            np.asarray(d["innovation_std_degc"], dtype=float),
            tuple(d.get("regions", DEFAULT_REGIONS)),
        )


@dataclass(frozen=True, eq=False)
class LoadRegressionParams:
    beta_weekday: np.ndarray  # (d, 7) MW, Monday..Sunday
    beta_heating: np.ndarray  # (d,) MW per HDD
    beta_cooling: np.ndarray  # (d,) MW per CDD
    threshold: float = HDD_THRESHOLD_DEGC
    cooling_identified: np.ndarray = None
    regions: tuple = DEFAULT_REGIONS

    def __post_init__(self):
        bw = np.atleast_2d(np.asarray(self.beta_weekday, dtype=float))
        d = bw.shape[0]
        if bw.shape != (d, 7):
            raise InvalidParameters("beta_weekday must have 7 entries per region")
        bh = np.atleast_1d(np.asarray(self.beta_heating, dtype=float))
        bc = np.atleast_1d(np.asarray(self.beta_cooling, dtype=float))
        if bh.shape != (d,) or bc.shape != (d,):
            raise InvalidParameters("need one heating and one cooling coefficient per region")
        if np.any(bw <= 0):
            raise InvalidParameters("weekday base loads must be > 0")
        if np.any(bh < 0):
            raise InvalidParameters("heating coefficients must be >= 0")
        flags = np.ones(d, bool) if self.cooling_identified is None else np.asarray(self.cooling_identified, bool)
        for name, value in (("beta_weekday", bw), ("beta_heating", bh), ("beta_cooling", bc),
                            ("cooling_identified", flags)):
            object.__setattr__(self, name, value)
        object.__setattr__(self, "threshold", float(self.threshold))
        if len(self.regions) != d:
            object.__setattr__(self, "regions", tuple(f"region{i + 1}" for i in range(d)))

    def to_dict(self) -> dict:
        return {
            "regions": list(self.regions),
            "beta_weekday_mw": self.beta_weekday.tolist(),
            "beta_heating_mw_per_degc": self.beta_heating.tolist(),
            "beta_cooling_mw_per_degc": self.beta_cooling.tolist(),
            "threshold_degc": self.threshold,
            "cooling_identified": self.cooling_identified.tolist(),
        }

    @classmethod
    def from_dict(cls, d) -> "LoadRegressionParams":
        return cls(
            np.asarray(d["beta_weekday_mw"], dtype=float),
            np.asarray(d["beta_heating_mw_per_degc"], dtype=float),
            np.asarray(d["beta_cooling_mw_per_degc"], dtype=float),
            float(d.get("threshold_degc", HDD_THRESHOLD_DEGC)),
            d.get("cooling_identified"),
            tuple(d.get("regions", DEFAULT_REGIONS)),
        )


@dataclass(frozen=True, eq=False)
class DemandModelParams:
    temperature: TemperatureModelParams
    load_regression: LoadRegressionParams

    def to_dict(self) -> dict:
        return {"temperature": self.temperature.to_dict(), "load_regression": self.load_regression.to_dict()}

    @classmethod
    def from_dict(cls, d) -> "DemandModelParams":
        return cls(TemperatureModelParams.from_dict(d["temperature"]),
                   LoadRegressionParams.from_dict(d["load_regression"]))


@dataclass(frozen=True, eq=False)
class LoadSeries:
    values: np.ndarray  # (..., T, d) MW daily average
    weekday: np.ndarray  # (T,) 0=Monday .. 6=Sunday, holidays already mapped to 6
    coverage_share: float
    n_floored: int = 0

    @property
    def annual_energy_twh(self) -> np.ndarray:
        """Mean energy per 365-day year and region in TWh."""
        v = self.values.reshape(-1, self.values.shape[-1])
        return v.mean(axis=0) * DAYS_PER_YEAR * 24 / 1e6


# ---------------------------------------------------------------------------
# calendar


def weekday_calendar(n_days: int, start_weekday: int = 0, holidays=()) -> np.ndarray:
    """Weekday labels for consecutive 365-day years starting on ``start_weekday``.

    ``holidays`` are days of year (1..365) that take the Sunday label.
    """
    t = np.arange(n_days)
    labels = (start_weekday + t) % 7
    if len(holidays):
        doy = t % DAYS_PER_YEAR + 1
        labels = np.where(np.isin(doy, np.asarray(holidays, dtype=int)), SUNDAY, labels)
    return labels


def degree_days(temps, threshold: float = HDD_THRESHOLD_DEGC):
    temps = np.asarray(temps, dtype=float)
    return np.maximum(threshold - temps, 0.0), np.maximum(temps - threshold, 0.0)


# ---------------------------------------------------------------------------
# temperature


def fit_temperature_model(temps, day_of_year, regions=DEFAULT_REGIONS) -> TemperatureModelParams:
    """Harmonic seasonal mean, then OLS AR(3) on the anomalies.

    A region whose anomalies are numerically zero (constant or purely seasonal
    input) gets zero AR coefficients and zero innovation std, with a warning.
    """
    temps = np.asarray(temps, dtype=float)
    if temps.ndim == 1:
        temps = temps[:, None]
    doy = np.asarray(day_of_year)
    if temps.shape[0] < 10 * DAYS_PER_YEAR:
        raise InsufficientData(f"need at least 10 years of daily data, got {temps.shape[0]} days")
    seasonality, ar, std = [], [], []
    for i in range(temps.shape[1]):
        seas = fit_seasonality(temps[:, i], doy, require_positive=False)
        y = temps[:, i] - seas(doy)
        scale = max(1.0, float(np.max(np.abs(temps[:, i]))))
        if np.std(y) < 1e-9 * scale:
            warnings.warn(f"region {i}: zero-variance temperature anomalies, AR part degenerate")
            seasonality.append(seas)
            ar.append(np.zeros(AR_ORDER))
            std.append(float(np.std(y)))
            continue
        lagged = np.column_stack([y[AR_ORDER - k: len(y) - k] for k in range(1, AR_ORDER + 1)])
        target = y[AR_ORDER:]
        coef, *_ = np.linalg.lstsq(lagged, target, rcond=None)
        if not ar_is_stationary(coef):
            raise NonStationaryFit(f"region {i}: fitted AR(3) coefficients {coef} are not stationary")
        seasonality.append(seas)
        ar.append(coef)
        std.append(float(np.std(target - lagged @ coef)))
    return TemperatureModelParams(tuple(seasonality), np.array(ar), np.array(std), tuple(regions))


def simulate_temperature(params: TemperatureModelParams, n_years: int, rng: np.random.Generator,
                         burn_in: int = DAYS_PER_YEAR, y_init=None) -> np.ndarray:
    """Daily temperatures for ``n_years`` consecutive years, shape (365 n, d).

    ``y_init`` holds the anomalies Y(-1), Y(-2), Y(-3) per region (default 0)
    before the burn-in; ``burn_in`` must be at least 100.
    """
    if n_years < 1:
        raise InvalidParameters("n_years must be >= 1")
    if burn_in < 100:
        raise InvalidParameters("burn_in must be >= 100 steps")
    n = n_years * DAYS_PER_YEAR
    d = params.dims
    eps = rng.standard_normal((burn_in + n, d)) * params.innovation_std
    y_init = np.zeros((d, AR_ORDER)) if y_init is None else np.asarray(y_init, dtype=float).reshape(d, AR_ORDER)
    y = np.empty_like(eps)
    for i in range(d):
        a = np.concatenate([[1.0], -params.ar_coeffs[i]])
        zi = signal.lfiltic([1.0], a, y_init[i])
        y[:, i], _ = signal.lfilter([1.0], a, eps[:, i], zi=zi)
    doy = np.arange(n) % DAYS_PER_YEAR + 1
    return params.seasonal_matrix(doy) + y[burn_in:]


# ---------------------------------------------------------------------------
# load


def fit_load_regression(load, temps, weekday, threshold: float = HDD_THRESHOLD_DEGC,
                        regions=DEFAULT_REGIONS) -> LoadRegressionParams:
    """OLS of load on weekday indicators plus HDD and CDD, per region.

    ``weekday`` labels must already map holidays to Sunday (6).  A degree-day
    regressor that is identically zero in the data gets coefficient 0; for
    cooling this is recorded in ``cooling_identified``.
    """
    load = np.asarray(load, dtype=float)
    temps = np.asarray(temps, dtype=float)
    if load.ndim == 1:
        load, temps = load[:, None], temps.reshape(-1, 1)
    weekday = np.asarray(weekday, dtype=int)
    if load.shape != temps.shape or weekday.shape != (load.shape[0],):
        raise ShapeMismatch(f"load {load.shape}, temps {temps.shape} and calendar {weekday.shape} not aligned")
    if load.shape[0] < DAYS_PER_YEAR:
        raise InsufficientData("need at least one year of load data")
    missing = sorted(set(range(7)) - set(np.unique(weekday).tolist()))
    if missing:
        raise RankDeficient(f"weekday classes {[WEEKDAYS[m] for m in missing]} absent from the data")
    onehot = (weekday[:, None] == np.arange(7)).astype(float)
    bw, bh, bc, flags = [], [], [], []
    for i in range(load.shape[1]):
        hdd, cdd = degree_days(temps[:, i], threshold)
        cols = [onehot]
        use_h, use_c = bool(np.any(hdd > 0)), bool(np.any(cdd > 0))
        if use_h:
            cols.append(hdd[:, None])
        if use_c:
            cols.append(cdd[:, None])
        design = np.hstack(cols)
        if np.linalg.matrix_rank(design) < design.shape[1]:
            raise RankDeficient(f"region {i}: regression design is rank deficient")
        coef, *_ = np.linalg.lstsq(design, load[:, i], rcond=None)
        bw.append(coef[:7])
        k = 7
        bh.append(max(float(coef[k]), 0.0) if use_h else 0.0)
        k += use_h
        bc.append(float(coef[k]) if use_c else 0.0)
        flags.append(use_c)
    return LoadRegressionParams(np.array(bw), np.array(bh), np.array(bc), threshold, np.array(flags), tuple(regions))


def synthesize_load(reg: LoadRegressionParams, temps, weekday, coverage_share: float) -> LoadSeries:
    """Regression load scaled by ``coverage_share`` and floored at zero.

    ``temps`` has shape (..., T, d); ``weekday`` has shape (T,).
    """
    if not 0 < coverage_share <= 1:
        raise InvalidParameters(f"coverage_share must be in (0, 1], got {coverage_share}")
    temps = np.asarray(temps, dtype=float)
    weekday = np.asarray(weekday, dtype=int)
    if temps.shape[-2] != weekday.size or temps.shape[-1] != reg.beta_weekday.shape[0]:
        raise ShapeMismatch(f"temperatures {temps.shape} do not match calendar {weekday.shape}")
    hdd, cdd = degree_days(temps, reg.threshold)
    base = reg.beta_weekday[:, weekday].T
    raw = coverage_share * (base + reg.beta_heating * hdd + reg.beta_cooling * cdd)
    n_floored = int(np.count_nonzero(raw < 0))
    return LoadSeries(np.maximum(raw, 0.0), weekday, coverage_share, n_floored)


def simulate_demand(params: DemandModelParams, n_years: int, rng: np.random.Generator,
                    coverage_share: float, start_weekday: int = 0, holidays=()):
    """Simulated temperatures and the resulting load series."""
    temps = simulate_temperature(params.temperature, n_years, rng)
    calendar = weekday_calendar(temps.shape[0], start_weekday, holidays)
    return temps, synthesize_load(params.load_regression, temps, calendar, coverage_share)
