"""Seasonal jump-driven Ornstein-Uhlenbeck model for daily wind capacity factors.

Capacity factors are tied to a nonnegative latent process X through

    C_i(t) = 1 - exp(-s_i(t) * X_i(t)),
    s_i(t) = a_i + b_i sin(2 pi t / 365) + c_i cos(2 pi t / 365),

and X mean-reverts at rate lambda_i while being pushed up by a compound
Poisson process with exponential jumps, mixed across regions by a
lower-triangular loading matrix.  One step is one day.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize, signal, stats

from .errors import (
    DomainError,
    InsufficientData,
    InvalidParameters,
    MomentMatchFailure,
    NonPositiveSeasonality,
    NonStationary,
)

DAYS_PER_YEAR = 365
CF_CEILING = 1.0 - 1e-12
DEFAULT_REGIONS = ("NO-N", "NO-S")


def harmonic_basis(day_of_year) -> np.ndarray:
    """Design matrix ``[1, sin, cos]`` of the yearly harmonic."""
    t = np.asarray(day_of_year, dtype=float)
    w = 2.0 * np.pi * t / DAYS_PER_YEAR
    return np.column_stack([np.ones_like(t), np.sin(w), np.cos(w)])


@dataclass(frozen=True)
class SeasonalityParams:
    a: float
    b: float = 0.0
    c: float = 0.0

    def __call__(self, day_of_year) -> np.ndarray:
        t = np.asarray(day_of_year, dtype=float)
        w = 2.0 * np.pi * t / DAYS_PER_YEAR
        return self.a + self.b * np.sin(w) + self.c * np.cos(w)

    def minimum(self) -> float:
        return float(np.min(self(np.arange(1, DAYS_PER_YEAR + 1))))

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "c": self.c}

    @classmethod
    def from_dict(cls, d) -> "SeasonalityParams":
        return cls(float(d["a"]), float(d.get("b", 0.0)), float(d.get("c", 0.0)))


@dataclass(frozen=True, eq=False)
class OUParams:
    """Mean reversion and jump driver of the latent process.

    ``lam`` are per-step reversion rates, ``sigma`` the (lower-triangular)
    loading of the independent jump drivers, ``jump_intensity`` the expected
    number of jumps per step and ``jump_mean`` the mean exponential jump size.
    """

    lam: np.ndarray
    sigma: np.ndarray
    jump_intensity: np.ndarray
    jump_mean: np.ndarray = None

    def __post_init__(self):
        lam = np.atleast_1d(np.asarray(self.lam, dtype=float))
        d = lam.size
        sigma = np.asarray(self.sigma, dtype=float).reshape(d, d)
        nu = np.atleast_1d(np.asarray(self.jump_intensity, dtype=float))
        if self.jump_mean is None:
            mean = np.ones(d)
        else:
            mean = np.atleast_1d(np.asarray(self.jump_mean, dtype=float))
        if nu.shape != (d,) or mean.shape != (d,):
            raise InvalidParameters("lam, jump_intensity and jump_mean must have equal length")
        if not np.all(np.isfinite(lam)) or np.any(lam <= 0):
            raise InvalidParameters(f"mean-reversion rates must be > 0, got {lam}")
        if not np.all(np.isfinite(sigma)) or np.any(sigma < 0):
            raise InvalidParameters("sigma entries must be finite and >= 0")
        # zero intensity is admitted for the jump-free limit
        if not np.all(np.isfinite(nu)) or np.any(nu < 0):
            raise InvalidParameters(f"jump intensities must be >= 0, got {nu}")
        if np.any(mean <= 0):
            raise InvalidParameters(f"jump means must be > 0, got {mean}")
        for name, value in (("lam", lam), ("sigma", sigma), ("jump_intensity", nu), ("jump_mean", mean)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def dims(self) -> int:
        return self.lam.size

    @property
    def decay(self) -> np.ndarray:
        """One-step AR(1) factor ``exp(-lam)``."""
        return np.exp(-self.lam)

    def stationary_mean(self) -> np.ndarray:
        return self.sigma @ (self.jump_intensity * self.jump_mean) / (1.0 - self.decay)

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam.tolist(),
            "sigma": self.sigma.ravel().tolist(),
            "jump_intensity": self.jump_intensity.tolist(),
            "jump_mean": self.jump_mean.tolist(),
        }


@dataclass(frozen=True, eq=False)
class CapacityFactorSeries:
    values: np.ndarray
    day_of_year: np.ndarray
    regions: tuple = DEFAULT_REGIONS

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        doy = np.asarray(self.day_of_year, dtype=int)
        if doy.shape != (values.shape[0],):
            raise InvalidParameters("day_of_year must have one entry per row")
        if np.any((doy < 1) | (doy > DAYS_PER_YEAR)):
            raise InvalidParameters("day_of_year must lie in 1..365")
        if not np.all(np.isfinite(values)):
            raise DomainError("capacity factors contain missing or non-finite entries")
        if np.any(values < 0) or np.any(values >= 1):
            raise DomainError("capacity factors must lie in [0, 1)")
        regions = tuple(self.regions)
        if len(regions) != values.shape[1]:
            regions = tuple(f"region{i + 1}" for i in range(values.shape[1]))
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "day_of_year", doy)
        object.__setattr__(self, "regions", regions)

    def __len__(self):
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class WindModelParams:
    seasonality: tuple
    ou: OUParams
    regions: tuple = DEFAULT_REGIONS

    def __post_init__(self):
        seas = tuple(self.seasonality)
        if len(seas) != self.ou.dims:
            raise InvalidParameters("need one seasonality triple per region")
        for i, s in enumerate(seas):
            if s.minimum() <= 0:
                raise NonPositiveSeasonality(f"seasonality of region {i} is not positive on 1..365")
        object.__setattr__(self, "seasonality", seas)
        if len(self.regions) != len(seas):
            object.__setattr__(self, "regions", tuple(f"region{i + 1}" for i in range(len(seas))))

    def seasonal_matrix(self, day_of_year) -> np.ndarray:
        return np.column_stack([s(day_of_year) for s in self.seasonality])

    def to_dict(self) -> dict:
        out = {"regions": list(self.regions), "seasonality": [s.to_dict() for s in self.seasonality]}
        out.update(self.ou.to_dict())
        return out

    @classmethod
    def from_dict(cls, d) -> "WindModelParams":
        lam = np.asarray(d["lambda"], dtype=float)
        ou = OUParams(
            lam=lam,
            sigma=np.asarray(d["sigma"], dtype=float).reshape(lam.size, lam.size),
            jump_intensity=d["jump_intensity"],
            jump_mean=d.get("jump_mean"),
        )
        seas = tuple(SeasonalityParams.from_dict(s) for s in d["seasonality"])
        return cls(seas, ou, tuple(d.get("regions", DEFAULT_REGIONS)))


def day_sequence(n_steps: int, start_day: int = 1) -> np.ndarray:
    return (start_day - 1 + np.arange(n_steps)) % DAYS_PER_YEAR + 1


# ---------------------------------------------------------------------------
# estimation


def fit_seasonality(z, day_of_year, require_positive: bool = True) -> SeasonalityParams:
    """Least-squares fit of ``a + b sin + c cos`` to ``z``.

    With ``require_positive`` the fitted curve must stay above zero on every
    day of the year, as the capacity-factor transform needs.
    """
    z = np.asarray(z, dtype=float).ravel()
    doy = np.asarray(day_of_year).ravel()
    if z.size != doy.size:
        raise InvalidParameters("z and day_of_year lengths differ")
    if z.size < 2 * DAYS_PER_YEAR:
        raise InsufficientData(f"need at least {2 * DAYS_PER_YEAR} observations, got {z.size}")
    if not np.all(np.isfinite(z)):
        raise InvalidParameters("z contains non-finite values")
    coef, *_ = np.linalg.lstsq(harmonic_basis(doy), z, rcond=None)
    params = SeasonalityParams(*(float(v) for v in coef))
    if require_positive and params.minimum() <= 0:
        raise NonPositiveSeasonality(f"fitted seasonality {params} is not positive on 1..365")
    return params


def transform_to_latent(cf: CapacityFactorSeries, seasonality) -> np.ndarray:
    """Invert the capacity-factor link: ``X = -log(1 - C) / s``."""
    values = np.asarray(cf.values if isinstance(cf, CapacityFactorSeries) else cf, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    if np.any(values >= 1) or np.any(values < 0):
        raise DomainError("capacity factors must lie in [0, 1) for the log transform")
    doy = cf.day_of_year if isinstance(cf, CapacityFactorSeries) else day_sequence(values.shape[0])
    s = np.column_stack([sp(doy) for sp in seasonality])
    if np.any(s <= 0):
        raise NonPositiveSeasonality("seasonality must be positive")
    return -np.log1p(-np.minimum(values, CF_CEILING)) / s


def latent_to_cf(x, seasonality, start_day: int = 1, regions=DEFAULT_REGIONS,
                 day_of_year=None) -> CapacityFactorSeries:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if np.any(x < 0):
        raise DomainError("latent values must be >= 0")
    doy = day_sequence(x.shape[0], start_day) if day_of_year is None else np.asarray(day_of_year)
    s = np.column_stack([sp(doy) for sp in seasonality])
    c = np.minimum(-np.expm1(-s * x), CF_CEILING)
    return CapacityFactorSeries(c, doy, regions)


def _ar1_slope(x: np.ndarray) -> float:
    prev, nxt = x[:-1], x[1:]
    dp = prev - prev.mean()
    denom = float(dp @ dp)
    if denom == 0.0:
        return math.nan
    return float(dp @ (nxt - nxt.mean())) / denom


def jump_moments(sigma, nu):
    """Mean, covariance and third central moments of ``sigma @ dL``.

    ``dL`` holds independent compound Poisson increments with intensities
    ``nu`` and unit-mean exponential jumps (E J^k = k!).
    """
    sigma = np.asarray(sigma, dtype=float)
    nu = np.asarray(nu, dtype=float)
    mean = sigma @ nu
    cov = 2.0 * (sigma * nu) @ sigma.T
    third = 6.0 * (sigma**3) @ nu
    return mean, cov, third


def _moment_targets(eps: np.ndarray):
    mean = eps.mean(axis=0)
    centred = eps - mean
    cov = centred.T @ centred / eps.shape[0]
    third = (centred**3).mean(axis=0)
    return mean, cov, third


def _exact_moment_match(mean, cov):
    """Solve mean = S nu, cov = 2 S diag(nu) S^T with lower-triangular S.

    ``G = S diag(sqrt(nu))`` is the Cholesky factor of cov/2, and
    ``G^{-1} mean = sqrt(nu)``.  Returns None when no nonnegative solution
    exists.
    """
    try:
        g = np.linalg.cholesky(cov / 2.0)
    except np.linalg.LinAlgError:
        return None
    root_nu = linalg.solve_triangular(g, mean, lower=True)
    if not np.all(np.isfinite(root_nu)) or np.any(root_nu <= 0):
        return None
    sigma = g / root_nu
    if np.any(sigma < -1e-12):
        return None
    return np.maximum(np.tril(sigma), 0.0), root_nu**2


def _least_squares_match(mean, cov, third):
    d = mean.size
    rows, cols = np.tril_indices(d)
    scale_m = np.maximum(np.abs(mean), 1e-12)
    scale_c = np.maximum(np.sqrt(np.outer(np.diag(cov), np.diag(cov)))[rows, cols], 1e-12)
    scale_t = np.maximum(np.abs(third), 1e-12)

    def unpack(theta):
        sigma = np.zeros((d, d))
        sigma[rows, cols] = theta[: rows.size]
        return sigma, theta[rows.size:]

    def resid(theta):
        sigma, nu = unpack(theta)
        m, c, t = jump_moments(sigma, nu)
        return np.concatenate([(m - mean) / scale_m, (c - cov)[rows, cols] / scale_c, (t - third) / scale_t])

    sd = np.sqrt(np.maximum(np.diag(cov), 1e-12))
    theta0 = np.concatenate([np.where(rows == cols, sd, 0.0), np.ones(d)])
    sol = optimize.least_squares(resid, theta0, bounds=(0.0, np.inf), xtol=1e-12, ftol=1e-12)
    return unpack(sol.x)


def fit_ou(x) -> OUParams:
    """Estimate reversion rates and the jump driver from a latent series.

    Rates come from per-region AR(1) regression slopes.  The one-step
    residuals are matched to ``sigma @ dL`` with unit-mean exponential jumps:
    means and covariance identify ``sigma`` (lower-triangular) and the
    intensities exactly; third moments only enter the least-squares fallback.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if np.any(x < 0):
        raise DomainError("latent series must be >= 0")
    if x.shape[0] < 2 * DAYS_PER_YEAR:
        raise InsufficientData(f"need at least {2 * DAYS_PER_YEAR} steps, got {x.shape[0]}")
    phi = np.array([_ar1_slope(x[:, i]) for i in range(x.shape[1])])
    if not np.all((phi > 0) & (phi < 1)):
        raise NonStationary(f"AR(1) slopes {phi} outside (0, 1)")
    lam = -np.log(phi)
    eps = x[1:] - phi * x[:-1]
    mean, cov, third = _moment_targets(eps)
    flat = np.diag(cov) <= (1e-9 * max(float(np.abs(x).max()), 1.0)) ** 2
    if np.any(flat):
        d = x.shape[1]
        raise MomentMatchFailure(
            f"residuals of regions {np.flatnonzero(flat).tolist()} are numerically zero; "
            "the jump driver sits at the nu -> 0 boundary (attached as fallback)",
            fallback=OUParams(lam, np.zeros((d, d)), np.zeros(d)),
        )
    exact = _exact_moment_match(mean, cov)
    if exact is None:
        sigma, nu = _least_squares_match(mean, cov, third)
        fallback = OUParams(lam, sigma, np.maximum(nu, 0.0))
        raise MomentMatchFailure(
            f"residual moments (mean={mean}, cov diag={np.diag(cov)}) admit no nonnegative "
            "jump loading; bounded least-squares fallback attached",
            fallback=fallback,
        )
    sigma, nu = exact
    return OUParams(lam, sigma, nu)


def fit_wind(cf: CapacityFactorSeries) -> WindModelParams:
    """Full estimation chain: seasonality of -log(1-C), latent series, OU fit."""
    z = -np.log1p(-np.minimum(cf.values, CF_CEILING))
    seasonality = tuple(fit_seasonality(z[:, i], cf.day_of_year) for i in range(z.shape[1]))
    x = transform_to_latent(cf, seasonality)
    return WindModelParams(seasonality, fit_ou(x), cf.regions)


# ---------------------------------------------------------------------------
# simulation


def sample_jump_increments(params: OUParams, n_steps: int, rng: np.random.Generator) -> np.ndarray:
    """Per-step compound Poisson increments ``dL``, shape (n_steps, d)."""
    d = params.dims
    counts = rng.poisson(params.jump_intensity, size=(n_steps, d))
    out = np.zeros((n_steps, d))
    hit = counts > 0
    # a sum of k exponentials with mean m is Gamma(k, m)
    out[hit] = rng.gamma(counts[hit], np.broadcast_to(params.jump_mean, (n_steps, d))[hit])
    return out


def simulate_ou(params: OUParams, n_steps: int, x0, rng: np.random.Generator) -> np.ndarray:
    """Simulate ``X(t+1) = exp(-lam) X(t) + sigma @ dL(t)``.

    Returns X(1)..X(n_steps) as an (n_steps, d) array; ``x0`` is X(0).
    """
    if n_steps < 1:
        raise InvalidParameters("n_steps must be >= 1")
    x0 = np.broadcast_to(np.asarray(x0, dtype=float), (params.dims,))
    if np.any(x0 < 0):
        raise DomainError("initial state must be >= 0")
    drive = sample_jump_increments(params, n_steps, rng) @ params.sigma.T
    phi = params.decay
    out = np.empty((n_steps, params.dims))
    for i in range(params.dims):
        out[:, i], _ = signal.lfilter([1.0], [1.0, -phi[i]], drive[:, i], zi=[phi[i] * x0[i]])
    return out


def simulate_wind(params: WindModelParams, n_years: int, rng: np.random.Generator,
                  burn_in: int = DAYS_PER_YEAR, x0=None) -> CapacityFactorSeries:
    """Continuous path of ``n_years`` 365-day years, starting on day 1.

    The chain starts from the stationary mean and the first ``burn_in`` steps
    are discarded.
    """
    if x0 is None:
        x0 = params.ou.stationary_mean()
    n = n_years * DAYS_PER_YEAR
    x = simulate_ou(params.ou, burn_in + n, x0, rng)[burn_in:]
    return latent_to_cf(x, params.seasonality, start_day=1, regions=params.regions)


# ---------------------------------------------------------------------------
# diagnostics


def autocorrelation(x, max_lag: int = 30) -> np.ndarray:
    """Sample autocorrelation at lags 1..max_lag (standard biased estimator)."""
    x = np.asarray(x, dtype=float)
    xc = x - x.mean()
    denom = float(xc @ xc)
    if denom == 0.0:
        return np.full(max_lag, np.nan)
    return np.array([float(xc[:-k] @ xc[k:]) / denom for k in range(1, max_lag + 1)])


def _series_stats(cf: CapacityFactorSeries, seasonality, max_lag):
    c = cf.values
    if seasonality is None:
        latent = -np.log1p(-np.minimum(c, CF_CEILING))
    else:
        latent = transform_to_latent(cf, seasonality)
    out = {
        "mean": c.mean(axis=0),
        "std": c.std(axis=0),
        "skewness": stats.skew(c, axis=0),
        "acf": np.column_stack([autocorrelation(latent[:, i], max_lag) for i in range(c.shape[1])]),
    }
    if c.shape[1] >= 2:
        out["cross_corr"] = float(np.corrcoef(c[:, 0], c[:, 1])[0, 1])
    return out


def diagnostics(cf_sim: CapacityFactorSeries, cf_ref: CapacityFactorSeries,
                seasonality=None, max_lag: int = 30) -> dict:
    """Side-by-side moments, latent autocorrelation and cross-correlation.

    Without ``seasonality`` the latent series is taken as -log(1 - C).
    Returns ``{"sim": ..., "ref": ..., "delta": ...}`` with delta = sim - ref.
    """
    if len(cf_sim) == 0 or len(cf_ref) == 0:
        raise InsufficientData("diagnostics need non-empty series")
    sim = _series_stats(cf_sim, seasonality, max_lag)
    ref = _series_stats(cf_ref, seasonality, max_lag)
    delta = {k: np.asarray(sim[k]) - np.asarray(ref[k]) for k in sim if k in ref}
    return {"sim": sim, "ref": ref, "delta": delta, "regions": cf_sim.regions}
