import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from windflex import dataio
from windflex.errors import DomainError, InsufficientData, MomentMatchFailure, NonPositiveSeasonality
from windflex.fixtures import WIND_TRUTH, WIND_YEARS
from windflex.weather import (CapacityFactorSeries, OUParams, SeasonalityParams, WindModelParams, autocorrelation,
                              day_sequence, diagnostics, fit_ou, fit_seasonality, fit_wind, jump_moments,
                              latent_to_cf, sample_jump_increments, simulate_ou, simulate_wind,
                              transform_to_latent)

SPEC_OU = OUParams([0.3, 0.5], [[0.05, 0.0], [0.02, 0.04]], [0.8, 0.6])


def discrete_stationary_mean(p: OUParams):
    return p.sigma @ (p.jump_intensity * p.jump_mean) / (1.0 - np.exp(-p.lam))


# ---------------------------------------------------------------------------
# seasonality and transform


def test_fit_seasonality_constant():
    doy = day_sequence(3 * 365)
    s = fit_seasonality(np.full(doy.size, 0.5), doy)
    assert (s.a, s.b, s.c) == pytest.approx((0.5, 0.0, 0.0), abs=1e-12)


def test_fit_seasonality_recovers_basis_member():
    doy = day_sequence(2 * 365)
    z = 1 + 0.3 * np.sin(2 * np.pi * doy / 365)
    s = fit_seasonality(z, doy)
    assert (s.a, s.b, s.c) == pytest.approx((1.0, 0.3, 0.0), abs=1e-9)


def test_fit_seasonality_noisy_recovery(rng):
    doy = day_sequence(20 * 365)
    truth = SeasonalityParams(0.4, -0.05, 0.12)
    s = fit_seasonality(truth(doy) + rng.normal(0, 0.05, doy.size), doy)
    assert abs(s.a - truth.a) < 0.02 and abs(s.b - truth.b) < 0.02 and abs(s.c - truth.c) < 0.02


def test_fit_seasonality_errors():
    doy = day_sequence(700)
    with pytest.raises(InsufficientData):
        fit_seasonality(np.ones(700), doy)
    doy = day_sequence(730)
    with pytest.raises(NonPositiveSeasonality):
        fit_seasonality(0.1 + np.cos(2 * np.pi * doy / 365), doy)


def test_transform_examples():
    one = (SeasonalityParams(1.0, 0, 0),)
    two = (SeasonalityParams(2.0, 0, 0),)
    assert transform_to_latent(np.array([[0.0]]), one)[0, 0] == 0.0
    assert transform_to_latent(np.array([[1 - math.exp(-2)]]), two)[0, 0] == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(DomainError):
        transform_to_latent(np.array([[1.0]]), one)


def test_latent_to_cf_examples():
    s = (SeasonalityParams(1.0, 0, 0),)
    assert latent_to_cf(np.zeros((3, 1)), s, regions=("a",)).values.max() == 0.0
    assert latent_to_cf(np.full((1, 1), math.log(2)), s, regions=("a",)).values[0, 0] == pytest.approx(0.5, abs=1e-15)


@settings(max_examples=200)
@given(st.lists(st.floats(0, 0.999), min_size=1, max_size=400), st.floats(0.05, 2.0), st.floats(-0.04, 0.04))
def test_round_trip(values, a, c):
    seas = (SeasonalityParams(a, 0.0, c),)
    cf = CapacityFactorSeries(np.array(values), day_sequence(len(values)), ("r",))
    back = latent_to_cf(transform_to_latent(cf, seas), seas, regions=("r",))
    np.testing.assert_allclose(back.values, cf.values, rtol=0, atol=1e-12)


def test_capacity_factor_series_validation():
    with pytest.raises(DomainError):
        CapacityFactorSeries(np.array([[0.2, 1.0]]), [1])
    with pytest.raises(DomainError):
        CapacityFactorSeries(np.array([[0.2, np.nan]]), [1])


# ---------------------------------------------------------------------------
# simulation


def test_pure_decay():
    p = OUParams([math.log(2)] * 2, np.eye(2), [0.0, 0.0])
    x = simulate_ou(p, 2, [1.0, 1.0], np.random.default_rng(0))
    np.testing.assert_allclose(x, [[0.5, 0.5], [0.25, 0.25]], rtol=0, atol=1e-15)


def test_large_lambda_is_memoryless():
    p = OUParams([60.0, 60.0], [[0.3, 0.0], [0.1, 0.2]], [0.7, 0.4])
    x = simulate_ou(p, 500, [5.0, 5.0], np.random.default_rng(3))
    jumps = sample_jump_increments(p, 500, np.random.default_rng(3)) @ p.sigma.T
    np.testing.assert_allclose(x, jumps, rtol=1e-12, atol=1e-12)


def test_stationary_mean_oracle():
    x = simulate_ou(SPEC_OU, 10**6, discrete_stationary_mean(SPEC_OU), np.random.default_rng(11))
    np.testing.assert_allclose(x.mean(axis=0), discrete_stationary_mean(SPEC_OU), rtol=0.01)


def test_continuous_mean_is_small_lambda_limit():
    p = OUParams([1e-3, 2e-3], [[0.05, 0.0], [0.02, 0.04]], [0.8, 0.6])
    continuous = p.sigma @ p.jump_intensity / p.lam
    np.testing.assert_allclose(discrete_stationary_mean(p), continuous, rtol=0.01)
    np.testing.assert_allclose(p.stationary_mean(), discrete_stationary_mean(p), rtol=1e-12)


def test_autocorrelation_decays_like_exp_lambda():
    x = simulate_ou(SPEC_OU, 10**5, discrete_stationary_mean(SPEC_OU), np.random.default_rng(5))
    for i, lam in enumerate(SPEC_OU.lam):
        acf = autocorrelation(x[:, i], 5)
        se = 3 / math.sqrt(x.shape[0]) * math.sqrt((1 + math.exp(-2 * lam)) / (1 - math.exp(-2 * lam)))
        np.testing.assert_allclose(acf, np.exp(-lam * np.arange(1, 6)), atol=5 * se)


def test_seed_determinism():
    a = simulate_ou(SPEC_OU, 1000, [0.1, 0.1], np.random.default_rng(9))
    b = simulate_ou(SPEC_OU, 1000, [0.1, 0.1], np.random.default_rng(9))
    assert a.tobytes() == b.tobytes()


@st.composite
def ou_params(draw):
    lam = [draw(st.floats(0.01, 5.0)) for _ in range(2)]
    s21 = draw(st.floats(0, 2))
    sigma = [[draw(st.floats(0, 2)), 0.0], [s21, draw(st.floats(0, 2))]]
    nu = [draw(st.floats(0, 3)) for _ in range(2)]
    return OUParams(lam, sigma, nu)


@settings(max_examples=100)
@given(ou_params(), st.floats(0, 10), st.integers(0, 2**32 - 1))
def test_positivity(params, x0, seed):
    x = simulate_ou(params, 400, [x0, x0], np.random.default_rng(seed))
    assert np.all(x >= 0)
    cf = latent_to_cf(x, (SeasonalityParams(0.3, 0.1, 0.05), SeasonalityParams(0.2, 0.0, 0.1)))
    assert np.all(cf.values >= 0) and np.all(cf.values < 1)


# ---------------------------------------------------------------------------
# estimation


def test_jump_moments_match_simulation():
    inc = sample_jump_increments(SPEC_OU, 400_000, np.random.default_rng(1)) @ SPEC_OU.sigma.T
    mean, cov, third = jump_moments(SPEC_OU.sigma, SPEC_OU.jump_intensity)
    np.testing.assert_allclose(inc.mean(0), mean, rtol=0.02)
    np.testing.assert_allclose(np.cov(inc.T), cov, rtol=0.03, atol=1e-5)
    np.testing.assert_allclose(((inc - inc.mean(0)) ** 3).mean(0), third, rtol=0.06)


def test_fit_ou_recovers_spec_example():
    x = simulate_ou(SPEC_OU, 40 * 365, discrete_stationary_mean(SPEC_OU), np.random.default_rng(2024))
    fit = fit_ou(x)
    assert np.all(np.abs(fit.lam - SPEC_OU.lam) < 0.05)
    assert np.all(np.abs(fit.jump_intensity - SPEC_OU.jump_intensity) < 0.2)
    assert np.all(np.abs(fit.sigma - SPEC_OU.sigma) < 0.02)


def test_fit_ou_reproduces_residual_moments():
    x = simulate_ou(SPEC_OU, 20 * 365, [0.1, 0.1], np.random.default_rng(8))
    fit = fit_ou(x)
    phi = np.exp(-fit.lam)
    eps = x[1:] - phi * x[:-1]
    mean, cov, _ = jump_moments(fit.sigma, fit.jump_intensity)
    np.testing.assert_allclose(mean, eps.mean(0), rtol=0, atol=1e-6)
    np.testing.assert_allclose(cov, np.cov(eps.T, bias=True), rtol=0, atol=1e-6)


def test_fit_ou_degenerate_decay():
    p = OUParams([0.2, 0.3], np.eye(2), [0.0, 0.0])
    x = simulate_ou(p, 800, [1.0, 2.0], np.random.default_rng(0)) + 1e-3
    try:
        fit = fit_ou(x)
    except MomentMatchFailure as exc:
        assert exc.fallback is not None
        assert not exc.fallback.jump_intensity.any()
    else:
        assert np.all(fit.jump_intensity < 1e-6)


def test_fit_ou_recovery_property():
    for seed in range(3):
        x = simulate_ou(SPEC_OU, 40 * 365, discrete_stationary_mean(SPEC_OU), np.random.default_rng(100 + seed))
        assert np.all(np.abs(fit_ou(x).lam - SPEC_OU.lam) < 0.05)


@pytest.fixture(scope="module")
def fixture_cf():
    from importlib import resources

    path = resources.files("windflex") / "data" / "fixtures" / "capacity_factors.csv"
    return dataio.ingest_timeseries(path, "cf").as_capacity_factors()


def test_fixture_moments_near_reference(fixture_cf):
    mean = fixture_cf.values.mean(axis=0)
    assert len(fixture_cf) == (WIND_YEARS[1] - WIND_YEARS[0] + 1) * 365
    assert abs(mean[0] - 0.273) < 0.05 and abs(mean[1] - 0.180) < 0.05


def test_fit_wind_round_trip(fixture_cf):
    fit = fit_wind(fixture_cf)
    assert np.all(np.abs(fit.ou.lam - WIND_TRUTH.ou.lam) < 0.05)
    assert np.all(np.abs(fit.ou.jump_intensity - WIND_TRUTH.ou.jump_intensity) < 0.2)
    assert np.all(np.abs(fit.ou.sigma - WIND_TRUTH.ou.sigma) < 0.05)
    for s_fit, s_true in zip(fit.seasonality, WIND_TRUTH.seasonality):
        assert abs(s_fit.a - s_true.a) < 0.02 and abs(s_fit.c - s_true.c) < 0.02


def test_resimulated_latent_mean(fixture_cf, wind_params):
    x_fixture = transform_to_latent(fixture_cf, wind_params.seasonality)
    cf = simulate_wind(wind_params, 100, np.random.default_rng(77))
    x_sim = transform_to_latent(cf, wind_params.seasonality)
    np.testing.assert_allclose(x_sim.mean(0), x_fixture.mean(0), rtol=0.05)


def test_wind_params_json_round_trip(tmp_path, wind_params):
    dataio.save_wind_params(wind_params, tmp_path / "w.json")
    back = dataio.load_wind_params(tmp_path / "w.json")
    assert back.to_dict() == wind_params.to_dict()


# ---------------------------------------------------------------------------
# diagnostics


def test_diagnostics_identical_inputs(fixture_cf):
    rep = diagnostics(fixture_cf, fixture_cf)
    for v in rep["delta"].values():
        assert not np.any(v)


def test_diagnostics_cross_correlation(fixture_cf, wind_params):
    cf = simulate_wind(wind_params, 100, np.random.default_rng(4))
    rep = diagnostics(cf, fixture_cf, wind_params.seasonality)
    assert abs(rep["sim"]["cross_corr"] - 0.464) < 0.06
    assert rep["sim"]["acf"].shape == (30, 2)


def test_white_noise_autocorrelation(rng):
    x = rng.standard_normal(20000)
    assert np.all(np.abs(autocorrelation(x, 30)) < 3 / math.sqrt(x.size))


def test_simulated_moments_close_to_targets(wind_params):
    cf = simulate_wind(wind_params, 100, np.random.default_rng(2023)).values
    np.testing.assert_allclose(cf.mean(0), [0.269, 0.180], atol=0.02)
    np.testing.assert_allclose(cf.std(0), [0.149, 0.131], atol=0.02)
    np.testing.assert_allclose(stats.skew(cf, axis=0), [0.767, 1.362], atol=0.25)


def test_wind_model_requires_positive_seasonality():
    with pytest.raises(NonPositiveSeasonality):
        WindModelParams((SeasonalityParams(0.01, 0.0, 0.5),), OUParams([0.3], [[1.0]], [0.5]))
