import importlib
from dataclasses import replace

import numpy as np
import pytest

import oracles
from windflex.dispatch import SCENARIOS, FlexSpec
from windflex.errors import EmptySurface, GridMismatch, InvalidParameters
from windflex.sweep import (LossSurface, SensitivitySpec, SweepConfig, argmin_surface, dominance_map, evaluate_plan,
                            grid_axis, merge_surfaces, penalty_profiles, realization_seed, run_realization,
                            sensitivity, simulate_year, simulate_years, sweep, sweep_penalties)

sw = importlib.import_module("windflex.sweep")

SMALL = SweepConfig(grid_nn=(3250.0, 6000.0, 1375.0), grid_ns=(1800.0, 10000.0, 4100.0), n_realizations=6)


@pytest.fixture(scope="module")
def small_surface(wind_params, demand_params):
    return sweep(SMALL, wind_params, demand_params)


def test_grid_axis():
    np.testing.assert_allclose(grid_axis(0, 10, 2.5), [0, 2.5, 5, 7.5, 10])
    np.testing.assert_allclose(grid_axis(0, 10, 2.5, stride=2), [0, 5, 10])
    assert grid_axis(3250, 6000, 2750 / 109).size == 110
    assert grid_axis(1800, 10000, 8200 / 162).size == 163
    with pytest.raises(InvalidParameters):
        grid_axis(1, 0, 1)


def test_config_validation():
    with pytest.raises(InvalidParameters):
        SweepConfig(n_realizations=0)
    with pytest.raises(InvalidParameters):
        SweepConfig(scenarios=("bogus",))
    assert SweepConfig(scenarios=("full-flex", "no-flex")).scenarios == ("no-flex", "full-flex")


@pytest.mark.parametrize("scenario", SCENARIOS)
def test_single_cell_equals_run_realization(scenario, wind_params, demand_params):
    cfg = SweepConfig(grid_nn=(4000.0, 4000.0, 1.0), grid_ns=(3000.0, 3000.0, 1.0), n_realizations=1,
                      scenarios=(scenario,))
    surf = sweep(cfg, wind_params, demand_params)
    res = run_realization((4000.0, 3000.0), scenario, cfg.base_flex, wind_params, demand_params,
                          realization_seed(cfg.master_seed, 0))
    assert surf.expected[0, 0, 0] == pytest.approx(res.total, rel=1e-12)
    np.testing.assert_allclose(surf.per_node[0, 0, 0], res.per_node, rtol=1e-12)


def test_zero_capacity_penalty_is_squared_demand(wind_params, demand_params):
    seed = realization_seed(7, 3)
    _, load = simulate_year(wind_params, demand_params, seed, 0.128)
    for scen in SCENARIOS:
        res = run_realization((0.0, 0.0), scen, FlexSpec(), wind_params, demand_params, seed)
        assert res.total == pytest.approx(float((load**2).sum()), rel=1e-12)


def test_end_to_end_no_flex_oracle(wind_params, demand_params):
    seed = realization_seed(2023, 11)
    cf, load = simulate_year(wind_params, demand_params, seed, 0.128)
    plan = np.array([3257.0, 1811.0])
    expected = sum(sum(row) for row in oracles.no_flex_losses((cf * plan).tolist(), load.tolist()))
    res = run_realization(plan, "no-flex", FlexSpec(), wind_params, demand_params, seed)
    assert res.total == pytest.approx(expected, rel=1e-12)


def test_seed_isolation(wind_params, demand_params):
    seed = realization_seed(1, 4)
    first = [run_realization((4000, 3000), s, FlexSpec(), wind_params, demand_params, seed) for s in SCENARIOS]
    second = [run_realization((4000, 3000), s, FlexSpec(), wind_params, demand_params, seed) for s in SCENARIOS[::-1]]
    for a, b in zip(first, second[::-1]):
        assert a.total == b.total
    a = simulate_year(wind_params, demand_params, realization_seed(1, 4), 0.128)
    b = simulate_year(wind_params, demand_params, realization_seed(1, 4), 0.128)
    c = simulate_year(wind_params, demand_params, realization_seed(1, 5), 0.128)
    assert a[0].tobytes() == b[0].tobytes() and a[1].tobytes() == b[1].tobytes()
    assert a[0].tobytes() != c[0].tobytes()


def test_realizations_do_not_depend_on_count(wind_params, demand_params):
    # realization r is the same year whether 3 or 6 are drawn
    _, _, six = sweep_penalties(SMALL, wind_params, demand_params)
    _, _, three = sweep_penalties(replace(SMALL, n_realizations=3), wind_params, demand_params)
    assert six[..., :3, :].tobytes() == np.ascontiguousarray(three).tobytes()
    # and every scenario and cell saw the same draws: zero-capacity cells equal the demand penalty
    cf, load = simulate_years(SMALL, wind_params, demand_params)
    assert not np.array_equal(six[..., 0, :], six[..., 1, :])
    assert cf.shape == (6, 365, 2) and load.shape == (6, 365, 2)


def test_expected_surface_dominance(small_surface):
    s = small_surface
    assert np.all(s.expected >= 0)
    assert s.expected.shape == (4, 3, 3)
    nf = s.expected[s.index("no-flex")]
    assert np.all(s.expected[s.index("trans")] <= nf)
    assert np.all(s.expected[s.index("stor")] <= nf)
    np.testing.assert_allclose(s.per_node.sum(-1), s.expected, rtol=1e-12)


def test_zero_capacity_surfaces_identical(wind_params, demand_params):
    cfg = SweepConfig(grid_nn=(0.0, 0.0, 1.0), grid_ns=(0.0, 0.0, 1.0), n_realizations=4)
    s = sweep(cfg, wind_params, demand_params)
    for k in range(1, 4):
        assert s.expected[k].tobytes() == s.expected[0].tobytes()


def test_stderr_shrinks_with_realizations(wind_params, demand_params):
    base = dict(grid_nn=(3250.0, 3250.0, 1.0), grid_ns=(1800.0, 1800.0, 1.0), scenarios=("no-flex",))
    errs = [float(sweep(SweepConfig(n_realizations=n, **base), wind_params, demand_params).stderr.squeeze())
            for n in (50, 100, 200, 400)]
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    # doubling n divides the standard error by about sqrt(2)
    assert np.all(np.abs(ratios / np.sqrt(2) - 1) < 0.2), ratios


def _surface(values, scenarios=("no-flex",), nn=None, ns=None):
    values = np.asarray(values, dtype=float)
    if values.ndim == 2:
        values = values[None]
    nn = np.arange(values.shape[1], dtype=float) * 100 + 1000 if nn is None else nn
    ns = np.arange(values.shape[2], dtype=float) * 100 + 500 if ns is None else ns
    per_node = np.stack([values / 2, values / 2], axis=-1)
    return LossSurface(np.asarray(nn), np.asarray(ns), tuple(scenarios), values, per_node, np.zeros_like(values), 1)


def test_argmin_constant_surface_picks_smallest_corner():
    opt = argmin_surface(_surface(np.full((3, 4), 5.0)), reference=(1100, 600))["no-flex"]
    assert (opt.opt_nn_mw, opt.opt_ns_mw) == (1000.0, 500.0)
    assert opt.improvement == 0.0


def test_argmin_unique_minimum():
    opt = argmin_surface(_surface([[4.0, 3.0], [1.0, 2.0]]), reference=(1000, 500))["no-flex"]
    assert (opt.opt_nn_mw, opt.opt_ns_mw) == (1100.0, 500.0)
    assert opt.improvement == pytest.approx(0.75)


def test_argmin_tie_prefers_smaller_total_then_smaller_north():
    opt = argmin_surface(_surface([[9.0, 1.0], [1.0, 1.0]]), reference=(1000, 500))["no-flex"]
    assert (opt.opt_nn_mw, opt.opt_ns_mw) == (1000.0, 600.0)


def test_argmin_common_baseline():
    s = _surface(np.stack([np.full((2, 2), 10.0), [[8.0, 5.0], [6.0, 7.0]]]), scenarios=("no-flex", "trans"))
    opt = argmin_surface(s, reference=(1000, 500))
    assert opt["trans"].improvement == pytest.approx(0.5)
    assert opt["trans"].own_improvement == pytest.approx(1 - 5 / 8)
    own = argmin_surface(s, reference=(1000, 500), baseline=None)
    assert own["trans"].improvement == pytest.approx(1 - 5 / 8)


def test_argmin_empty():
    with pytest.raises(EmptySurface):
        argmin_surface(_surface(np.zeros((1, 0, 0))))


def test_dominance_identical_surfaces_use_canonical_order():
    s = _surface(np.ones((4, 2, 3)), scenarios=SCENARIOS[::-1])
    best, second = dominance_map(s)
    assert np.all(best == "no-flex") and np.all(second == "trans")


def test_dominance_uniform_winner():
    vals = np.ones((4, 3, 3))
    vals[3] = 0.5
    best, _ = dominance_map([_surface(vals[k], (SCENARIOS[k],)) for k in range(4)])
    assert np.all(best == "full-flex")


def test_dominance_grid_mismatch():
    a = _surface(np.ones((2, 2)), ("no-flex",))
    b = _surface(np.ones((2, 2)), ("trans",), nn=np.array([0.0, 1.0]))
    with pytest.raises(GridMismatch):
        dominance_map([a, b])
    with pytest.raises(GridMismatch):
        merge_surfaces([a, a])


def test_sensitivity_unit_multiplier_gives_zero_deltas(wind_params, demand_params):
    cfg = SweepConfig(grid_nn=(3250.0, 6000.0, 2750.0), grid_ns=(1800.0, 10000.0, 4100.0), n_realizations=3)
    specs = [SensitivitySpec(f, (1.0,)) for f in ("demand_joint", "transmission", "storage", "charging")]
    specs.append(SensitivitySpec("demand_node", (1.0,), node=1))
    rows = sensitivity(cfg, specs, wind_params, demand_params)
    assert len(rows) == 5 * 4
    for r in rows:
        assert (r.delta_vs_base, r.delta_opt_nn_mw, r.delta_opt_ns_mw) == (0.0, 0.0, 0.0)


def test_sensitivity_spec_validation():
    with pytest.raises(InvalidParameters):
        SensitivitySpec("weather")
    with pytest.raises(InvalidParameters):
        SensitivitySpec("storage", (0.0,))
    with pytest.raises(InvalidParameters):
        SensitivitySpec("demand_node", (1.1,))


def test_checkpoint_resume(tmp_path, wind_params, demand_params, monkeypatch):
    monkeypatch.setattr(sw, "CHUNK_ELEMENTS", 12)  # two cells per chunk, five chunks
    ck = str(tmp_path / "ck.npz")
    full = sweep(SMALL, wind_params, demand_params)
    calls = []
    real = sw._evaluate_chunk

    def flaky(args):
        if len(calls) == 3:
            raise RuntimeError("interrupted")
        calls.append(1)
        return real(args)

    monkeypatch.setattr(sw, "_evaluate_chunk", flaky)
    monkeypatch.setattr(sw, "CHECKPOINT_EVERY", 1)
    with pytest.raises(RuntimeError):
        sweep(SMALL, wind_params, demand_params, checkpoint=ck)
    saved = np.load(ck)
    assert len(saved["done"]) == 3
    calls.clear()
    monkeypatch.setattr(sw, "_evaluate_chunk", lambda a: (calls.append(1), real(a))[1])
    resumed = sweep(SMALL, wind_params, demand_params, checkpoint=ck)
    assert len(calls) == 2
    assert resumed.expected.tobytes() == full.expected.tobytes()
    # a different flexibility spec must not reuse the checkpoint
    calls.clear()
    sweep(SMALL, wind_params, demand_params, checkpoint=ck, flex=FlexSpec(transmission_mw=450.0))
    assert len(calls) == 5


@pytest.mark.slow
def test_worker_count_does_not_change_results(wind_params, demand_params, monkeypatch):
    monkeypatch.setattr(sw, "CHUNK_ELEMENTS", 24)
    ref = sweep(SMALL, wind_params, demand_params, threads=1)
    for threads in (4, 8):
        other = sweep(SMALL, wind_params, demand_params, threads=threads)
        assert other.expected.tobytes() == ref.expected.tobytes()
        assert other.per_node.tobytes() == ref.per_node.tobytes()
        assert other.stderr.tobytes() == ref.stderr.tobytes()


def test_evaluate_plan_matches_grid_cell(small_surface, wind_params, demand_params):
    one = evaluate_plan((4625.0, 5900.0), SMALL, wind_params, demand_params)
    np.testing.assert_array_equal(one.expected[:, 0, 0], small_surface.expected[:, 1, 1])


def test_penalty_profiles(wind_params, demand_params):
    cfg = SweepConfig(n_realizations=10)
    rows = penalty_profiles((3257, 1811), "full-flex", cfg, wind_params, demand_params)
    loss = [r for r in rows if r["quantity"] == "loss"]
    assert len(loss) == 365 * 2
    assert {r["node"] for r in loss} == {0, 1}
    assert all(r["q_low"] <= r["q_high"] and r["mean"] >= 0 for r in loss)
