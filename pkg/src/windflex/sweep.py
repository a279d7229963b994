"""Monte Carlo loss surfaces over a grid of wind capacity plans.

Every realization index ``r`` owns a random stream derived only from
``(master_seed, r)``; the same simulated weather/load years are reused for
every grid cell and scenario (common random numbers).  Work is split into
fixed chunks of grid cells, so the result does not depend on how many
workers evaluate them or in which order.
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .demand import DemandModelParams, simulate_demand
from .dispatch import SCENARIOS, CapacityPlan, FlexSpec, aggregate_penalty, dispatch
from .errors import EmptySurface, GridMismatch, InvalidParameters
from .weather import DAYS_PER_YEAR, WindModelParams, simulate_wind

log = logging.getLogger(__name__)

REFERENCE_PLAN_MW = (3257.0, 1811.0)
GRID_NN_MW = (3250.0, 6000.0, (6000.0 - 3250.0) / 109)
GRID_NS_MW = (1800.0, 10000.0, (10000.0 - 1800.0) / 162)
# grid cells per work unit; fixed so chunking never depends on the worker count
CHUNK_ELEMENTS = 16384
# chunks between checkpoint writes
CHECKPOINT_EVERY = 16


def grid_axis(lo: float, hi: float, step: float, stride: int = 1) -> np.ndarray:
    if not step > 0 or hi < lo:
        raise InvalidParameters(f"invalid grid range ({lo}, {hi}, {step})")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return (lo + step * np.arange(n))[::stride]


@dataclass(frozen=True)
class SweepConfig:
    grid_nn: tuple = GRID_NN_MW
    grid_ns: tuple = GRID_NS_MW
    n_realizations: int = 100
    scenarios: tuple = SCENARIOS
    base_flex: FlexSpec = field(default_factory=FlexSpec)
    coverage_share: float = 0.128
    master_seed: int = 2023
    stride: int = 1
    start_weekday: int = 0
    holidays: tuple = ()

    def __post_init__(self):
        if self.n_realizations < 1:
            raise InvalidParameters("n_realizations must be >= 1")
        unknown = set(self.scenarios) - set(SCENARIOS)
        if unknown or not self.scenarios:
            raise InvalidParameters(f"unknown scenarios {sorted(unknown)}")
        if self.stride < 1:
            raise InvalidParameters("stride must be >= 1")
        if not 0 < self.coverage_share <= 1:
            raise InvalidParameters("coverage_share must be in (0, 1]")
        # canonical scenario order
        object.__setattr__(self, "scenarios", tuple(s for s in SCENARIOS if s in self.scenarios))
        object.__setattr__(self, "grid_nn", tuple(float(v) for v in self.grid_nn))
        object.__setattr__(self, "grid_ns", tuple(float(v) for v in self.grid_ns))
        self.axes()

    def axes(self):
        return grid_axis(*self.grid_nn, self.stride), grid_axis(*self.grid_ns, self.stride)

    def fingerprint(self) -> str:
        payload = {
            "grid_nn": self.grid_nn, "grid_ns": self.grid_ns, "n": self.n_realizations,
            "scenarios": self.scenarios, "flex": self.base_flex.to_dict(), "share": self.coverage_share,
            "seed": self.master_seed, "stride": self.stride, "weekday": self.start_weekday,
            "holidays": list(self.holidays),
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


@dataclass(eq=False)
class LossSurface:
    """Expected penalties per scenario over the capacity grid.

    ``expected`` is (S, Nn, Ns); ``per_node`` is (S, Nn, Ns, 2); ``stderr``
    is the standard error of the total over realizations.
    """

    nn_mw: np.ndarray
    ns_mw: np.ndarray
    scenarios: tuple
    expected: np.ndarray
    per_node: np.ndarray
    stderr: np.ndarray
    n_realizations: int = 0

    def index(self, scenario: str) -> int:
        return self.scenarios.index(scenario)

    def nearest_cell(self, plan) -> tuple:
        plan = np.asarray(plan, dtype=float)
        return int(np.argmin(np.abs(self.nn_mw - plan[0]))), int(np.argmin(np.abs(self.ns_mw - plan[1])))

    def select(self, scenarios) -> "LossSurface":
        idx = [self.index(s) for s in scenarios]
        return replace(self, scenarios=tuple(scenarios), expected=self.expected[idx],
                       per_node=self.per_node[idx], stderr=self.stderr[idx])


def merge_surfaces(surfaces) -> LossSurface:
    """Combine single- or multi-scenario surfaces that share one grid."""
    surfaces = list(surfaces)
    if not surfaces:
        raise EmptySurface("no surfaces given")
    first = surfaces[0]
    for s in surfaces[1:]:
        if not (np.array_equal(s.nn_mw, first.nn_mw) and np.array_equal(s.ns_mw, first.ns_mw)):
            raise GridMismatch("surfaces are defined on different capacity grids")
    scenarios = sum((tuple(s.scenarios) for s in surfaces), ())
    if len(set(scenarios)) != len(scenarios):
        raise GridMismatch(f"duplicate scenarios {scenarios}")
    return LossSurface(first.nn_mw, first.ns_mw, scenarios,
                       np.concatenate([s.expected for s in surfaces]),
                       np.concatenate([s.per_node for s in surfaces]),
                       np.concatenate([s.stderr for s in surfaces]),
                       min(s.n_realizations for s in surfaces))


# ---------------------------------------------------------------------------
# realizations


def realization_seed(master_seed: int, r: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master_seed, spawn_key=(r,))


def simulate_year(wind: WindModelParams, demand: DemandModelParams, seed, coverage_share: float,
                  start_weekday: int = 0, holidays=()):
    """One 365-day weather year: capacity factors and load, both (365, 2).

    Wind and temperature draw from separate child streams of ``seed``.
    """
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    # children built directly rather than via spawn(), which mutates ``seed``
    wind_ss, temp_ss = (np.random.SeedSequence(seed.entropy, spawn_key=seed.spawn_key + (k,),
                                               pool_size=seed.pool_size) for k in range(2))
    cf = simulate_wind(wind, 1, np.random.default_rng(wind_ss)).values
    _, load = simulate_demand(demand, 1, np.random.default_rng(temp_ss), coverage_share, start_weekday, holidays)
    return cf, load.values


def simulate_years(config: SweepConfig, wind, demand, demand_scale=None):
    """Capacity factors and load for all realizations, each (R, 365, 2)."""
    cfs, loads = [], []
    for r in range(config.n_realizations):
        cf, load = simulate_year(wind, demand, realization_seed(config.master_seed, r),
                                 config.coverage_share, config.start_weekday, config.holidays)
        cfs.append(cf)
        loads.append(load)
    loads = np.array(loads)
    if demand_scale is not None:
        loads = loads * np.asarray(demand_scale, dtype=float)
    return np.array(cfs), loads


@dataclass
class RealizationResult:
    scenario: str
    per_node: np.ndarray
    total: float
    trace: object


def run_realization(plan: CapacityPlan, scenario: str, flex: FlexSpec, wind: WindModelParams,
                    demand: DemandModelParams, seed, coverage_share: float = 0.128,
                    start_weekday: int = 0, holidays=()) -> RealizationResult:
    """Simulate one year from ``seed``, dispatch ``scenario`` and aggregate."""
    if not isinstance(plan, CapacityPlan):
        plan = CapacityPlan(plan)
    cf, load = simulate_year(wind, demand, seed, coverage_share, start_weekday, holidays)
    trace = dispatch(scenario, plan.production(cf), load, flex)
    per_node, total = aggregate_penalty(trace)
    return RealizationResult(scenario, per_node, float(total), trace)


# ---------------------------------------------------------------------------
# sweep


def _evaluate_chunk(args):
    """Per-node annual penalties for a set of cells, (S, cells, R, 2)."""
    plans, cf, load, flex, scenarios = args
    # (T, cells, R, d)
    cf_t = np.moveaxis(cf, 1, 0)[:, None]
    prod = cf_t * plans[None, :, None, :]
    dem = np.broadcast_to(np.moveaxis(load, 1, 0)[:, None], prod.shape)
    return np.stack([dispatch(s, prod, dem, flex, record=False) for s in scenarios])


def _chunks(n_cells: int, n_real: int):
    per = max(1, CHUNK_ELEMENTS // n_real)
    return [(lo, min(lo + per, n_cells)) for lo in range(0, n_cells, per)]


def _summarise(nn, ns, scenarios, penalties, n_real) -> LossSurface:
    """Reduce (S, Nn, Ns, R, 2) per-realization penalties to a surface."""
    totals = penalties.sum(axis=-1)
    shape = totals.shape[:-1]
    expected = np.empty(shape)
    per_node = np.empty(shape + (penalties.shape[-1],))
    for idx in np.ndindex(shape):
        expected[idx] = math.fsum(totals[idx]) / n_real
        for k in range(penalties.shape[-1]):
            per_node[idx + (k,)] = math.fsum(penalties[idx + (slice(None), k)]) / n_real
    if n_real > 1:
        dev = totals - expected[..., None]
        stderr = np.sqrt((dev * dev).sum(axis=-1) / (n_real - 1) / n_real)
    else:
        stderr = np.zeros(shape)
    return LossSurface(nn, ns, tuple(scenarios), expected, per_node, stderr, n_real)


def sweep_penalties(config: SweepConfig, wind, demand, threads: int = 1, checkpoint: str | None = None,
                    flex: FlexSpec | None = None, demand_scale=None, years=None):
    """Per-realization penalties, (S, Nn, Ns, R, 2), plus the grid axes."""
    flex = config.base_flex if flex is None else flex
    nn, ns = config.axes()
    cf, load = simulate_years(config, wind, demand, demand_scale) if years is None else years
    cells = np.array([(a, b) for a in nn for b in ns], dtype=float)
    chunks = _chunks(len(cells), config.n_realizations)
    n_s = len(config.scenarios)
    result = np.full((n_s, len(cells), config.n_realizations, 2), np.nan)
    done = set()
    if checkpoint and os.path.exists(checkpoint):
        saved = np.load(checkpoint, allow_pickle=False)
        if str(saved["fingerprint"]) == _checkpoint_key(config, flex) and saved["result"].shape == result.shape:
            result = saved["result"].copy()
            done = set(int(i) for i in saved["done"])
            log.info("resuming sweep: %d of %d chunks done", len(done), len(chunks))
    todo = [i for i in range(len(chunks)) if i not in done]
    jobs = ((cells[lo:hi], cf, load, flex, config.scenarios) for lo, hi in (chunks[i] for i in todo))

    def store(i, block):
        lo, hi = chunks[i]
        result[:, lo:hi] = block
        done.add(i)
        if checkpoint and (len(done) % CHECKPOINT_EVERY == 0 or len(done) == len(chunks)):
            _save_checkpoint(checkpoint, _checkpoint_key(config, flex), result, done)

    if threads <= 1 or len(todo) <= 1:
        for i, job in zip(todo, jobs):
            store(i, _evaluate_chunk(job))
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for i, block in zip(todo, pool.map(_evaluate_chunk, jobs)):
                store(i, block)
    return nn, ns, result.reshape(n_s, len(nn), len(ns), config.n_realizations, 2)


def _checkpoint_key(config: SweepConfig, flex: FlexSpec) -> str:
    blob = json.dumps(flex.to_dict(), sort_keys=True).encode()
    return config.fingerprint() + hashlib.sha256(blob).hexdigest()[:8]


def _save_checkpoint(path, key, result, done):
    tmp = path + ".tmp.npz"
    np.savez(tmp, fingerprint=key, result=result, done=np.array(sorted(done)))
    os.replace(tmp, path)


def sweep(config: SweepConfig, wind: WindModelParams, demand: DemandModelParams, threads: int = 1,
          checkpoint: str | None = None, flex: FlexSpec | None = None, demand_scale=None) -> LossSurface:
    """Expected annual penalty for every grid cell and scenario."""
    nn, ns, pen = sweep_penalties(config, wind, demand, threads, checkpoint, flex, demand_scale)
    return _summarise(nn, ns, config.scenarios, pen, config.n_realizations)


def evaluate_plan(plan, config: SweepConfig, wind, demand, flex: FlexSpec | None = None,
                  demand_scale=None) -> LossSurface:
    """Expected penalties of a single plan (a 1x1 surface)."""
    plan = np.asarray(plan, dtype=float)
    single = replace(config, grid_nn=(plan[0], plan[0], 1.0), grid_ns=(plan[1], plan[1], 1.0), stride=1)
    return sweep(single, wind, demand, flex=flex, demand_scale=demand_scale)


# ---------------------------------------------------------------------------
# analysis


@dataclass
class Optimum:
    scenario: str
    opt_nn_mw: float
    opt_ns_mw: float
    expected_penalty: float
    reference_penalty: float
    improvement: float
    per_node: np.ndarray
    own_reference_penalty: float = float("nan")
    own_improvement: float = float("nan")


def _ratio_gain(best: float, ref: float) -> float:
    return 1.0 - best / ref if ref > 0 else 0.0


def argmin_surface(surface: LossSurface, reference=REFERENCE_PLAN_MW, baseline: str | None = "no-flex") -> dict:
    """Loss-minimising plan per scenario and its improvement over the reference.

    Ties go to the smaller total capacity, then to the smaller northern one.
    The reference is the grid cell nearest to ``reference``.

    ``improvement`` compares each optimum with the reference plan evaluated
    under the ``baseline`` scenario (today's capacities without flexibility
    by default), so all scenarios share one denominator.  When the baseline
    is ``None`` or absent from the surface, each scenario uses its own
    reference penalty.  ``own_improvement`` always uses the latter.
    """
    if surface.expected.size == 0 or len(surface.nn_mw) == 0 or len(surface.ns_mw) == 0:
        raise EmptySurface("surface has no cells")
    ri, rj = surface.nearest_cell(reference)
    total_cap = surface.nn_mw[:, None] + surface.ns_mw[None, :]
    nn_grid = np.broadcast_to(surface.nn_mw[:, None], total_cap.shape)
    common = None
    if baseline is not None and baseline in surface.scenarios:
        common = float(surface.expected[surface.index(baseline), ri, rj])
    out = {}
    for k, scen in enumerate(surface.scenarios):
        values = surface.expected[k]
        order = np.lexsort((nn_grid.ravel(), total_cap.ravel(), values.ravel()))
        i, j = np.unravel_index(order[0], values.shape)
        best, own = float(values[i, j]), float(values[ri, rj])
        ref = own if common is None else common
        out[scen] = Optimum(scen, float(surface.nn_mw[i]), float(surface.ns_mw[j]), best, ref,
                            _ratio_gain(best, ref), surface.per_node[k, i, j].copy(),
                            own, _ratio_gain(best, own))
    return out


def dominance_map(surfaces):
    """Best and second-best scenario per grid cell.

    Accepts one multi-scenario surface or a sequence of surfaces on the same
    grid.  Ties keep the canonical scenario order.  Returns the (Nn, Ns)
    label arrays ``best`` and ``second``.
    """
    surface = surfaces if isinstance(surfaces, LossSurface) else merge_surfaces(surfaces)
    if len(surface.scenarios) < 2:
        raise InvalidParameters("need at least two scenarios for a dominance map")
    canon = [s for s in SCENARIOS if s in surface.scenarios]
    surface = surface.select(canon)
    order = np.argsort(surface.expected, axis=0, kind="stable")
    labels = np.array(canon, dtype=object)
    return labels[order[0]], labels[order[1]]


# ---------------------------------------------------------------------------
# sensitivity

FACTORS = ("demand_joint", "demand_node", "transmission", "storage", "charging")


@dataclass(frozen=True)
class SensitivitySpec:
    factor: str
    multipliers: tuple = (0.5, 0.9, 1.1, 1.5)
    node: int | None = None

    def __post_init__(self):
        if self.factor not in FACTORS:
            raise InvalidParameters(f"unknown sensitivity factor {self.factor!r}; expected one of {FACTORS}")
        if any(m <= 0 for m in self.multipliers):
            raise InvalidParameters("multipliers must be > 0")
        if self.factor == "demand_node" and self.node not in (0, 1):
            raise InvalidParameters("demand_node needs node 0 or 1")


def scaled_flex(flex: FlexSpec, factor: str, m: float) -> FlexSpec:
    if factor == "transmission":
        return flex.replace(transmission_mw=flex.transmission_mw * m)
    if factor == "storage":
        return flex.replace(storage_mwh=flex.storage_mwh * m)
    if factor == "charging":
        return flex.replace(charge_mw=flex.charge_mw * m, discharge_mw=flex.discharge_mw * m)
    return flex


@dataclass
class SensitivityRow:
    factor: str
    multiplier: float
    scenario: str
    opt_nn_mw: float
    opt_ns_mw: float
    expected_penalty: float
    delta_vs_base: float
    delta_opt_nn_mw: float
    delta_opt_ns_mw: float
    penalty_nn: float
    penalty_ns: float
    node: int | None = None


def sensitivity(config: SweepConfig, specs, wind, demand, threads: int = 1,
                reference=REFERENCE_PLAN_MW) -> list:
    """Optima and penalties with one factor scaled, versus the baseline.

    Demand factors are evaluated at the fixed reference plan (penalties
    only); flexibility factors re-run the grid sweep and compare optima.
    """
    specs = list(specs)
    rows = []
    years = simulate_years(config, wind, demand)
    need_sweep = any(s.factor not in ("demand_joint", "demand_node") for s in specs)
    need_plan = any(s.factor in ("demand_joint", "demand_node") for s in specs)
    plan_cfg = replace(config, grid_nn=(reference[0],) * 2 + (1.0,), grid_ns=(reference[1],) * 2 + (1.0,), stride=1)

    def run(cfg, flex=None, scale=None):
        cf, load = years
        if scale is not None:
            load = load * np.asarray(scale, dtype=float)
        nn, ns, pen = sweep_penalties(cfg, wind, demand, threads, flex=flex, years=(cf, load))
        return _summarise(nn, ns, cfg.scenarios, pen, cfg.n_realizations)

    base_opt = argmin_surface(run(config), reference) if need_sweep else None
    base_plan = run(plan_cfg) if need_plan else None

    for spec in specs:
        for m in spec.multipliers:
            if spec.factor in ("demand_joint", "demand_node"):
                scale = np.array([m, m]) if spec.factor == "demand_joint" else np.where(np.arange(2) == spec.node, m, 1.0)
                surf = run(plan_cfg, scale=scale)
                for k, scen in enumerate(surf.scenarios):
                    value = float(surf.expected[k, 0, 0])
                    base = float(base_plan.expected[k, 0, 0])
                    pn = surf.per_node[k, 0, 0]
                    rows.append(SensitivityRow(spec.factor, m, scen, float(reference[0]), float(reference[1]),
                                               value, value - base, 0.0, 0.0, float(pn[0]), float(pn[1]), spec.node))
            else:
                opt = argmin_surface(run(config, flex=scaled_flex(config.base_flex, spec.factor, m)), reference)
                for scen, o in opt.items():
                    b = base_opt[scen]
                    rows.append(SensitivityRow(spec.factor, m, scen, o.opt_nn_mw, o.opt_ns_mw, o.expected_penalty,
                                               o.expected_penalty - b.expected_penalty, o.opt_nn_mw - b.opt_nn_mw,
                                               o.opt_ns_mw - b.opt_ns_mw, float(o.per_node[0]), float(o.per_node[1]),
                                               spec.node))
    return rows


# ---------------------------------------------------------------------------
# time profiles for plotting


def penalty_profiles(plan, scenario: str, config: SweepConfig, wind, demand, flex: FlexSpec | None = None,
                     quantiles=(0.1, 0.9)):
    """Per-day mean and quantile bands of the per-node loss over realizations.

    Returns a list of dict rows (tidy long format).
    """
    flex = config.base_flex if flex is None else flex
    cf, load = simulate_years(config, wind, demand)
    plan = CapacityPlan(plan)
    prod = np.moveaxis(cf * plan.wind_mw, 1, 0)
    trace = dispatch(scenario, prod, np.moveaxis(load, 1, 0), flex)
    rows = []
    for field_name, values in (("loss", trace.loss), ("storage_level", trace.storage_level),
                               ("export_mw", trace.export_mw)):
        mean = values.mean(axis=1)
        qs = np.quantile(values, quantiles, axis=1)
        for t in range(values.shape[0]):
            for node in range(values.shape[-1]):
                rows.append({"scenario": scenario, "quantity": field_name, "day": t + 1, "node": node,
                             "mean": mean[t, node], "q_low": qs[0, t, node], "q_high": qs[-1, t, node]})
    return rows


__all__ = [
    "DAYS_PER_YEAR", "LossSurface", "Optimum", "SensitivityRow", "SensitivitySpec", "SweepConfig",
    "argmin_surface", "dominance_map", "evaluate_plan", "merge_surfaces", "penalty_profiles",
    "run_realization", "sensitivity", "simulate_year", "simulate_years", "sweep", "sweep_penalties",
]
