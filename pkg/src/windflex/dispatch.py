"""Reactive dispatch of the four flexibility scenarios and quadratic losses.

Conventions
-----------
* Production, demand and every flow are step-average power in MW.
* Storage level is energy in MWh; ``step_hours`` converts power to energy.
  Charging ``Ch`` MW for one step stores ``eta_c * Ch * h``; discharging
  ``Dis`` MW delivers ``Dis`` to the grid and drains ``Dis * h / eta_d``.
* The line is lossless and carries at most ``transmission_mw`` per step.
* Node 0 is the northern node, node 1 the southern node.

All functions accept arrays shaped ``(T, *batch, d)`` so many realizations
and capacity plans can be dispatched at once; time is always the leading
axis.  The per-node loss is the squared final residual
``(P + Dis + Imp) - (D + Ch + Exp)``.  The residual is tracked as the
remaining mismatch while the rules are applied, which keeps every step's
loss at or below the no-flexibility loss even in floating point.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError, InvalidParameters, ShapeMismatch, WrongHorizon

SCENARIOS = ("no-flex", "trans", "stor", "full-flex")
HORIZON = 365


@dataclass(frozen=True, eq=False)
class CapacityPlan:
    wind_mw: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.wind_mw, dtype=float))
        if np.any(x < 0) or not np.all(np.isfinite(x)):
            raise InvalidParameters(f"wind capacities must be >= 0, got {x}")
        object.__setattr__(self, "wind_mw", x)

    def production(self, cf) -> np.ndarray:
        return np.asarray(cf, dtype=float) * self.wind_mw


@dataclass(frozen=True, eq=False)
class FlexSpec:
    transmission_mw: float = 900.0
    storage_mwh: np.ndarray = (15000.0, 30000.0)
    charge_mw: np.ndarray = (900.0, 900.0)
    discharge_mw: np.ndarray = (900.0, 900.0)
    eta_charge: float = 0.75
    eta_discharge: float = 0.90
    step_hours: float = 24.0

    def __post_init__(self):
        for name in ("storage_mwh", "charge_mw", "discharge_mw"):
            value = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            if np.any(value < 0) or not np.all(np.isfinite(value)):
                raise InvalidParameters(f"{name} must be finite and >= 0, got {value}")
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        if not self.transmission_mw >= 0:
            raise InvalidParameters(f"transmission_mw must be >= 0, got {self.transmission_mw}")
        for name in ("eta_charge", "eta_discharge"):
            if not 0 < getattr(self, name) <= 1:
                raise InvalidParameters(f"{name} must lie in (0, 1]")
        if not self.step_hours > 0:
            raise InvalidParameters("step_hours must be > 0")
        for name in ("transmission_mw", "eta_charge", "eta_discharge", "step_hours"):
            object.__setattr__(self, name, float(getattr(self, name)))

    def replace(self, **changes) -> "FlexSpec":
        return replace(self, **changes)

    def without_line(self) -> "FlexSpec":
        return replace(self, transmission_mw=0.0)

    def without_storage(self) -> "FlexSpec":
        zero = np.zeros_like(self.storage_mwh)
        return replace(self, storage_mwh=zero, charge_mw=zero, discharge_mw=zero)

    def to_dict(self) -> dict:
        return {
            "transmission_mw": self.transmission_mw,
            "storage_mwh": self.storage_mwh.tolist(),
            "charge_mw": self.charge_mw.tolist(),
            "discharge_mw": self.discharge_mw.tolist(),
            "eta_charge": self.eta_charge,
            "eta_discharge": self.eta_discharge,
            "step_hours": self.step_hours,
        }


@dataclass(eq=False)
class DispatchTrace:
    scenario: str
    production: np.ndarray
    demand: np.ndarray
    import_mw: np.ndarray
    export_mw: np.ndarray
    charge_mw: np.ndarray
    discharge_mw: np.ndarray
    storage_level: np.ndarray
    loss: np.ndarray

    FIELDS = ("production", "demand", "import_mw", "export_mw", "charge_mw",
              "discharge_mw", "storage_level", "loss")

    @property
    def n_steps(self) -> int:
        return self.loss.shape[0]

    @property
    def total_loss(self) -> np.ndarray:
        """L(t): per-step loss summed over nodes."""
        return self.loss.sum(axis=-1)

    def residual(self) -> np.ndarray:
        return (self.production + self.discharge_mw + self.import_mw) - (
            self.demand + self.charge_mw + self.export_mw)


def _inputs(production, demand, pair: bool):
    p = np.asarray(production, dtype=float)
    d = np.asarray(demand, dtype=float)
    if p.shape != d.shape:
        raise ShapeMismatch(f"production {p.shape} and demand {d.shape} differ")
    if p.ndim < 2:
        raise ShapeMismatch("expected arrays shaped (T, ..., nodes)")
    if pair and p.shape[-1] != 2:
        raise ShapeMismatch(f"scenarios with a line need exactly 2 nodes, got {p.shape[-1]}")
    if np.any(p < 0) or np.any(d < 0) or not (np.all(np.isfinite(p)) and np.all(np.isfinite(d))):
        raise DomainError("production and demand must be finite and >= 0")
    return p, d


def _sum_over_time(loss: np.ndarray) -> np.ndarray:
    # sequential accumulation: the result per element never depends on batch layout
    acc = np.zeros(loss.shape[1:])
    for row in loss:
        acc += row
    return acc


def _finish(scenario, p, d, imp, exp, ch, dis, level, loss, record):
    if not record:
        return _sum_over_time(loss)
    return DispatchTrace(scenario, p, d, imp, exp, ch, dis, level, loss)


def dispatch_no_flex(production, demand, record: bool = True):
    p, d = _inputs(production, demand, pair=False)
    r = p - d
    zero = np.zeros_like(p)
    return _finish("no-flex", p, d, zero, zero.copy(), zero.copy(), zero.copy(), zero.copy(), r * r, record)


def _transfer(sn, ss, cap):
    """Greedy lossless exchange between complementary mismatches."""
    f = np.minimum(np.minimum(np.maximum(sn, 0.0), np.maximum(-ss, 0.0)), cap)  # north -> south
    g = np.minimum(np.minimum(np.maximum(ss, 0.0), np.maximum(-sn, 0.0)), cap)  # south -> north
    return f, g


def dispatch_trans(production, demand, flex: FlexSpec, record: bool = True):
    p, d = _inputs(production, demand, pair=True)
    s = p - d
    f, g = _transfer(s[..., 0], s[..., 1], flex.transmission_mw)
    r = np.stack([s[..., 0] - f + g, s[..., 1] + f - g], axis=-1)
    exp = np.stack([f, g], axis=-1)
    imp = np.stack([g, f], axis=-1)
    zero = np.zeros_like(p)
    return _finish("trans", p, d, imp, exp, zero, zero.copy(), zero.copy(), r * r, record)


class _Storage:
    """Per-step storage allowances and the level update."""

    def __init__(self, flex: FlexSpec, batch_shape):
        self.bm = flex.storage_mwh
        self.bc = flex.charge_mw
        self.bd = flex.discharge_mw
        self.eta_c = flex.eta_charge
        self.eta_d = flex.eta_discharge
        self.h = flex.step_hours
        self.level = np.zeros(batch_shape)  # empty at time 0

    def allowances(self):
        charge = np.minimum((self.bm - self.level) / (self.eta_c * self.h), self.bc)
        discharge = np.minimum(self.eta_d * self.level / self.h, self.bd)
        return charge, discharge

    def update(self, ch, dis):
        new = self.level + self.eta_c * ch * self.h - dis / self.eta_d * self.h
        self.level = np.minimum(np.maximum(new, 0.0), self.bm)
        return self.level


def _allocate(p, d, record):
    if record:
        return {k: np.zeros_like(p) for k in ("imp", "exp", "ch", "dis", "level", "loss")}
    return {"loss_sum": np.zeros(p.shape[1:])}


def dispatch_stor(production, demand, flex: FlexSpec, record: bool = True):
    """Each node charges its surplus and discharges into its deficit, independently."""
    p, d = _inputs(production, demand, pair=False)
    store = _Storage(flex, p.shape[1:])
    out = _allocate(p, d, record)
    for t in range(p.shape[0]):
        s = p[t] - d[t]
        allow_c, allow_d = store.allowances()
        ch = np.minimum(np.maximum(s, 0.0), allow_c)
        dis = np.minimum(np.maximum(-s, 0.0), allow_d)
        r = s - ch + dis
        level = store.update(ch, dis)
        loss = r * r
        if record:
            out["ch"][t], out["dis"][t], out["level"][t], out["loss"][t] = ch, dis, level, loss
        else:
            out["loss_sum"] += loss
    if not record:
        return out["loss_sum"]
    zero = np.zeros_like(p)
    return DispatchTrace("stor", p, d, zero, zero.copy(), out["ch"], out["dis"], out["level"], out["loss"])


def dispatch_full_flex(production, demand, flex: FlexSpec, record: bool = True):
    """Transmission and storage combined, applied in priority order per step.

    1. surplus is exported to the other node's deficit (line cap);
    2. remaining surplus charges the local storage, remaining deficit
       discharges the local storage;
    3. surplus still left charges the other node's storage through the
       remaining line capacity (north first);
    4. deficit still left is served from the other node's storage through
       the remaining line capacity (north first).
    """
    p, d = _inputs(production, demand, pair=True)
    cap = flex.transmission_mw
    store = _Storage(flex, p.shape[1:])
    out = _allocate(p, d, record)
    for t in range(p.shape[0]):
        s = p[t] - d[t]
        sn, ss = s[..., 0], s[..., 1]
        # stage 1
        f, g = _transfer(sn, ss, cap)
        rn = sn - f + g
        rs = ss + f - g
        line = cap - f - g
        # stage 2
        allow_c, allow_d = store.allowances()
        an = np.minimum(np.maximum(rn, 0.0), allow_c[..., 0])
        as_ = np.minimum(np.maximum(rs, 0.0), allow_c[..., 1])
        bn = np.minimum(np.maximum(-rn, 0.0), allow_d[..., 0])
        bs = np.minimum(np.maximum(-rs, 0.0), allow_d[..., 1])
        rn = rn - an + bn
        rs = rs - as_ + bs
        room_n = allow_c[..., 0] - an
        room_s = allow_c[..., 1] - as_
        avail_n = allow_d[..., 0] - bn
        avail_s = allow_d[..., 1] - bs
        # stage 3
        c_ns = np.minimum(np.minimum(np.maximum(rn, 0.0), line), room_s)
        rn = rn - c_ns
        line = line - c_ns
        c_sn = np.minimum(np.minimum(np.maximum(rs, 0.0), line), room_n)
        rs = rs - c_sn
        line = line - c_sn
        # stage 4
        d_sn = np.minimum(np.minimum(np.maximum(-rn, 0.0), line), avail_s)
        rn = rn + d_sn
        line = line - d_sn
        d_ns = np.minimum(np.minimum(np.maximum(-rs, 0.0), line), avail_n)
        rs = rs + d_ns

        flow_ns = np.minimum(f + c_ns + d_ns, cap)
        flow_sn = np.minimum(g + c_sn + d_sn, cap)
        ch = np.stack([np.minimum(an + c_sn, allow_c[..., 0]), np.minimum(as_ + c_ns, allow_c[..., 1])], axis=-1)
        dis = np.stack([np.minimum(bn + d_ns, allow_d[..., 0]), np.minimum(bs + d_sn, allow_d[..., 1])], axis=-1)
        level = store.update(ch, dis)
        loss = np.stack([rn * rn, rs * rs], axis=-1)
        if record:
            out["exp"][t] = np.stack([flow_ns, flow_sn], axis=-1)
            out["imp"][t] = np.stack([flow_sn, flow_ns], axis=-1)
            out["ch"][t], out["dis"][t], out["level"][t], out["loss"][t] = ch, dis, level, loss
        else:
            out["loss_sum"] += loss
    if not record:
        return out["loss_sum"]
    return DispatchTrace("full-flex", p, d, out["imp"], out["exp"], out["ch"], out["dis"], out["level"], out["loss"])


def dispatch(scenario: str, production, demand, flex: FlexSpec | None = None, record: bool = True):
    """Run one scenario by name.  With ``record=False`` only the per-node
    loss summed over time is returned, shaped ``(*batch, d)``."""
    if scenario == "no-flex":
        return dispatch_no_flex(production, demand, record)
    if flex is None:
        flex = FlexSpec()
    if scenario == "trans":
        return dispatch_trans(production, demand, flex, record)
    if scenario == "stor":
        return dispatch_stor(production, demand, flex, record)
    if scenario == "full-flex":
        return dispatch_full_flex(production, demand, flex, record)
    raise InvalidParameters(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")


def aggregate_penalty(trace: DispatchTrace, horizon: int = HORIZON):
    """Annual penalty of one realization: per-node sums and their total."""
    if trace.n_steps != horizon:
        raise WrongHorizon(f"trace covers {trace.n_steps} steps, expected {horizon}")
    per_node = _sum_over_time(trace.loss)
    return per_node, per_node.sum(axis=-1)
