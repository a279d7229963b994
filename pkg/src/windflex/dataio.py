"""CSV ingestion and the on-disk formats for parameters and results.

Input series are daily CSVs with a ``date`` column (ISO ``YYYY-MM-DD``)
followed by one column per region.  February 29 is dropped so every year
has 365 days; any other missing date is an error.
"""
from __future__ import annotations

import csv
import datetime as dt
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .demand import DemandModelParams
from .dispatch import DispatchTrace
from .errors import GapDetected, InvalidParameters, ParseError, RangeViolation
from .sweep import LossSurface, SensitivityRow
from .weather import CapacityFactorSeries, WindModelParams

KINDS = ("cf", "load", "temp")
TEMP_RANGE_DEGC = (-60.0, 50.0)

TRACE_COLUMNS = ("t", "node", "production", "demand", "import", "export", "charge", "discharge",
                 "storage_level", "loss", "scenario")
SURFACE_COLUMNS = ("wind_nn_mw", "wind_ns_mw", "scenario", "expected_penalty", "penalty_nn", "penalty_ns",
                   "stderr")
DOMINANCE_COLUMNS = ("wind_nn_mw", "wind_ns_mw", "best", "second_best")
SENSITIVITY_COLUMNS = ("factor", "multiplier", "scenario", "opt_nn_mw", "opt_ns_mw", "expected_penalty",
                       "delta_vs_base")
PLOTDATA_COLUMNS = ("scenario", "quantity", "day", "node", "mean", "q_low", "q_high")


def _is_leap_day(day: dt.date) -> bool:
    return day.month == 2 and day.day == 29


def noleap_day_of_year(day: dt.date) -> int:
    """Day of year on a 365-day calendar (Mar 1 is always day 60)."""
    doy = day.timetuple().tm_yday
    if day.month > 2 and day.year % 4 == 0 and (day.year % 100 != 0 or day.year % 400 == 0):
        doy -= 1
    return doy


@dataclass(frozen=True, eq=False)
class TimeSeries:
    kind: str
    dates: tuple
    values: np.ndarray
    regions: tuple

    @property
    def day_of_year(self) -> np.ndarray:
        return np.array([noleap_day_of_year(d) for d in self.dates], dtype=int)

    @property
    def weekday(self) -> np.ndarray:
        return np.array([d.weekday() for d in self.dates], dtype=int)

    def as_capacity_factors(self) -> CapacityFactorSeries:
        return CapacityFactorSeries(self.values, self.day_of_year, self.regions)

    def __len__(self):
        return len(self.dates)


def _check_range(kind: str, value: float, row: int, column: str):
    if not math.isfinite(value):
        raise RangeViolation("non-finite value", row, column)
    if kind == "cf" and not 0.0 <= value < 1.0:
        raise RangeViolation(f"capacity factor {value} outside [0, 1)", row, column)
    if kind == "temp" and not TEMP_RANGE_DEGC[0] <= value <= TEMP_RANGE_DEGC[1]:
        raise RangeViolation(f"temperature {value} degC outside {list(TEMP_RANGE_DEGC)}", row, column)
    if kind == "load" and value < 0:
        raise RangeViolation(f"negative load {value}", row, column)


def ingest_timeseries(path, kind: str) -> TimeSeries:
    """Read and validate a daily series.

    Rows are numbered as in the file (header is row 1).  Errors carry the
    row and column of the offending cell.
    """
    if kind not in KINDS:
        raise InvalidParameters(f"unknown series kind {kind!r}; expected one of {KINDS}")
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path}: empty file", 1) from None
        if len(header) < 2 or header[0].lower() != "date":
            raise ParseError(f"{path}: header must be 'date,<region>,...'", 1, header[0] if header else None)
        regions = tuple(header[1:])
        dates, rows = [], []
        prev = None
        for lineno, record in enumerate(reader, start=2):
            if not record or all(not c.strip() for c in record):
                continue
            if len(record) != len(header):
                raise ParseError(f"{path}: expected {len(header)} fields, got {len(record)}", lineno)
            try:
                day = dt.date.fromisoformat(record[0].strip())
            except ValueError:
                raise ParseError(f"{path}: bad date {record[0]!r}", lineno, "date") from None
            if prev is not None:
                if day <= prev:
                    raise ParseError(f"{path}: dates must increase strictly ({day} after {prev})", lineno, "date")
                expected = prev + dt.timedelta(days=1)
                if _is_leap_day(expected) and day != expected:
                    expected += dt.timedelta(days=1)
                if day != expected:
                    raise GapDetected(f"{path}: missing dates between {prev} and {day} (row {lineno})")
            prev = day
            if _is_leap_day(day):
                continue
            vals = []
            for col, cell in zip(regions, record[1:]):
                try:
                    value = float(cell)
                except ValueError:
                    raise ParseError(f"{path}: not a number {cell!r}", lineno, col) from None
                _check_range(kind, value, lineno, col)
                vals.append(value)
            dates.append(day)
            rows.append(vals)
    if not rows:
        raise ParseError(f"{path}: no data rows", 2)
    return TimeSeries(kind, tuple(dates), np.array(rows, dtype=float), regions)


# ---------------------------------------------------------------------------
# parameter files


def _write_json(path, payload: dict):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def save_wind_params(params: WindModelParams, path):
    _write_json(path, params.to_dict())


def load_wind_params(path) -> WindModelParams:
    try:
        return WindModelParams.from_dict(json.loads(Path(path).read_text()))
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: malformed wind parameter file: {exc}") from None


def save_demand_params(params: DemandModelParams, path):
    _write_json(path, params.to_dict())


def load_demand_params(path) -> DemandModelParams:
    try:
        return DemandModelParams.from_dict(json.loads(Path(path).read_text()))
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: malformed demand parameter file: {exc}") from None


# ---------------------------------------------------------------------------
# result tables

def _num(x) -> str:
    return repr(float(x))


def _write_rows(path, columns, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)


def write_trace(trace: DispatchTrace, path, regions=("NO-N", "NO-S")):
    """Single-realization trace in long format (one row per step and node)."""
    if trace.loss.ndim != 2:
        raise InvalidParameters("write_trace expects an unbatched (T, d) trace")
    fields = (trace.production, trace.demand, trace.import_mw, trace.export_mw, trace.charge_mw,
              trace.discharge_mw, trace.storage_level, trace.loss)
    rows = []
    for t in range(trace.n_steps):
        for i in range(trace.loss.shape[1]):
            rows.append([t + 1, regions[i], *(_num(f[t, i]) for f in fields), trace.scenario])
    _write_rows(path, TRACE_COLUMNS, rows)


def write_surface(surface: LossSurface, path):
    rows = []
    for k, scen in enumerate(surface.scenarios):
        for i, nn in enumerate(surface.nn_mw):
            for j, ns in enumerate(surface.ns_mw):
                pn = surface.per_node[k, i, j]
                rows.append([_num(nn), _num(ns), scen, _num(surface.expected[k, i, j]), _num(pn[0]),
                             _num(pn[1]), _num(surface.stderr[k, i, j])])
    _write_rows(path, SURFACE_COLUMNS, rows)


def read_surface(path) -> LossSurface:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(SURFACE_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ParseError(f"{path}: missing columns {sorted(missing)}", 1)
        records = []
        for lineno, rec in enumerate(reader, start=2):
            try:
                records.append((float(rec["wind_nn_mw"]), float(rec["wind_ns_mw"]), rec["scenario"],
                                float(rec["expected_penalty"]), float(rec["penalty_nn"]),
                                float(rec["penalty_ns"]), float(rec["stderr"])))
            except (TypeError, ValueError):
                raise ParseError(f"{path}: malformed surface row", lineno) from None
    if not records:
        raise ParseError(f"{path}: surface has no rows", 2)
    nn = np.unique([r[0] for r in records])
    ns = np.unique([r[1] for r in records])
    scenarios = tuple(dict.fromkeys(r[2] for r in records))
    expected = np.full((len(scenarios), nn.size, ns.size), np.nan)
    per_node = np.full(expected.shape + (2,), np.nan)
    stderr = np.full(expected.shape, np.nan)
    for r in records:
        k, i, j = scenarios.index(r[2]), np.searchsorted(nn, r[0]), np.searchsorted(ns, r[1])
        expected[k, i, j] = r[3]
        per_node[k, i, j] = r[4:6]
        stderr[k, i, j] = r[6]
    if np.isnan(expected).any():
        raise ParseError(f"{path}: surface does not cover a full grid for every scenario")
    return LossSurface(nn, ns, scenarios, expected, per_node, stderr)


def write_dominance(surface: LossSurface, best, second, path):
    rows = [[_num(nn), _num(ns), best[i, j], second[i, j]]
            for i, nn in enumerate(surface.nn_mw) for j, ns in enumerate(surface.ns_mw)]
    _write_rows(path, DOMINANCE_COLUMNS, rows)


def write_sensitivity(rows, path):
    """Sensitivity table; extra columns follow the documented ones."""
    extra = ("delta_opt_nn_mw", "delta_opt_ns_mw", "penalty_nn", "penalty_ns", "node")
    out = []
    for r in rows:
        d = asdict(r) if isinstance(r, SensitivityRow) else dict(r)
        out.append([d["factor"], _num(d["multiplier"]), d["scenario"], _num(d["opt_nn_mw"]), _num(d["opt_ns_mw"]),
                    _num(d["expected_penalty"]), _num(d["delta_vs_base"]),
                    *("" if d[c] is None else (_num(d[c]) if c != "node" else d[c]) for c in extra)])
    _write_rows(path, SENSITIVITY_COLUMNS + extra, out)


def write_plotdata(rows, path, regions=("NO-N", "NO-S")):
    out = [[r["scenario"], r["quantity"], r["day"], regions[r["node"]], _num(r["mean"]), _num(r["q_low"]),
            _num(r["q_high"])] for r in rows]
    _write_rows(path, PLOTDATA_COLUMNS, out)


def read_rows(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
