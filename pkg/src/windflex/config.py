"""Project configuration from a flat TOML file.

Every key carries its unit in the name.  Unknown keys are rejected so a
typo never silently falls back to a default.  Relative paths are resolved
against the directory of the config file.

Example::

    wind_params = "wind_params.json"
    transmission_mw = 450
    storage_nn_mwh = 15000
    n_realizations = 50
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .dispatch import SCENARIOS, FlexSpec
from .errors import ConfigError, ValidationError
from .sweep import GRID_NN_MW, GRID_NS_MW, REFERENCE_PLAN_MW, SweepConfig


def default_data_path(name: str) -> Path:
    return Path(str(resources.files("windflex") / "data" / name))


@dataclass(frozen=True)
class ProjectConfig:
    wind_params: str = ""
    demand_params: str = ""
    cf_data: str = ""
    temp_data: str = ""
    load_data: str = ""

    transmission_mw: float = 900.0
    storage_nn_mwh: float = 15000.0
    storage_ns_mwh: float = 30000.0
    charge_nn_mw: float = 900.0
    charge_ns_mw: float = 900.0
    discharge_nn_mw: float = 900.0
    discharge_ns_mw: float = 900.0
    eta_charge: float = 0.75
    eta_discharge: float = 0.90
    step_hours: float = 24.0

    reference_nn_mw: float = REFERENCE_PLAN_MW[0]
    reference_ns_mw: float = REFERENCE_PLAN_MW[1]
    coverage_share: float = 0.128

    grid_nn_min_mw: float = GRID_NN_MW[0]
    grid_nn_max_mw: float = GRID_NN_MW[1]
    grid_nn_step_mw: float = GRID_NN_MW[2]
    grid_ns_min_mw: float = GRID_NS_MW[0]
    grid_ns_max_mw: float = GRID_NS_MW[1]
    grid_ns_step_mw: float = GRID_NS_MW[2]
    grid_stride: int = 1
    n_realizations: int = 100
    scenarios: tuple = SCENARIOS
    master_seed: int = 2023
    start_weekday: int = 0
    holidays_doy: tuple = ()

    source: str = field(default="", compare=False)

    def __post_init__(self):
        if not self.wind_params:
            object.__setattr__(self, "wind_params", str(default_data_path("wind_params.json")))
        if not self.demand_params:
            object.__setattr__(self, "demand_params", str(default_data_path("demand_params.json")))
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        object.__setattr__(self, "holidays_doy", tuple(int(h) for h in self.holidays_doy))
        for name in ("wind_params", "demand_params"):
            if not Path(getattr(self, name)).is_file():
                raise ConfigError(f"{name}: file not found: {getattr(self, name)}")
        if not 0 <= self.start_weekday <= 6:
            raise ConfigError("start_weekday must be 0 (Monday) .. 6 (Sunday)")
        if any(not 1 <= h <= 365 for h in self.holidays_doy):
            raise ConfigError("holidays_doy entries must lie in 1..365")
        if self.grid_nn_min_mw > self.grid_nn_max_mw or self.grid_ns_min_mw > self.grid_ns_max_mw:
            raise ConfigError("grid minimum exceeds maximum")
        if self.grid_nn_step_mw <= 0 or self.grid_ns_step_mw <= 0:
            raise ConfigError("grid steps must be > 0")
        try:
            self.flex()
            self.sweep_config()
        except ValidationError as exc:
            raise ConfigError(f"{self.source or 'config'}: {exc}") from None

    @property
    def reference_plan(self) -> tuple:
        return (self.reference_nn_mw, self.reference_ns_mw)

    def flex(self) -> FlexSpec:
        return FlexSpec(
            transmission_mw=self.transmission_mw,
            storage_mwh=(self.storage_nn_mwh, self.storage_ns_mwh),
            charge_mw=(self.charge_nn_mw, self.charge_ns_mw),
            discharge_mw=(self.discharge_nn_mw, self.discharge_ns_mw),
            eta_charge=self.eta_charge,
            eta_discharge=self.eta_discharge,
            step_hours=self.step_hours,
        )

    def sweep_config(self, **overrides) -> SweepConfig:
        kw = dict(
            grid_nn=(self.grid_nn_min_mw, self.grid_nn_max_mw, self.grid_nn_step_mw),
            grid_ns=(self.grid_ns_min_mw, self.grid_ns_max_mw, self.grid_ns_step_mw),
            n_realizations=self.n_realizations,
            scenarios=self.scenarios,
            base_flex=self.flex(),
            coverage_share=self.coverage_share,
            master_seed=self.master_seed,
            stride=self.grid_stride,
            start_weekday=self.start_weekday,
            holidays=self.holidays_doy,
        )
        kw.update(overrides)
        return SweepConfig(**kw)


PATH_KEYS = ("wind_params", "demand_params", "cf_data", "temp_data", "load_data")


def config_keys() -> tuple:
    return tuple(f.name for f in fields(ProjectConfig) if f.name != "source")


def load_config(path=None, **overrides) -> ProjectConfig:
    """Build a config from an optional TOML file plus keyword overrides."""
    values = {}
    if path is not None:
        path = Path(path)
        try:
            with open(path, "rb") as fh:
                values = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        nested = [k for k, v in values.items() if isinstance(v, dict)]
        if nested:
            raise ConfigError(f"{path}: tables are not supported, keys must be flat: {nested}")
        unknown = sorted(set(values) - set(config_keys()))
        if unknown:
            raise ConfigError(f"{path}: unknown keys {unknown}; allowed: {', '.join(config_keys())}")
        for key in PATH_KEYS:
            if values.get(key):
                p = Path(values[key])
                values[key] = str(p if p.is_absolute() else path.parent / p)
        values["source"] = str(path)
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ProjectConfig(**values)
    except TypeError as exc:
        raise ConfigError(f"{path or 'config'}: {exc}") from None
