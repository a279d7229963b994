"""Wind capacity planning for a two-node system with transmission and storage.

Stochastic weather and demand models feed a greedy dispatch engine; a Monte
Carlo sweep over capacity plans yields expected penalty surfaces.
"""
from .demand import DemandModelParams, LoadRegressionParams, TemperatureModelParams
from .dispatch import SCENARIOS, CapacityPlan, DispatchTrace, FlexSpec, aggregate_penalty, dispatch
from .sweep import LossSurface, SweepConfig, argmin_surface, dominance_map, sensitivity, sweep
from .weather import CapacityFactorSeries, OUParams, SeasonalityParams, WindModelParams

__version__ = "0.1.0"

__all__ = [
    "SCENARIOS", "CapacityFactorSeries", "CapacityPlan", "DemandModelParams", "DispatchTrace", "FlexSpec",
    "LoadRegressionParams", "LossSurface", "OUParams", "SeasonalityParams", "SweepConfig",
    "TemperatureModelParams", "WindModelParams", "aggregate_penalty", "argmin_surface", "dispatch",
    "dominance_map", "sensitivity", "sweep",
]
