"""Numerical bounds on the capacity of underspread WSSUS MIMO fading channels."""

from .channel_model import BrickScattering, GridParams, SampledScattering, kappa, log_penalty_integral
from .lower_bound import lb_approx, lower_bound_l1
from .scenario import ConfigError, ScenarioConfig, build_scenario, preset, resolve
from .spatial import SpatialSpectrum
from .upper_bound import LinkBudget, upper_bound_u1

__all__ = [
    "BrickScattering",
    "ConfigError",
    "GridParams",
    "LinkBudget",
    "SampledScattering",
    "ScenarioConfig",
    "SpatialSpectrum",
    "build_scenario",
    "kappa",
    "lb_approx",
    "log_penalty_integral",
    "lower_bound_l1",
    "preset",
    "resolve",
    "upper_bound_u1",
]
