"""Equilibrium inventory-level distributions for (r,q) lost-sales systems
with level-dependent Poisson demand and constant lead time."""

__version__ = "0.1.0"

from .errors import ModelError, NumericalError
from .q1 import solve_q1
from .r2q2 import solve_r2q2
from .rate_model import LevelDistribution, Policy, RateProfile, SystemSpec, validate_profile
from .sim import SimConfig, simulate, simulate_transshipment
from .transship import StoreSpec, TransshipScenario, solve_fixed_point

__all__ = [
    "LevelDistribution",
    "ModelError",
    "NumericalError",
    "Policy",
    "RateProfile",
    "SimConfig",
    "StoreSpec",
    "SystemSpec",
    "TransshipScenario",
    "simulate",
    "simulate_transshipment",
    "solve_fixed_point",
    "solve_q1",
    "solve_r2q2",
    "validate_profile",
]
