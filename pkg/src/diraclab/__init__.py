"""Selection-mutation dynamics with nonlocal competition in the small-mutation regime."""
from .model import (
    Box,
    ConcavityConstants,
    ConsumptionWeight,
    EnvironmentSchedule,
    Gaussian,
    GroundStateGaussian,
    GrowthModel,
    Mixture,
    ModelError,
    TraitGrid,
)
from .solver import SolverConfig, SolverError, Trajectory, run

__all__ = [
    "Box",
    "ConcavityConstants",
    "ConsumptionWeight",
    "EnvironmentSchedule",
    "Gaussian",
    "GroundStateGaussian",
    "GrowthModel",
    "Mixture",
    "ModelError",
    "SolverConfig",
    "SolverError",
    "TraitGrid",
    "Trajectory",
    "run",
]
__version__ = "0.1.0"
