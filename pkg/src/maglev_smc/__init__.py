"""Sliding-mode control of a magnetic levitation system.

Continuous PI sliding-mode control, state-feedback discrete-time SMC and
multirate-output-feedback discrete-time SMC on a nonlinear ball-and-coil
model, with a simulation harness and performance metrics.
"""

from ._accel import NUMBA_ENABLED
from .plant import DisturbanceSpec, PlantParams, PlantState, SimTrace, SimulationAborted, integrate

__version__ = "0.1.0"

__all__ = [
    "NUMBA_ENABLED", "DisturbanceSpec", "PlantParams", "PlantState", "SimTrace",
    "SimulationAborted", "integrate",
]
