"""Simulation and analysis toolkit for a Doppler-compensated ladder-type
quantum memory in warm rubidium vapour."""

from .atomic import Geometry, LadderScheme, StorageMode, ThermalEnsemble, TransmissionBudget
from .pulses import ControlPulse, SignalPulse, TimingPlan
from .scenario import Scenario, SolverConfig

__version__ = "0.1.0"

__all__ = [
    "Geometry",
    "LadderScheme",
    "StorageMode",
    "ThermalEnsemble",
    "TransmissionBudget",
    "ControlPulse",
    "SignalPulse",
    "TimingPlan",
    "Scenario",
    "SolverConfig",
    "__version__",
]
