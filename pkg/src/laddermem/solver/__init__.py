from .grid import VelocityGrid, auto_node_count
from .maxwell_bloch import (
    NumericalFailure,
    PropagationRecord,
    StorageResult,
    WindowPlacementWarning,
    coupling_constant,
    lifetime_curve,
    propagate,
    run_storage_retrieval,
    simulation_window,
    velocity_grid_for,
)

__all__ = [
    "VelocityGrid",
    "auto_node_count",
    "NumericalFailure",
    "PropagationRecord",
    "StorageResult",
    "WindowPlacementWarning",
    "coupling_constant",
    "lifetime_curve",
    "propagate",
    "run_storage_retrieval",
    "simulation_window",
    "velocity_grid_for",
]
