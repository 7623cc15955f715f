"""The complete description of one simulated experiment."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .analytics import NoiseBudget
from .atomic import LadderScheme, StorageMode, ThermalEnsemble, TransmissionBudget
from .pulses import ControlPulse, SignalPulse, TimingPlan

__all__ = ["SolverConfig", "Scenario", "SolverConfigError", "get_path", "set_path"]


class SolverConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    n_z: int = 32
    dt: float = 20e-12
    # None picks the node count from the simulated window (see solver.grid)
    n_v: int | None = None
    velocity_grid: str = "uniform"
    velocity_span: float = 4.0
    revival_margin: float = 1.25
    # minimum optical revival time of the velocity grid, in 1/e lifetimes of P
    coherence_decay_periods: float = 12.0
    scheme_order: int = 4
    convergence_tol: float = 1e-3
    n_shells: int = 1
    margin: float = 2e-9

    def __post_init__(self):
        if self.n_z < 2:
            raise SolverConfigError(f"n_z must be >= 2, got {self.n_z}")
        if not self.dt > 0:
            raise SolverConfigError(f"dt must be > 0, got {self.dt}")
        if self.n_v is not None and self.n_v < 1:
            raise SolverConfigError(f"n_v must be >= 1, got {self.n_v}")
        if self.velocity_grid not in ("uniform", "gauss_hermite"):
            raise SolverConfigError(f"unknown velocity_grid {self.velocity_grid!r}")
        if not self.velocity_span > 0 or not self.revival_margin > 0:
            raise SolverConfigError("velocity_span and revival_margin must be > 0")
        if self.coherence_decay_periods < 0:
            raise SolverConfigError("coherence_decay_periods must be >= 0")
        if self.scheme_order != 4:
            raise SolverConfigError("only the 4th-order integrator is implemented")
        if not self.convergence_tol > 0:
            raise SolverConfigError("convergence_tol must be > 0")
        if self.n_shells < 1:
            raise SolverConfigError("n_shells must be >= 1")
        if self.margin < 0:
            raise SolverConfigError("margin must be >= 0")


@dataclass(frozen=True)
class Scenario:
    name: str = "custom"
    mode: StorageMode = StorageMode.ON_RES
    scheme: LadderScheme = field(default_factory=LadderScheme)
    ensemble: ThermalEnsemble = field(default_factory=ThermalEnsemble)
    signal: SignalPulse = field(default_factory=SignalPulse)
    storage_control: ControlPulse = field(default_factory=ControlPulse)
    retrieval_control: ControlPulse = field(default_factory=ControlPulse)
    timing: TimingPlan = field(default_factory=TimingPlan)
    dressing_on: bool = True
    tof_decay: bool = True
    solver: SolverConfig = field(default_factory=SolverConfig)
    budget: TransmissionBudget = field(default_factory=TransmissionBudget)
    noise: NoiseBudget = field(default_factory=NoiseBudget)

    def __post_init__(self):
        object.__setattr__(self, "mode", StorageMode(self.mode))

    def signal_pulse(self):
        return dataclasses.replace(self.signal, center=self.timing.signal_center)

    def control_pulses(self):
        """Storage and retrieval pulses placed according to the timing plan."""
        return (
            dataclasses.replace(self.storage_control, center=self.timing.storage_control_center),
            dataclasses.replace(self.retrieval_control, center=self.timing.retrieval_control_center),
        )

    def replace(self, path, value):
        return set_path(self, path, value)

    def with_storage_time(self, storage_time):
        return set_path(self, "timing.storage_time", storage_time)


def get_path(obj, path):
    for part in path.split("."):
        if not dataclasses.is_dataclass(obj) or part not in {f.name for f in dataclasses.fields(obj)}:
            raise KeyError(f"{path!r} does not resolve against the scenario")
        obj = getattr(obj, part)
    return obj


def set_path(obj, path, value):
    """Return a copy of a frozen dataclass tree with ``path`` set to ``value``."""
    head, _, rest = path.partition(".")
    if not dataclasses.is_dataclass(obj) or head not in {f.name for f in dataclasses.fields(obj)}:
        raise KeyError(f"{path!r} does not resolve against {type(obj).__name__}")
    if rest:
        value = set_path(getattr(obj, head), rest, value)
    return dataclasses.replace(obj, **{head: value})
