"""Level scheme, thermal ensemble and the closed-form quantities derived from them.

Frequencies on the dataclasses are ordinary frequencies in Hz (a Rabi frequency
of ``640e6`` means 640 MHz); conversion to angular units happens inside the
solver only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from scipy import constants

__all__ = [
    "ANGULAR",
    "Geometry",
    "StorageMode",
    "LadderScheme",
    "ThermalEnsemble",
    "TransmissionBudget",
    "DomainError",
    "SingularVelocityError",
    "UndefinedCompensationError",
    "RB87_MASS",
    "thermal_velocity_sigma",
    "two_photon_wavevector_mismatch",
    "signed_wavevector_mismatch",
    "doppler_efold_time",
    "tof_time",
    "combined_gaussian_time",
    "dressing_light_shift",
    "dressing_shift_slope",
    "compensation_fraction",
    "resonant_transmission",
]

ANGULAR = 2.0 * math.pi
RB87_MASS = 86.909180527 * constants.atomic_mass


class DomainError(ValueError):
    """An argument lies outside the domain of a physical formula."""


class SingularVelocityError(DomainError):
    def __init__(self, velocity, detuning):
        self.velocity = velocity
        self.detuning = detuning
        super().__init__(
            f"dressing shift is singular for velocity {velocity:.6g} m/s "
            f"(effective dressing detuning {detuning:.6g} Hz inside the pole guard)"
        )


class UndefinedCompensationError(DomainError):
    pass


class StorageMode(str, Enum):
    ON_RES = "on_res"
    OFF_RES = "off_res"


class Geometry(str, Enum):
    COUNTER = "counter_propagating"
    CO = "co_propagating"


@dataclass(frozen=True)
class LadderScheme:
    """Signal, control and dressing transitions of the ladder system.

    The control Rabi frequency is quoted at ``control_calibration_power``; a
    control pulse of different peak power scales it as sqrt(power).
    """

    lambda_signal: float = 780e-9
    lambda_control: float = 776e-9
    lambda_dressing: float = 1274e-9
    delta_signal: float = 0.0
    delta_two_photon: float = -50e6
    omega_control_peak: float = 640e6
    control_calibration_power: float = 1.4
    omega_dressing: float = 30e6
    delta_dressing: float = -570e6
    gamma_intermediate: float = 6.0666e6 / 2
    gamma_storage: float = 1.0 / (2 * math.pi * 2 * 238e-9)
    geometry: Geometry = Geometry.COUNTER
    pole_guard: float = 1e6

    def __post_init__(self):
        object.__setattr__(self, "geometry", Geometry(self.geometry))
        for name in ("lambda_signal", "lambda_control", "lambda_dressing"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)!r}")
        for name in ("omega_control_peak", "omega_dressing"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)!r}")
        for name in ("gamma_intermediate", "gamma_storage", "pole_guard"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)!r}")
        if not self.control_calibration_power > 0:
            raise ValueError("control_calibration_power must be > 0")

    @property
    def k_signal(self):
        return ANGULAR / self.lambda_signal

    @property
    def k_control(self):
        return ANGULAR / self.lambda_control

    @property
    def k_dressing(self):
        return ANGULAR / self.lambda_dressing

    def control_rabi(self, power):
        """Peak control Rabi frequency (Hz) for a given peak power (W)."""
        if power < 0:
            raise ValueError(f"control power must be >= 0, got {power!r}")
        return self.omega_control_peak * math.sqrt(power / self.control_calibration_power)


@dataclass(frozen=True)
class ThermalEnsemble:
    temperature: float = 338.15
    mass: float = RB87_MASS
    optical_depth: float = 19.0
    pumping_efficiency: float = 0.94
    signal_waist: float = 110e-6
    control_waist: float = 180e-6
    dressing_waist: float = 210e-6
    cell_length: float = 0.025
    # centre of the unpumped-atom absorption relative to the signal line (Hz)
    unpumped_detuning: float = -266.65e6
    # absorber line strength relative to the storage (cycling) transition
    unpumped_line_strength: float = 1.0 / 3.0
    unpumped_absorber: bool = True

    def __post_init__(self):
        if not self.temperature > 0:
            raise ValueError(f"temperature must be > 0, got {self.temperature!r}")
        if not self.mass > 0:
            raise ValueError(f"mass must be > 0, got {self.mass!r}")
        if not self.optical_depth >= 0:
            raise ValueError(f"optical_depth must be >= 0, got {self.optical_depth!r}")
        if not 0 <= self.pumping_efficiency <= 1:
            raise ValueError(
                f"pumping_efficiency must lie in [0, 1], got {self.pumping_efficiency!r}"
            )
        if not 0 <= self.unpumped_line_strength <= 1:
            raise ValueError(
                f"unpumped_line_strength must lie in [0, 1], got {self.unpumped_line_strength!r}"
            )
        for name in ("signal_waist", "control_waist", "dressing_waist", "cell_length"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)!r}")

    @property
    def sigma_v(self):
        return thermal_velocity_sigma(self.temperature, self.mass)

    @property
    def unpumped_od(self):
        """Peak OD of the passive absorber formed by atoms left outside the storage state."""
        if not self.unpumped_absorber or self.pumping_efficiency >= 1:
            return 0.0
        if self.pumping_efficiency == 0:
            raise ValueError("pumping_efficiency = 0 leaves no storage atoms")
        p = self.pumping_efficiency
        return self.optical_depth * self.unpumped_line_strength * (1 - p) / p


@dataclass(frozen=True)
class TransmissionBudget:
    """Setup transmission from the memory cell to the detector.

    ``measured_total`` is the directly measured overall transmission. When it is
    set, it is used instead of the product of the itemised factors, which are
    individually rounded.
    """

    cell: float = 0.88
    filters: float = 0.94
    fiber_coupling: float = 0.88
    other_optics: float = 0.89
    rb85_penalty: float = 0.85
    measured_total: float | None = 0.66

    def __post_init__(self):
        for name in ("cell", "filters", "fiber_coupling", "other_optics", "rb85_penalty"):
            value = getattr(self, name)
            if not 0 < value <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {value!r}")
        if self.measured_total is not None and not 0 < self.measured_total <= 1:
            raise ValueError(f"measured_total must lie in (0, 1], got {self.measured_total!r}")

    @property
    def itemised(self):
        return self.cell * self.filters * self.fiber_coupling * self.other_optics

    @property
    def setup(self):
        return self.itemised if self.measured_total is None else self.measured_total


def thermal_velocity_sigma(temperature, mass=RB87_MASS):
    """1-D Maxwellian velocity spread sqrt(kB T / m) in m/s."""
    if not mass > 0:
        raise DomainError(f"mass must be > 0, got {mass!r}")
    if temperature < 0:
        raise DomainError(f"temperature must be >= 0, got {temperature!r}")
    return math.sqrt(constants.k * temperature / mass)


def signed_wavevector_mismatch(scheme: LadderScheme):
    """Coefficient of v in the two-photon Doppler shift (rad/m).

    Signal travels along +z. In the counter-propagating geometry the control
    travels along -z, so the two Doppler shifts partly cancel.
    """
    if scheme.geometry is Geometry.COUNTER:
        return scheme.k_control - scheme.k_signal
    return -(scheme.k_signal + scheme.k_control)


def two_photon_wavevector_mismatch(scheme: LadderScheme):
    return abs(signed_wavevector_mismatch(scheme))


def doppler_efold_time(dk, sigma_v):
    """Time at which exp(-(dk sigma_v t)^2) reaches 1/e; ``inf`` without residual Doppler."""
    if dk < 0 or sigma_v < 0:
        raise DomainError(f"dk and sigma_v must be >= 0, got {dk!r}, {sigma_v!r}")
    rate = dk * sigma_v
    if rate == 0:
        return math.inf
    return 1.0 / rate


def tof_time(waist, sigma_v):
    """Transit (time-of-flight) Gaussian decay time waist / sigma_v."""
    if waist <= 0 or sigma_v < 0:
        raise DomainError("waist must be > 0 and sigma_v >= 0")
    return math.inf if sigma_v == 0 else waist / sigma_v


def combined_gaussian_time(*times):
    """Quadrature combination 1/sqrt(sum 1/t_i^2) of Gaussian 1/e times."""
    rate2 = sum(0.0 if math.isinf(t) else 1.0 / t**2 for t in times)
    return math.inf if rate2 == 0 else 1.0 / math.sqrt(rate2)


def dressing_light_shift(omega_d, delta_d, k_d, v, pole_guard=1e6):
    """Light shift (Hz) of the storage level for atoms of velocity ``v``.

    The dressing beam co-propagates with the signal, so a moving atom sees the
    dressing detuning ``delta_d - k_d v / 2pi``.
    """
    detuning = delta_d - k_d * v / ANGULAR
    if omega_d == 0:
        return 0.0
    if abs(detuning) <= pole_guard:
        raise SingularVelocityError(v, detuning)
    return omega_d**2 / (4.0 * detuning)


def dressing_shift_slope(omega_d, delta_d, k_d):
    """d(light shift)/dv at v = 0, in Hz per m/s."""
    if delta_d == 0:
        raise SingularVelocityError(0.0, 0.0)
    return omega_d**2 * k_d / (4.0 * ANGULAR * delta_d**2)


def compensation_fraction(scheme: LadderScheme, sigma_v=None):
    """First-order Doppler cancellation achieved by the dressing light shift.

    The storage-level shift enters the two-photon detuning with a minus sign,
    so a positive fraction means the dressing counteracts the residual Doppler
    shift; 1 is exact first-order cancellation. ``sigma_v`` is accepted for
    interface symmetry; the first-order slope ratio does not depend on it.
    """
    dk = signed_wavevector_mismatch(scheme)
    if dk == 0:
        raise UndefinedCompensationError("no residual Doppler shift to compensate (dk = 0)")
    if scheme.omega_dressing == 0:
        return 0.0
    slope = dressing_shift_slope(scheme.omega_dressing, scheme.delta_dressing, scheme.k_dressing)
    return slope / (dk / ANGULAR)


def resonant_transmission(od):
    if od < 0:
        raise DomainError(f"optical depth must be >= 0, got {od!r}")
    return math.exp(-od)
