"""Signal and control envelopes.

The signal is a Gaussian amplitude normalised to ``mean_photons``. Control
pulses are flat-topped intensity profiles with error-function (or linear) edges
sitting on a floor set by the extinction ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy import optimize, special

__all__ = [
    "EdgeModel",
    "SignalPulse",
    "ControlPulse",
    "TimingPlan",
    "InfeasiblePulseError",
    "signal_envelope",
    "signal_intensity",
    "control_intensity",
    "control_envelope",
    "effective_fractional_delay",
    "ERF_10_90",
]

# 10-90 % duration of 0.5 (1 + erf(t / s)) is ERF_10_90 * s
ERF_10_90 = 2.0 * special.erfinv(0.8)


class InfeasiblePulseError(ValueError):
    pass


class EdgeModel(str, Enum):
    ERF = "erf"
    LINEAR = "linear"


@dataclass(frozen=True)
class SignalPulse:
    fwhm: float = 2e-9
    center: float = 0.0
    mean_photons: float = 0.1
    shape: str = "gaussian"

    def __post_init__(self):
        if self.shape != "gaussian":
            raise ValueError(f"unsupported signal shape {self.shape!r}")
        if not self.fwhm > 0:
            raise ValueError(f"fwhm must be > 0, got {self.fwhm!r}")
        if not self.mean_photons >= 0:
            raise ValueError(f"mean_photons must be >= 0, got {self.mean_photons!r}")

    @property
    def amplitude_sigma(self):
        # intensity exp(-(t/s)^2) has FWHM 2 s sqrt(ln 2)
        return self.fwhm / (2.0 * math.sqrt(math.log(2.0)))

    @property
    def peak_amplitude(self):
        return math.sqrt(self.mean_photons / (self.amplitude_sigma * math.sqrt(math.pi)))


@dataclass(frozen=True)
class ControlPulse:
    fwhm: float = 4e-9
    rise_fall_10_90: float = 1.2e-9
    extinction_ratio: float = 800.0
    peak_power: float = 1.4
    center: float = 0.0
    edge: EdgeModel = EdgeModel.ERF
    # optional Pockels-cell after-pulse: intensity fraction and delay
    afterpulse_fraction: float = 0.0
    afterpulse_delay: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "edge", EdgeModel(self.edge))
        if not self.fwhm > 0:
            raise ValueError(f"fwhm must be > 0, got {self.fwhm!r}")
        if not self.rise_fall_10_90 > 0:
            raise ValueError(f"rise_fall_10_90 must be > 0, got {self.rise_fall_10_90!r}")
        if not self.extinction_ratio > 1:
            raise ValueError(f"extinction_ratio must be > 1, got {self.extinction_ratio!r}")
        if not self.peak_power >= 0:
            raise ValueError(f"peak_power must be >= 0, got {self.peak_power!r}")
        if not 0 <= self.afterpulse_fraction <= 1:
            raise ValueError("afterpulse_fraction must lie in [0, 1]")
        if self.fwhm < 2 * self.rise_fall_10_90:
            raise InfeasiblePulseError(
                f"control fwhm {self.fwhm:.3g} s is shorter than twice the "
                f"10-90 edge time {self.rise_fall_10_90:.3g} s"
            )

    @property
    def floor(self):
        return 1.0 / self.extinction_ratio


@dataclass(frozen=True)
class TimingPlan:
    """Pulse timing. Times are absolute, in seconds, on the signal's retarded clock."""

    signal_center: float = 0.0
    storage_control_center: float = 1.5e-9
    storage_time: float = 20e-9
    integration_window: float = 6e-9
    # retrieval window start relative to the retrieval control centre
    retrieval_window_offset: float = -3e-9

    def __post_init__(self):
        if not self.storage_time > 0:
            raise ValueError(f"storage_time must be > 0 (retrieval after storage), got {self.storage_time!r}")
        if not self.integration_window > 0:
            raise ValueError(f"integration_window must be > 0, got {self.integration_window!r}")

    @property
    def retrieval_control_center(self):
        return self.storage_control_center + self.storage_time

    @property
    def reference_window(self):
        start = self.signal_center - 0.5 * self.integration_window
        return start, start + self.integration_window

    @property
    def retrieval_window(self):
        start = self.retrieval_control_center + self.retrieval_window_offset
        return start, start + self.integration_window


def signal_envelope(pulse: SignalPulse, t):
    """Field amplitude; ``|amplitude|^2`` integrates to ``pulse.mean_photons`` over t (s)."""
    t = np.asarray(t, dtype=float)
    x = (t - pulse.center) / pulse.amplitude_sigma
    return pulse.peak_amplitude * np.exp(-0.5 * x * x)


def signal_intensity(pulse: SignalPulse, t):
    return signal_envelope(pulse, t) ** 2


def _erf_shape(t, half_width, s):
    return 0.5 * (special.erf((t + half_width) / s) - special.erf((t - half_width) / s))


def _linear_shape(t, half_width, ramp):
    # trapezoid: zero at |t| >= half_width + ramp/2, one at |t| <= half_width - ramp/2
    return np.clip((half_width + 0.5 * ramp - np.abs(t)) / ramp, 0.0, 1.0)


@lru_cache(maxsize=256)
def _plateau_half_width(fwhm, rise, edge):
    """Plateau parameter that gives the requested intensity FWHM."""
    if edge == EdgeModel.LINEAR.value:
        return 0.5 * fwhm
    s = rise / ERF_10_90

    def mismatch(a):
        peak = _erf_shape(0.0, a, s)
        return _erf_shape(0.5 * fwhm, a, s) / peak - 0.5

    hi = 0.5 * fwhm + 5 * s
    return optimize.brentq(mismatch, 1e-6 * fwhm, hi, xtol=1e-15 * fwhm, rtol=1e-14)


def _unit_shape(pulse: ControlPulse, t):
    """Edge profile in [0, 1], peak 1, centred on ``pulse.center``."""
    a = _plateau_half_width(pulse.fwhm, pulse.rise_fall_10_90, pulse.edge.value)
    x = np.asarray(t, dtype=float) - pulse.center
    if pulse.edge is EdgeModel.LINEAR:
        return _linear_shape(x, a, pulse.rise_fall_10_90 / 0.8)
    s = pulse.rise_fall_10_90 / ERF_10_90
    return _erf_shape(x, a, s) / _erf_shape(0.0, a, s)


def control_intensity(pulse: ControlPulse, t):
    """Intensity relative to the peak; never below 1/extinction_ratio."""
    shape = _unit_shape(pulse, t)
    if pulse.afterpulse_fraction > 0:
        delayed = _unit_shape(pulse, np.asarray(t, dtype=float) - pulse.afterpulse_delay)
        shape = np.maximum(shape, pulse.afterpulse_fraction * delayed)
    return pulse.floor + (1.0 - pulse.floor) * shape


def control_envelope(pulse: ControlPulse, t, scheme=None):
    """Control Rabi frequency (Hz) versus time.

    The peak Rabi frequency follows the sqrt(power) calibration of ``scheme``
    (640 MHz at 1.4 W when no scheme is given).
    """
    if scheme is None:
        peak = 640e6 * math.sqrt(pulse.peak_power / 1.4)
    else:
        peak = scheme.control_rabi(pulse.peak_power)
    return peak * np.sqrt(control_intensity(pulse, t))


def effective_fractional_delay(lifetime, signal_fwhm):
    if not lifetime > 0 or not signal_fwhm > 0:
        raise ValueError("lifetime and signal_fwhm must be > 0")
    return lifetime / signal_fwhm
