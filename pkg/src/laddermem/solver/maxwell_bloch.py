"""Store-wait-retrieve simulation of the ladder memory.

Per velocity class v the weak-signal equations are

    dP/dt = (-g_P + i D_v) P + i E + i (W/2) S
    dS/dt = (-g_S + i d_v) S + i (W/2) P - r_tof(t) S
    dE/dz = i A sum_v w_v P_v   (+ the passive absorber term)

on the retarded time of the signal, with D_v = Delta - k_s v and
d_v = delta + dk v - (dressing light shift of the storage level). Internally
time is in ns and rates in rad/ns; the public records use SI units.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import constants

from .. import _accel
from ..analytics import HistogramRecord, HistogramRole, efficiency_from_histograms, window_counts
from ..atomic import (
    ANGULAR,
    Geometry,
    dressing_light_shift,
    signed_wavevector_mismatch,
    tof_time,
)
from ..pulses import control_intensity, signal_envelope
from ..scenario import Scenario, SolverConfigError
from . import kernels
from .grid import VelocityGrid, auto_node_count

__all__ = [
    "NumericalFailure",
    "WindowPlacementWarning",
    "PropagationRecord",
    "StorageResult",
    "simulation_window",
    "velocity_grid_for",
    "propagate",
    "run_storage_retrieval",
    "lifetime_curve",
    "coupling_constant",
]

NS = 1e-9


class NumericalFailure(FloatingPointError):
    def __init__(self, message, time=None):
        self.time = time
        super().__init__(message)


class WindowPlacementWarning(UserWarning):
    pass


@dataclass
class PropagationRecord:
    """Time traces of one propagation. Intensities are photon fluxes (photons/s)."""

    t: np.ndarray
    input_intensity: np.ndarray
    output_intensity: np.ndarray
    e_out: np.ndarray | None
    stored: np.ndarray
    excitation: np.ndarray
    scattered: np.ndarray
    coherence: np.ndarray
    grid: VelocityGrid
    snapshots: np.ndarray | None = None
    snapshot_times: np.ndarray | None = None
    initial_excitation: float = 0.0

    @property
    def dt(self):
        return self.t[1] - self.t[0]

    @property
    def input_energy(self):
        return float(np.trapezoid(self.input_intensity, self.t))

    @property
    def output_energy(self):
        return float(np.trapezoid(self.output_intensity, self.t))

    @property
    def residual(self):
        """Energy not accounted for by output, final excitation and scattering."""
        return (
            self.input_energy
            + self.initial_excitation
            - self.output_energy
            - self.excitation[-1]
            - self.scattered[-1]
        )


@dataclass
class StorageResult:
    eta_internal: float
    t: np.ndarray
    retrieved_waveform: np.ndarray
    reference_waveform: np.ndarray
    transmitted_leakage: float
    stored_energy_vs_time: np.ndarray
    bookkeeping: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    n_v: int = 0

    def summary(self):
        return {
            "eta_internal": self.eta_internal,
            "transmitted_leakage": self.transmitted_leakage,
            "bookkeeping": dict(self.bookkeeping),
            "warnings": list(self.warnings),
            "n_v": self.n_v,
        }


def simulation_window(scenario: Scenario):
    """Default (start, end) of the simulated retarded-time window in seconds."""
    timing = scenario.timing
    sig = scenario.signal_pulse()
    c1, c2 = scenario.control_pulses()
    start = min(
        sig.center - 3.0 * sig.fwhm,
        c1.center - 0.5 * c1.fwhm - 2.0 * c1.rise_fall_10_90,
        timing.reference_window[0],
    )
    end = max(
        timing.retrieval_window[1],
        c2.center + 0.5 * c2.fwhm + 2.0 * c2.rise_fall_10_90,
        timing.reference_window[1],
        sig.center + 3.0 * sig.fwhm,
    )
    return start - scenario.solver.margin, end + scenario.solver.margin


def velocity_grid_for(scenario: Scenario, duration=None):
    cfg = scenario.solver
    sigma = scenario.ensemble.sigma_v
    if cfg.velocity_grid == "gauss_hermite":
        return VelocityGrid.gauss_hermite(sigma, cfg.n_v or 16)
    n = cfg.n_v
    if n is None:
        if duration is None:
            start, end = simulation_window(scenario)
            duration = end - start
        g_p = ANGULAR * scenario.scheme.gamma_intermediate
        floor = cfg.coherence_decay_periods / g_p if g_p > 0 else 0.0
        n = auto_node_count(
            sigma,
            scenario.scheme.lambda_signal,
            duration,
            cfg.velocity_span,
            cfg.revival_margin,
            min_revival=floor,
        )
    return VelocityGrid.uniform(sigma, n, cfg.velocity_span)


def coupling_constant(scenario: Scenario, grid: VelocityGrid):
    """Field coupling (rad/ns) that gives resonant intensity transmission exp(-OD).

    The normalisation uses the same discrete velocity sum as the propagation,
    so a weak continuous probe without control is attenuated by exactly
    exp(-OD) in the continuum limit of the z grid.
    """
    g_p = ANGULAR * scenario.scheme.gamma_intermediate * NS
    shift = scenario.scheme.k_signal * NS * grid.velocities
    response = np.sum(grid.weights * g_p / (g_p**2 + shift**2))
    if response == 0:
        raise SolverConfigError("vanishing resonant response; gamma_intermediate must be > 0")
    ens = scenario.ensemble
    return ens.optical_depth / (2 * response), ens.unpumped_od / (2 * response)


def _rates(scenario: Scenario, grid: VelocityGrid, frame_offset):
    scheme = scenario.scheme
    v = grid.velocities
    g_p = ANGULAR * scheme.gamma_intermediate * NS
    g_s = ANGULAR * scheme.gamma_storage * NS
    k_s = scheme.k_signal * NS
    delta = ANGULAR * scheme.delta_signal * NS + frame_offset
    lam_p = -g_p + 1j * (delta - k_s * v)
    two_photon = ANGULAR * scheme.delta_two_photon * NS + signed_wavevector_mismatch(scheme) * NS * v
    if scenario.dressing_on and scheme.omega_dressing > 0:
        shift = np.array(
            [
                dressing_light_shift(
                    scheme.omega_dressing, scheme.delta_dressing, scheme.k_dressing, vi, scheme.pole_guard
                )
                for vi in v
            ]
        )
        # a raised storage level lowers the two-photon detuning
        two_photon = two_photon - ANGULAR * NS * shift
    lam_s = -g_s + 1j * (two_photon + frame_offset)
    lam_q = -g_p + 1j * (delta - ANGULAR * scenario.ensemble.unpumped_detuning * NS - k_s * v)
    return lam_p, lam_s, lam_q, g_p, g_s


def _control_array(scenario: Scenario, t_half, zeta, scale):
    """Control Rabi frequency (rad/ns) on the (half-step time, z) grid."""
    scheme = scenario.scheme
    L_over_c = scenario.ensemble.cell_length / constants.c
    if scheme.geometry is Geometry.COUNTER:
        delay = (1.0 - 2.0 * zeta) * L_over_c
    else:
        delay = np.zeros_like(zeta)
    tt = t_half[:, None] - delay[None, :]
    power = np.zeros_like(tt)
    for pulse in scenario.control_pulses():
        if pulse.peak_power > 0:
            np.maximum(power, pulse.peak_power * control_intensity(pulse, tt), out=power)
    rabi_hz = scheme.omega_control_peak * np.sqrt(power / scheme.control_calibration_power)
    return ANGULAR * NS * scale * rabi_hz


def _check_step(scenario, dt_ns, A, A_u, omega):
    stiff = 0.5 * float(omega.max(initial=0.0)) + A + A_u
    if stiff * dt_ns > 1.0:
        raise SolverConfigError(
            f"time step {dt_ns * 1e3:.3g} ps is too coarse for the coupling rates "
            f"(rate x dt = {stiff * dt_ns:.3g} > 1); reduce solver.dt"
        )
    fwhm = scenario.signal.fwhm / NS
    if dt_ns > fwhm / 20:
        raise SolverConfigError(
            f"time step {dt_ns * 1e3:.3g} ps does not resolve the {fwhm:.3g} ns signal"
        )


def _shells(scenario: Scenario):
    """(control amplitude scale, weight) per radial shell, equal signal-power shells."""
    n = scenario.solver.n_shells
    if n == 1:
        return [(1.0, 1.0)]
    ws = scenario.ensemble.signal_waist
    wc = scenario.ensemble.control_waist
    out = []
    for i in range(n):
        q = (i + 0.5) / n
        r2 = -0.5 * ws**2 * math.log(1.0 - q)
        out.append((math.exp(-r2 / wc**2), 1.0 / n))
    return out


def propagate(
    scenario: Scenario,
    *,
    t_start=None,
    t_end=None,
    grid=None,
    initial_coherence=None,
    frame_offset=0.0,
    snap_every=0,
    backend=None,
):
    """Integrate the Maxwell-Bloch system for ``scenario``.

    ``frame_offset`` (rad/s) moves every detuning and the input carrier into a
    frame rotating at a different reference frequency; physical intensities
    do not depend on it. ``initial_coherence`` seeds S (scalar or (n_z, n_v)).
    """
    cfg = scenario.solver
    default_start, default_end = simulation_window(scenario)
    t_start = default_start if t_start is None else t_start
    t_end = default_end if t_end is None else t_end
    if t_end <= t_start:
        raise SolverConfigError("t_end must exceed t_start")
    if grid is None:
        grid = velocity_grid_for(scenario, t_end - t_start)

    dt_ns = cfg.dt / NS
    n_t = int(math.ceil((t_end - t_start) / cfg.dt - 1e-9))
    t_half_ns = t_start / NS + 0.5 * dt_ns * np.arange(2 * n_t + 1)
    t_full = (t_start / NS + dt_ns * np.arange(n_t + 1)) * NS
    zeta = np.linspace(0.0, 1.0, cfg.n_z)
    dz = zeta[1] - zeta[0]
    qz = kernels.z_weights(cfg.n_z, dz)

    offset_ns = frame_offset * NS
    lam_p, lam_s, lam_q, g_p, g_s = _rates(scenario, grid, offset_ns)
    A, A_u = coupling_constant(scenario, grid)

    env = signal_envelope(scenario.signal_pulse(), t_half_ns * NS) * math.sqrt(NS)
    e_in = env.astype(np.complex128) * np.exp(1j * offset_ns * t_half_ns)

    if scenario.tof_decay:
        tau = tof_time(scenario.ensemble.signal_waist, scenario.ensemble.sigma_v) / NS
        t_ref = scenario.timing.storage_control_center / NS
        tof = np.maximum(t_half_ns - t_ref, 0.0) / tau**2 if math.isfinite(tau) else np.zeros_like(t_half_ns)
    else:
        tof = np.zeros_like(t_half_ns)

    n_v = len(grid)
    w = grid.weights
    shells = _shells(scenario)
    out_I = np.zeros(n_t + 1)
    stored = np.zeros(n_t + 1)
    excitation = np.zeros(n_t + 1)
    decay = np.zeros(n_t + 1)
    coherence = np.zeros(n_t + 1, dtype=np.complex128)
    e_out = None
    snaps = None
    initial_excitation = 0.0

    for scale, weight in shells:
        S0 = np.zeros((cfg.n_z, n_v), dtype=np.complex128)
        if initial_coherence is not None:
            S0[...] = initial_coherence
            initial_excitation += weight * A * float((np.abs(S0) ** 2) @ w @ qz)
        if A == 0 and A_u == 0:
            # no medium: the field passes unchanged and the atoms decouple
            eo = e_in[::2].copy()
            st = np.zeros(n_t + 1)
            ex = np.zeros(n_t + 1)
            dc = np.zeros(n_t + 1)
            co = np.zeros(n_t + 1, dtype=np.complex128)
            sn = np.repeat(eo[::snap_every, None], cfg.n_z, axis=1) if snap_every else None
        else:
            omega = _control_array(scenario, t_half_ns * NS, zeta, scale)
            _check_step(scenario, dt_ns, A, A_u, omega)
            P0 = np.zeros_like(S0)
            Q0 = np.zeros_like(S0)
            eo, st, ex, dc, co, sn = kernels.integrate(
                e_in, omega, tof, lam_p, lam_s, lam_q, w, A, A_u, dz, qz, dt_ns, g_p, g_s,
                P0, S0, Q0, int(snap_every), backend=backend,
            )
        bad = ~np.isfinite(eo)
        if bad.any():
            i = int(np.argmax(bad))
            raise NumericalFailure(
                f"non-finite output field at t = {t_full[i]:.6g} s (step {i}); "
                "reduce solver.dt or check the scenario rates",
                time=t_full[i],
            )
        out_I += weight * np.abs(eo) ** 2 / NS
        stored += weight * st
        excitation += weight * ex
        decay += weight * dc
        coherence += weight * co
        if len(shells) == 1:
            e_out = eo / math.sqrt(NS)
            if sn is not None and len(sn):
                snaps = sn / math.sqrt(NS)

    scattered = np.concatenate([[0.0], np.cumsum(0.5 * (decay[1:] + decay[:-1]) * dt_ns)])
    in_I = np.abs(e_in[::2]) ** 2 / NS
    snap_times = t_full[:: snap_every] if snap_every and snaps is not None else None
    return PropagationRecord(
        t=t_full,
        input_intensity=in_I,
        output_intensity=out_I,
        e_out=e_out,
        stored=stored,
        excitation=excitation,
        scattered=scattered,
        coherence=coherence,
        grid=grid,
        snapshots=snaps,
        snapshot_times=snap_times,
        initial_excitation=initial_excitation,
    )


def _without_medium(scenario: Scenario):
    ens = dataclasses.replace(scenario.ensemble, optical_depth=0.0, unpumped_absorber=False)
    return dataclasses.replace(scenario, ensemble=ens)


def run_storage_retrieval(scenario: Scenario, *, grid=None, backend=None):
    """Simulate storage and retrieval and return the windowed internal efficiency.

    The reference is the same scenario without the medium, integrated over a
    window centred on the input pulse; the retrieved counts are integrated over
    the retrieval window of the timing plan.
    """
    timing = scenario.timing
    start, end = simulation_window(scenario)
    if grid is None:
        grid = velocity_grid_for(scenario, end - start)
    rec = propagate(scenario, t_start=start, t_end=end, grid=grid, backend=backend)
    ref = propagate(_without_medium(scenario), t_start=start, t_end=end, grid=grid, backend=backend)

    ref_hist = HistogramRecord.from_waveform(ref.t, ref.output_intensity, HistogramRole.REFERENCE)
    ret_hist = HistogramRecord.from_waveform(rec.t, rec.output_intensity, HistogramRole.RETRIEVED)
    ref_start = timing.reference_window[0]
    ret_start, ret_stop = timing.retrieval_window
    eta = efficiency_from_histograms(
        ref_hist, ret_hist, ref_start, timing.integration_window, retrieved_start=ret_start
    )

    notes = []
    c1, c2 = scenario.control_pulses()
    storage_end = c1.center + 0.5 * c1.fwhm + c1.rise_fall_10_90
    if ret_start < storage_end:
        notes.append(
            f"retrieval window starts at {ret_start:.4g} s, before the storage control "
            f"pulse has ended ({storage_end:.4g} s)"
        )
    if ret_start < timing.reference_window[1]:
        notes.append("retrieval window overlaps the reference (input) window")
    for note in notes:
        warnings.warn(note, WindowPlacementWarning, stacklevel=2)

    input_energy = rec.input_energy
    leak = window_counts(ret_hist, *timing.reference_window)
    retrieved = window_counts(ret_hist, ret_start, ret_stop)
    before = window_counts(ret_hist, ret_hist.edges[0], ret_start)
    after = window_counts(ret_hist, ret_stop, ret_hist.edges[-1])
    bookkeeping = {
        "input": input_energy,
        "transmitted": before,
        "retrieved": retrieved,
        "late_output": after,
        "scattered": float(rec.scattered[-1]),
        "stored_final": float(rec.excitation[-1]),
        "residual": float(rec.residual),
        "relative_residual": float(rec.residual / input_energy) if input_energy else 0.0,
    }
    return StorageResult(
        eta_internal=float(eta),
        t=rec.t,
        retrieved_waveform=rec.output_intensity,
        reference_waveform=ref.output_intensity,
        transmitted_leakage=leak / input_energy if input_energy else 0.0,
        stored_energy_vs_time=rec.stored,
        bookkeeping=bookkeeping,
        warnings=notes,
        n_v=len(grid),
    )


def lifetime_curve(scenario: Scenario, storage_times, *, backend=None, grid=None):
    """Internal efficiency for each storage time, on one shared velocity grid."""
    times = [float(t) for t in storage_times]
    if not times or any(t <= 0 for t in times):
        raise ValueError("storage times must be positive")
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("storage times must be strictly ascending")
    if grid is None:
        longest = scenario.with_storage_time(times[-1])
        start, end = simulation_window(longest)
        grid = velocity_grid_for(longest, end - start)
    out = []
    for t in times:
        res = run_storage_retrieval(scenario.with_storage_time(t), grid=grid, backend=backend)
        out.append((t, res.eta_internal))
    return out
