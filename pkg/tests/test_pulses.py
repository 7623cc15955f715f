import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from laddermem.atomic import LadderScheme
from laddermem.pulses import (
    ControlPulse,
    EdgeModel,
    InfeasiblePulseError,
    SignalPulse,
    TimingPlan,
    control_envelope,
    control_intensity,
    effective_fractional_delay,
    signal_envelope,
    signal_intensity,
)


SOLVER_DT = 20e-12


def _edge_time(pulse, rising=True):
    t = np.linspace(pulse.center - 3 * pulse.fwhm, pulse.center, 200001)
    if not rising:
        t = pulse.center + (pulse.center - t)[::-1]
    i = (control_intensity(pulse, t) - pulse.floor) / (1 - pulse.floor)
    if not rising:
        t, i = t[::-1], i[::-1]
    return abs(np.interp(0.9, i, t) - np.interp(0.1, i, t))


def test_signal_peak_and_fwhm():
    p = SignalPulse(fwhm=2e-9, center=1e-9)
    peak = signal_intensity(p, p.center)
    assert signal_envelope(p, p.center) == pytest.approx(p.peak_amplitude)
    assert signal_intensity(p, p.center + 1e-9) == pytest.approx(0.5 * peak, rel=1e-12)
    assert signal_intensity(p, p.center - 1e-9) == pytest.approx(0.5 * peak, rel=1e-12)


def test_signal_normalisation():
    p = SignalPulse()
    t = np.linspace(-5 * p.fwhm, 5 * p.fwhm, 20001)
    assert np.trapezoid(signal_intensity(p, t), t) == pytest.approx(0.1, abs=1e-4)


@settings(max_examples=30)
@given(st.floats(min_value=-50e-9, max_value=50e-9), st.floats(min_value=0.3e-9, max_value=5e-9))
def test_signal_normalisation_translation_invariant(shift, fwhm):
    p = SignalPulse(fwhm=fwhm, center=shift)
    t = np.linspace(shift - 6 * fwhm, shift + 6 * fwhm, 8001)
    assert np.trapezoid(signal_intensity(p, t), t) == pytest.approx(p.mean_photons, rel=1e-6)


def test_control_floor_and_peak():
    p = ControlPulse(peak_power=1.4)
    far = control_intensity(p, np.array([-100e-9, 100e-9]))
    assert far == pytest.approx(1 / 800, rel=0.01)
    assert control_intensity(p, 0.0) == pytest.approx(1.0, rel=1e-6)
    s = LadderScheme()
    assert control_envelope(p, 0.0, s) == pytest.approx(640e6, rel=1e-6)
    assert control_envelope(ControlPulse(peak_power=0.35), 0.0, s) == pytest.approx(320e6, rel=1e-6)


@pytest.mark.parametrize("edge", list(EdgeModel))
@pytest.mark.parametrize("fwhm", [3e-9, 4e-9, 6e-9])
def test_control_fwhm_and_edges(edge, fwhm):
    p = ControlPulse(fwhm=fwhm, edge=edge)
    t = np.linspace(-2 * fwhm, 2 * fwhm, 400001)
    # width of the pulse above the extinction floor
    i = (control_intensity(p, t) - p.floor) / (1 - p.floor)
    above = t[i >= 0.5]
    assert above[-1] - above[0] == pytest.approx(fwhm, abs=1e-12 + 2 * (t[1] - t[0]))
    # edges of short pulses overlap slightly; the contract is the solver step
    assert _edge_time(p) == pytest.approx(p.rise_fall_10_90, abs=SOLVER_DT)
    assert _edge_time(p, rising=False) == pytest.approx(p.rise_fall_10_90, abs=SOLVER_DT)


def test_control_infeasible():
    with pytest.raises(InfeasiblePulseError):
        ControlPulse(fwhm=2e-9, rise_fall_10_90=1.2e-9)


@settings(max_examples=40)
@given(
    st.floats(min_value=2.5e-9, max_value=10e-9),
    st.floats(min_value=2.0, max_value=1e5),
    st.sampled_from(list(EdgeModel)),
)
def test_control_floor_property(fwhm, er, edge):
    p = ControlPulse(fwhm=fwhm, extinction_ratio=er, edge=edge)
    t = np.random.default_rng(0).uniform(-50e-9, 50e-9, 2000)
    i = control_intensity(p, t)
    assert np.all(i >= p.floor * (1 - 1e-9))
    assert np.all(i <= 1 + 1e-12)


def test_control_envelope_converges_with_sampling():
    p = ControlPulse()
    coarse = np.linspace(-10e-9, 10e-9, 201)
    fine = np.linspace(-10e-9, 10e-9, 2001)
    assert np.allclose(control_intensity(p, fine)[::10], control_intensity(p, coarse))


def test_afterpulse_adds_intensity():
    base = ControlPulse()
    ap = ControlPulse(afterpulse_fraction=0.1, afterpulse_delay=8e-9)
    assert control_intensity(ap, 8e-9) > control_intensity(base, 8e-9) + 0.05


def test_fractional_delay():
    assert effective_fractional_delay(108e-9, 2e-9) == pytest.approx(54)
    assert effective_fractional_delay(108e-9, 1e-9) == pytest.approx(2 * effective_fractional_delay(108e-9, 2e-9))
    assert effective_fractional_delay(108e-9, math.inf) == 0.0


def test_timing_plan():
    tp = TimingPlan(storage_control_center=-0.4e-9, storage_time=20e-9)
    assert tp.retrieval_control_center == pytest.approx(19.6e-9)
    assert tp.reference_window == pytest.approx((-3e-9, 3e-9))
    assert tp.retrieval_window[1] - tp.retrieval_window[0] == pytest.approx(6e-9)
    with pytest.raises(ValueError):
        TimingPlan(storage_time=-1e-9)
