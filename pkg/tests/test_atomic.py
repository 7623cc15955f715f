import dataclasses
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from laddermem.atomic import (
    RB87_MASS,
    DomainError,
    Geometry,
    LadderScheme,
    SingularVelocityError,
    ThermalEnsemble,
    TransmissionBudget,
    UndefinedCompensationError,
    combined_gaussian_time,
    compensation_fraction,
    doppler_efold_time,
    dressing_light_shift,
    resonant_transmission,
    thermal_velocity_sigma,
    tof_time,
    two_photon_wavevector_mismatch,
)

# frozen values from a direct evaluation with CODATA constants
SIGMA_V_338K = 179.86181048986106
DK_COUNTER = 41522.504012554054
DK_CO = 16152254.060883285
EFOLD = 1.3389905240625185e-07
COMPENSATION = 0.08225450845157886

positive = st.floats(min_value=1e-3, max_value=1e3, allow_nan=False)


def test_sigma_v_zero_temperature():
    assert thermal_velocity_sigma(0.0, RB87_MASS) == 0.0


def test_sigma_v_warm_cell():
    assert thermal_velocity_sigma(338.15, RB87_MASS) == pytest.approx(SIGMA_V_338K, rel=1e-12)
    assert thermal_velocity_sigma(338.15, RB87_MASS) == pytest.approx(180, abs=1)


def test_sigma_v_bad_mass():
    with pytest.raises(DomainError):
        thermal_velocity_sigma(300.0, 0.0)


@given(st.floats(min_value=1.0, max_value=1e4))
def test_sigma_v_sqrt_scaling(temp):
    assert thermal_velocity_sigma(4 * temp) == pytest.approx(2 * thermal_velocity_sigma(temp), rel=1e-12)


def test_mismatch_equal_wavelengths():
    s = LadderScheme(lambda_signal=780e-9, lambda_control=780e-9)
    assert two_photon_wavevector_mismatch(s) == 0.0


def test_mismatch_values():
    s = LadderScheme()
    assert two_photon_wavevector_mismatch(s) == pytest.approx(DK_COUNTER, rel=1e-12)
    assert two_photon_wavevector_mismatch(s) == pytest.approx(4.15e4, rel=2e-3)
    co = dataclasses.replace(s, geometry=Geometry.CO)
    assert two_photon_wavevector_mismatch(co) == pytest.approx(DK_CO, rel=1e-12)
    assert two_photon_wavevector_mismatch(co) == pytest.approx(1.62e7, rel=5e-3)


@given(st.floats(min_value=300e-9, max_value=2000e-9), st.floats(min_value=300e-9, max_value=2000e-9))
def test_counter_smaller_than_co(ls, lc):
    s = LadderScheme(lambda_signal=ls, lambda_control=lc)
    co = dataclasses.replace(s, geometry=Geometry.CO)
    assert two_photon_wavevector_mismatch(s) < two_photon_wavevector_mismatch(co)


def test_efold_sentinel_and_value():
    assert doppler_efold_time(0.0, 180.0) == math.inf
    assert doppler_efold_time(DK_COUNTER, SIGMA_V_338K) == pytest.approx(EFOLD, rel=1e-12)
    assert doppler_efold_time(4.15e4, 180.0) == pytest.approx(134e-9, rel=5e-3)
    assert doppler_efold_time(4.15e4, 360.0) == pytest.approx(0.5 * doppler_efold_time(4.15e4, 180.0))
    with pytest.raises(DomainError):
        doppler_efold_time(-1.0, 1.0)


@given(positive, positive, st.floats(min_value=1.01, max_value=10))
def test_efold_strictly_decreasing(dk, sv, f):
    assert doppler_efold_time(dk * f, sv) < doppler_efold_time(dk, sv)
    assert doppler_efold_time(dk, sv * f) < doppler_efold_time(dk, sv)


def test_light_shift_examples():
    kd = 2 * math.pi / 1274e-9
    assert dressing_light_shift(0.0, -570e6, kd, 100.0) == 0.0
    assert dressing_light_shift(30e6, -570e6, kd, 0.0) == pytest.approx(-0.395e6, rel=2e-3)
    v_pole = -570e6 * 2 * math.pi / kd
    with pytest.raises(SingularVelocityError) as info:
        dressing_light_shift(30e6, -570e6, kd, v_pole)
    assert info.value.velocity == pytest.approx(v_pole)


@given(
    st.floats(min_value=1e6, max_value=1e8),
    st.floats(min_value=1e7, max_value=1e9),
    st.floats(min_value=2e6, max_value=1e8),
    st.sampled_from([-1.0, 1.0]),
)
def test_light_shift_odd_about_pole_and_signed(omega, delta_abs, offset, sign):
    kd = 2 * math.pi / 1274e-9
    delta = sign * delta_abs
    v_pole = delta * 2 * math.pi / kd
    dv = offset * 2 * math.pi / kd
    above = dressing_light_shift(omega, delta, kd, v_pole + dv)
    below = dressing_light_shift(omega, delta, kd, v_pole - dv)
    assert above == pytest.approx(-below, rel=1e-9)
    assert math.copysign(1.0, dressing_light_shift(omega, delta, kd, 0.0)) == sign


def test_compensation_fraction():
    s = LadderScheme()
    assert compensation_fraction(dataclasses.replace(s, omega_dressing=0.0)) == 0.0
    assert compensation_fraction(s) == pytest.approx(COMPENSATION, rel=1e-12)
    # choose the dressing Rabi frequency so both slopes match
    kd = s.k_dressing
    target = math.sqrt(DK_COUNTER / (2 * math.pi) * 4 * 2 * math.pi * s.delta_dressing**2 / kd)
    assert compensation_fraction(dataclasses.replace(s, omega_dressing=target)) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(UndefinedCompensationError):
        compensation_fraction(LadderScheme(lambda_signal=780e-9, lambda_control=780e-9))


@given(st.floats(min_value=0.1, max_value=10))
def test_compensation_homogeneity(c):
    s = LadderScheme()
    scaled = dataclasses.replace(s, omega_dressing=c * s.omega_dressing, delta_dressing=c * s.delta_dressing)
    assert compensation_fraction(scaled) == pytest.approx(compensation_fraction(s), rel=1e-12)


def test_resonant_transmission():
    assert resonant_transmission(0.0) == 1.0
    assert resonant_transmission(1.0) == pytest.approx(0.3679, abs=1e-4)
    assert resonant_transmission(19.0) == pytest.approx(5.6e-9, rel=0.01)


@given(st.floats(min_value=0, max_value=50), st.floats(min_value=0, max_value=50))
def test_transmission_multiplicative(a, b):
    assert resonant_transmission(a + b) == pytest.approx(resonant_transmission(a) * resonant_transmission(b), rel=1e-12)


def test_control_rabi_scaling():
    s = LadderScheme()
    assert s.control_rabi(1.4) == pytest.approx(640e6)
    assert s.control_rabi(0.35) == pytest.approx(320e6)


def test_invariants_rejected():
    with pytest.raises(ValueError):
        LadderScheme(lambda_signal=-1.0)
    with pytest.raises(ValueError):
        ThermalEnsemble(optical_depth=-1.0)
    with pytest.raises(ValueError):
        ThermalEnsemble(pumping_efficiency=1.2)
    with pytest.raises(ValueError):
        TransmissionBudget(cell=0.0)


def test_budget_product_close_to_measured():
    b = TransmissionBudget()
    assert b.itemised == pytest.approx(0.66, abs=0.02)
    assert dataclasses.replace(b, measured_total=None).setup == b.itemised


def test_unpumped_od():
    e = ThermalEnsemble(optical_depth=19.0, pumping_efficiency=0.94, unpumped_line_strength=1.0)
    assert e.unpumped_od == pytest.approx(19.0 * 0.06 / 0.94)
    assert dataclasses.replace(e, unpumped_absorber=False).unpumped_od == 0.0


def test_tof_and_quadrature():
    assert tof_time(110e-6, SIGMA_V_338K) == pytest.approx(611.58e-9, rel=1e-4)
    assert combined_gaussian_time(math.inf, 3.0) == 3.0
    assert combined_gaussian_time(3.0, 4.0) == pytest.approx(12 / 5)


@settings(max_examples=50)
@given(st.floats(min_value=1.0, max_value=1e3), st.floats(min_value=1.0, max_value=1e3))
def test_quadrature_symmetric(a, b):
    assert combined_gaussian_time(a, b) == pytest.approx(combined_gaussian_time(b, a))
    assert combined_gaussian_time(a, b) < min(a, b)
