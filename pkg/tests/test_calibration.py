import math

import numpy as np
import pytest

from laddermem.analytics import decay_model
from laddermem.calibration import calibrate_storage_decay, fitted_lifetime
from laddermem.config import load_scenario


def synthetic_curve(tau_sigma):
    """Stand-in for the solver: Gaussian channel plus exponential decay at 2 x 2 pi gamma_S."""

    def curve(scenario, times):
        rate = 2 * 2 * math.pi * scenario.scheme.gamma_storage
        tau_gamma = 1 / rate if rate > 0 else math.inf
        return [(t, float(decay_model(t, 0.5, tau_sigma, tau_gamma))) for t in times]

    return curve


def test_calibration_hits_target():
    s = load_scenario("flame2_no_dressing").replace("scheme.gamma_storage", 0.334359e6)
    res = calibrate_storage_decay(s, 90e-9, curve_fn=synthetic_curve(130e-9))
    assert res.converged
    assert res.tau_s == pytest.approx(90e-9, abs=0.5e-9)
    assert len(res.history) <= 2
    assert res.gamma_storage > 0.334359e6


def test_calibration_unreachable_target():
    s = load_scenario("flame2_no_dressing").replace("scheme.gamma_storage", 0.0)
    with pytest.raises(RuntimeError):
        calibrate_storage_decay(s, 500e-9, curve_fn=synthetic_curve(130e-9))


def test_fitted_lifetime_on_exponential():
    t = np.linspace(20e-9, 200e-9, 10)
    assert fitted_lifetime(list(zip(t, 0.5 * np.exp(-t / 90e-9)))) == pytest.approx(90e-9, rel=1e-6)
