"""Acceptance criteria, each at its stated tolerance.

Run with ``pytest tests/test_acceptance.py``; a verdict line per criterion is
printed in the terminal summary. The sweep criteria take tens of minutes.
"""

import contextlib
import math
import warnings

import numpy as np
import pytest
from scipy.optimize import bisect

from laddermem.analytics import decay_model, end_to_end_efficiency, fit_decay, lifetime_1e, noise_per_pulse
from laddermem.atomic import (
    LadderScheme,
    StorageMode,
    ThermalEnsemble,
    TransmissionBudget,
    doppler_efold_time,
    signed_wavevector_mismatch,
    two_photon_wavevector_mismatch,
)
from laddermem.config import load_scenario, preset_path
from laddermem.harness import TIMING_AXIS, figure_spec, run
from laddermem.optimizer import Axis, SweepSpec, optimize, scan
from laddermem.solver import VelocityGrid, propagate, run_storage_retrieval

NS = 1e-9


@contextlib.contextmanager
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield


# 1 ---------------------------------------------------------------------------


def test_1_doppler_limit(acceptance):
    scheme, ens = LadderScheme(), ThermalEnsemble(temperature=273.15 + 65)
    tau = doppler_efold_time(two_photon_wavevector_mismatch(scheme), ens.sigma_v)
    ok = abs(tau / 130e-9 - 1) <= 0.10
    acceptance(1, ok, f"Doppler e-fold time {tau / NS:.1f} ns vs ~130 ns (10 %)")
    assert ok


# 2 ---------------------------------------------------------------------------


def test_2_beer_lambert(acceptance, on_res):
    s = on_res.replace("storage_control.peak_power", 0.0).replace("retrieval_control.peak_power", 0.0)
    s = s.replace("ensemble.unpumped_absorber", False).replace("signal.fwhm", 40e-9)
    rec = propagate(s, t_start=-100 * NS, t_end=100 * NS)
    log_t = math.log(rec.output_energy / rec.input_energy)
    ok = abs(log_t / -19.0 - 1) <= 0.05
    acceptance(2, ok, f"ln T = {log_t:.3f} vs -19 (5 % in the log domain)")
    assert ok


# 3 ---------------------------------------------------------------------------


def _draws(n, seed):
    rng = np.random.default_rng(seed)
    return np.column_stack(
        [rng.uniform(0.2, 0.8, n), rng.uniform(80, 200, n) * NS, rng.uniform(200, 1000, n) * NS]
    )


T_SAMPLES = np.linspace(0, 200 * NS, 20)


def test_3a_fit_exact_round_trip(acceptance):
    worst = 0.0
    for truth in _draws(1000, 17):
        fit = fit_decay(list(zip(T_SAMPLES, decay_model(T_SAMPLES, *truth))))
        got = np.array([fit.eta0, fit.tau_sigma, fit.tau_gamma])
        worst = max(worst, float(np.max(np.abs(got / truth - 1))))
    ok = worst <= 1e-6
    acceptance("3a", ok, f"exact data: worst relative parameter error {worst:.2e} (limit 1e-6)")
    assert ok


def test_3b_fit_noisy_round_trip(acceptance):
    rng = np.random.default_rng(18)
    hits, hits_ts, hits_tau = 0, 0, 0
    draws = _draws(1000, 19)
    for truth in draws:
        y = decay_model(T_SAMPLES, *truth) * (1 + 0.01 * rng.standard_normal(len(T_SAMPLES)))
        fit = fit_decay(list(zip(T_SAMPLES, y)), sigma=0.01 * y)
        got = np.array([fit.eta0, fit.tau_sigma, fit.tau_gamma])
        hits += bool(fit.success and np.all(np.abs(got / truth - 1) < 0.05))
        hits_ts += bool(fit.success and abs(fit.tau_s / lifetime_1e(*truth[1:]) - 1) < 0.05)
        hits_tau += bool(fit.success and np.all(np.abs(got[:2] / truth[:2] - 1) < 0.05))
    frac = hits / len(draws)
    ok = frac >= 0.95
    acceptance(
        "3b",
        ok,
        f"1 % noise: {100 * frac:.1f} % of draws recover (eta0, tau_sigma, tau_gamma) within 5 % "
        f"(need 95 %); eta0 and tau_sigma alone {100 * hits_tau / len(draws):.1f} %, "
        f"tau_s alone {100 * hits_ts / len(draws):.1f} %",
    )
    assert ok


# 4 ---------------------------------------------------------------------------


def test_4_lifetime_vs_bisection(acceptance):
    rng = np.random.default_rng(4)
    worst = 0.0
    for ts, tg in rng.uniform(5, 2000, size=(1000, 2)):
        f = lambda t: t * t / (2 * ts * ts) + t / tg - 1.0  # noqa: E731
        hi = min(math.sqrt(2) * ts, tg)
        root = bisect(f, 0.0, hi, xtol=1e-15 * hi, rtol=4 * np.finfo(float).eps, maxiter=500)
        worst = max(worst, abs(lifetime_1e(ts, tg) / root - 1))
    ok = worst <= 1e-12
    acceptance(4, ok, f"closed form vs bisection, worst relative difference {worst:.1e} (limit 1e-12)")
    assert ok


# 5 ---------------------------------------------------------------------------


def test_5_budget(acceptance):
    b = TransmissionBudget()
    on = end_to_end_efficiency(0.526, b, StorageMode.ON_RES)
    off = end_to_end_efficiency(0.398, b, StorageMode.OFF_RES)
    ok = abs(on - 0.347) <= 0.005 and abs(off - 0.223) <= 0.005
    acceptance(5, ok, f"end-to-end {100 * on:.2f} % (34.7) and {100 * off:.2f} % (22.3), 0.5 point")
    assert ok


# 6 ---------------------------------------------------------------------------


def test_6_noise(acceptance):
    n0 = noise_per_pulse(0.0, StorageMode.ON_RES)
    n1 = noise_per_pulse(1.0, StorageMode.ON_RES)
    ok = math.isclose(n0, 0.92e-5, rel_tol=1e-12) and abs(n1 - 2.6e-5) <= 0.2e-5
    acceptance(6, ok, f"noise {n0:.3g} at 0 W, {n1:.3g} at 1 W on resonance")
    assert ok


# 7 ---------------------------------------------------------------------------

# increase band fixed before simulating: within a factor 4 of the measured 18 ns
DRESSING_GAIN_BAND = (18 * NS / 4, 18 * NS * 4)


def test_7_calibrated_lifetimes(acceptance, dressing_curves):
    on, off = dressing_curves
    tau_on, tau_off = fit_decay(on).tau_s, fit_decay(off).tau_s
    gain = tau_on - tau_off
    ok_off = abs(tau_off - 90 * NS) <= 5 * NS
    ok_dir = gain > 0
    ok_mag = DRESSING_GAIN_BAND[0] <= gain <= DRESSING_GAIN_BAND[1]
    acceptance("7a", ok_off, f"dressing off, calibrated: tau_s = {tau_off / NS:.1f} ns (90 +- 5)")
    acceptance("7b", ok_dir, f"dressing on: tau_s = {tau_on / NS:.1f} ns, change {gain / NS:+.1f} ns (must be > 0)")
    acceptance(
        "7c",
        ok_mag,
        f"dressing gain {gain / NS:.1f} ns vs measured 18 ns; band "
        f"[{DRESSING_GAIN_BAND[0] / NS:.1f}, {DRESSING_GAIN_BAND[1] / NS:.0f}] ns",
    )
    assert ok_off and ok_dir and ok_mag


# 8 ---------------------------------------------------------------------------


def test_8a_power_scan(acceptance, on_res, off_res):
    with quiet():
        table = scan(figure_spec("fig3a", on_res))
        off_spec = figure_spec("fig3a", off_res)
        off_best = optimize(
            SweepSpec(Axis(off_spec.axes[0].path).apply(off_res, 1.4), (TIMING_AXIS,)),
            seeds=6, max_evals=25, xtol=0.01,
        )
    etas = table.values()
    monotone = all(b >= a for a, b in zip(etas, etas[1:]))
    beats = etas[-1] > off_best.best_value
    acceptance(
        "8a",
        monotone and beats,
        "on-res eta vs power " + ", ".join(f"{e:.3f}" for e in etas)
        + f"; off-res at 1.4 W {off_best.best_value:.3f}",
    )
    assert monotone and beats


def test_8b_fwhm_scan(acceptance, on_res):
    with quiet():
        table = scan(figure_spec("fig4", on_res))
    fwhms = [r[0] for r in table.rows()]
    etas = table.values()
    peak = fwhms[int(np.argmax(etas))]
    ok = peak >= 1.5 * NS and etas[0] < etas[1]
    acceptance(
        "8b",
        ok,
        "eta vs signal FWHM " + ", ".join(f"{f / NS:.1f} ns {e:.3f}" for f, e in zip(fwhms, etas)),
    )
    assert ok


def test_8c_detuning_sign(acceptance, on_res):
    assert on_res.ensemble.unpumped_absorber
    spec = SweepSpec(on_res, (Axis("scheme.delta_two_photon", bounds=(-150e6, 100e6)), TIMING_AXIS))
    with quiet():
        res = optimize(spec, seeds=6, max_evals=45, xtol=0.01)
    best = res.best_params["scheme.delta_two_photon"]
    ok = best < 0
    acceptance("8c", ok, f"optimal two-photon detuning {best / 1e6:+.1f} MHz with the absorber (must be < 0)")
    assert ok


# 9 ---------------------------------------------------------------------------


def test_9_solver_properties(acceptance, on_res, on_res_result):
    residual = abs(on_res_result.bookkeeping["relative_residual"])
    changes = {}
    with quiet():
        for label, path, value in (
            ("dt/2", "solver.dt", 10e-12),
            ("2 n_z", "solver.n_z", 64),
            ("2 n_v", "solver.coherence_decay_periods", 24.0),
        ):
            changes[label] = abs(run_storage_retrieval(on_res.replace(path, value)).eta_internal - on_res_result.eta_internal)

    s = on_res.replace("storage_control.peak_power", 0.0).replace("retrieval_control.peak_power", 0.0)
    s = s.replace("dressing_on", False).replace("tof_decay", False).replace("scheme.delta_two_photon", 0.0)
    s = s.replace("ensemble.optical_depth", 1e-3)
    v = 150.0
    rec = propagate(s, t_start=0.0, t_end=100 * NS, grid=VelocityGrid.two_class(v), initial_coherence=1.0)
    dk = signed_wavevector_mismatch(s.scheme)
    closed = np.exp(-2 * math.pi * s.scheme.gamma_storage * rec.t) * np.abs(np.cos(dk * v * rec.t))
    cosine_err = float(np.max(np.abs(np.abs(rec.coherence) - closed)))

    ok = residual < 1e-3 and max(changes.values()) < 1e-3 and cosine_err < 1e-6
    acceptance(
        9,
        ok,
        f"residual {residual:.1e}; grid doubling "
        + ", ".join(f"{k} {v:.1e}" for k, v in changes.items())
        + f"; two-node cosine error {cosine_err:.1e}",
    )
    assert ok


# 10 --------------------------------------------------------------------------


def test_10_determinism(acceptance, tmp_path):
    text = preset_path("flame2_on_res").read_text() + (
        "sweep:\n  axes:\n    - path: timing.storage_control_center\n      unit: ns\n      values: [-0.8, -0.4, 0.0]\n"
    )
    p = tmp_path / "sweep.yaml"
    p.write_text(text)
    with quiet():
        records = [run("sweep", p, tmp_path / f"jobs{j}", jobs=j) for j in (1, 2, 3)]
    same = all(r.canonical() == records[0].canonical() for r in records)
    acceptance(10, same, f"sweep run records at 1, 2, 3 workers identical: {same} ({records[0].results_hash[:12]})")
    assert same
