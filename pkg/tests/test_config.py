import pytest

from laddermem.config import (
    ConfigError,
    dump_scenario,
    lint_preset,
    load_scenario,
    load_scenario_file,
    loads_scenario_file,
    preset_names,
    preset_path,
    save_scenario,
    scenario_hash,
)

PRESETS = ("flame1_off_res", "flame2_no_dressing", "flame2_off_res", "flame2_on_res")


def test_presets_present():
    assert set(PRESETS) <= set(preset_names())


def test_on_res_preset_values():
    s = load_scenario("flame2_on_res")
    assert s.ensemble.optical_depth == 19.0
    assert s.scheme.omega_control_peak == pytest.approx(640e6)
    assert s.scheme.delta_signal == 0.0
    assert s.scheme.omega_dressing == pytest.approx(30e6)
    assert s.scheme.delta_dressing == pytest.approx(-570e6)
    assert s.ensemble.pumping_efficiency == 0.94
    assert s.ensemble.signal_waist == pytest.approx(110e-6)
    assert s.signal.fwhm == pytest.approx(2e-9)
    assert s.storage_control.fwhm == pytest.approx(4e-9)
    assert s.storage_control.extinction_ratio == 800
    assert s.storage_control.rise_fall_10_90 == pytest.approx(1.2e-9)
    assert s.timing.integration_window == pytest.approx(6e-9)
    assert s.dressing_on


def test_off_res_preset_values():
    s = load_scenario("flame2_off_res")
    assert abs(s.scheme.delta_signal) == pytest.approx(1.1e9)
    assert s.storage_control.fwhm == pytest.approx(3e-9)
    assert s.scheme.delta_two_photon == pytest.approx(-20e6)


@pytest.mark.parametrize("name", PRESETS)
def test_preset_lint_clean(name):
    assert lint_preset(name) == []


def test_lint_reports_missing_provenance(tmp_path):
    text = preset_path("flame2_on_res").read_text()
    text = text.replace('  ensemble.optical_depth: "experiment: measured on the storage transition"\n', "")
    p = tmp_path / "x.yaml"
    p.write_text(text)
    assert lint_preset(p) == ["no provenance for ensemble.optical_depth"]


def test_lint_reports_missing_field(tmp_path):
    text = preset_path("flame2_on_res").read_text().replace("  optical_depth: 19.0\n", "")
    p = tmp_path / "x.yaml"
    p.write_text(text)
    assert "missing field ensemble.optical_depth" in lint_preset(p)


def test_negative_od_rejected_naming_field():
    text = preset_path("flame2_on_res").read_text().replace("optical_depth: 19.0", "optical_depth: -1")
    with pytest.raises(ConfigError) as info:
        loads_scenario_file(text, "x.yaml")
    assert "optical_depth" in str(info.value)
    assert info.value.line is not None


def test_unknown_key_rejected():
    with pytest.raises(ConfigError) as info:
        loads_scenario_file("ensemble:\n  optical_dept: 3\n", "x.yaml")
    assert "optical_dept" in str(info.value)
    assert info.value.line == 2


def test_missing_unit_suffix_rejected():
    with pytest.raises(ConfigError):
        loads_scenario_file("signal:\n  fwhm: 2e-9\n")


def test_parse_error_has_line():
    with pytest.raises(ConfigError) as info:
        loads_scenario_file("a: 1\nb: [1, 2\nc: 3\n")
    assert info.value.line is not None


def test_duplicate_key_rejected():
    with pytest.raises(ConfigError):
        loads_scenario_file("mode: on_res\nmode: off_res\n")


def test_defaults_applied():
    s = loads_scenario_file("name: tiny\n").scenario
    assert s.ensemble.optical_depth == 19.0


def test_unit_conversion():
    s = loads_scenario_file("scheme:\n  delta_signal_ghz: 1.1\nsignal:\n  fwhm_ps: 1500\n").scenario
    assert s.scheme.delta_signal == pytest.approx(1.1e9)
    assert s.signal.fwhm == pytest.approx(1.5e-9)


@pytest.mark.parametrize("name", PRESETS)
def test_round_trip_canonical(name, tmp_path):
    sf = load_scenario_file(name)
    p = tmp_path / "rt.yaml"
    save_scenario(sf.scenario, p, sf.provenance, sf.measured)
    again = load_scenario_file(p)
    assert dump_scenario(again.scenario, again.provenance, again.measured) == p.read_text()
    assert scenario_hash(again.scenario) == scenario_hash(sf.scenario)


def test_hash_changes_with_content():
    s = load_scenario("flame2_on_res")
    assert scenario_hash(s) != scenario_hash(s.replace("ensemble.optical_depth", 18.0))


def test_unknown_preset():
    with pytest.raises(ConfigError):
        load_scenario("no_such_preset")


def test_sweep_block():
    text = """
name: swept
sweep:
  objective: eta_internal
  axes:
    - path: [storage_control.peak_power, retrieval_control.peak_power]
      unit: w
      values: [0.5, 1.0]
  per_point:
    axes:
      - path: timing.storage_control_center
        unit: ns
        bounds: [-2, 1]
"""
    sf = loads_scenario_file(text)
    assert sf.sweep.axes[0].values == (0.5, 1.0)
    assert sf.sweep.per_point.axes[0].bounds == pytest.approx((-2e-9, 1e-9))
