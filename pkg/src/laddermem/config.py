"""YAML scenario files with unit-suffixed keys.

Every dimensioned field is written with an explicit unit suffix
(``fwhm_ns: 2``, ``omega_control_peak_mhz: 640``); conversion to SI happens
here and nowhere else. Unknown keys are rejected and errors carry the line
number of the offending entry.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

import yaml
from scipy import constants

from .analytics import NoiseBudget
from .atomic import LadderScheme, ThermalEnsemble, TransmissionBudget
from .optimizer import Axis, NestedOptimization, Objective, SweepSpec
from .pulses import ControlPulse, SignalPulse, TimingPlan
from .scenario import Scenario, SolverConfig

__all__ = [
    "ConfigError",
    "ScenarioFile",
    "load_scenario",
    "load_scenario_file",
    "loads_scenario_file",
    "dump_scenario",
    "save_scenario",
    "preset_names",
    "preset_path",
    "lint_preset",
    "scenario_hash",
    "scenario_to_dict",
    "convert_suffixed",
]

UNITS = {
    "length": {"m": 1.0, "mm": 1e-3, "um": 1e-6, "nm": 1e-9},
    "time": {"s": 1.0, "us": 1e-6, "ns": 1e-9, "ps": 1e-12},
    "frequency": {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9},
    "power": {"w": 1.0, "mw": 1e-3},
    "temperature": {"k": 1.0},
    "mass": {"kg": 1.0, "amu": constants.atomic_mass},
}

SECTIONS = {
    "scheme": LadderScheme,
    "ensemble": ThermalEnsemble,
    "signal": SignalPulse,
    "storage_control": ControlPulse,
    "retrieval_control": ControlPulse,
    "timing": TimingPlan,
    "solver": SolverConfig,
    "budget": TransmissionBudget,
    "noise": NoiseBudget,
}

# (dimension, suffix used when writing)
_PULSE = {
    "fwhm": ("time", "ns"),
    "center": ("time", "ns"),
    "rise_fall_10_90": ("time", "ns"),
    "peak_power": ("power", "w"),
    "afterpulse_delay": ("time", "ns"),
}
FIELD_UNITS = {
    "scheme": {
        "lambda_signal": ("length", "nm"),
        "lambda_control": ("length", "nm"),
        "lambda_dressing": ("length", "nm"),
        "delta_signal": ("frequency", "mhz"),
        "delta_two_photon": ("frequency", "mhz"),
        "omega_control_peak": ("frequency", "mhz"),
        "control_calibration_power": ("power", "w"),
        "omega_dressing": ("frequency", "mhz"),
        "delta_dressing": ("frequency", "mhz"),
        "gamma_intermediate": ("frequency", "mhz"),
        "gamma_storage": ("frequency", "mhz"),
        "pole_guard": ("frequency", "mhz"),
    },
    "ensemble": {
        "temperature": ("temperature", "k"),
        "mass": ("mass", "amu"),
        "signal_waist": ("length", "um"),
        "control_waist": ("length", "um"),
        "dressing_waist": ("length", "um"),
        "cell_length": ("length", "mm"),
        "unpumped_detuning": ("frequency", "mhz"),
    },
    "signal": _PULSE,
    "storage_control": _PULSE,
    "retrieval_control": _PULSE,
    "timing": {
        "signal_center": ("time", "ns"),
        "storage_control_center": ("time", "ns"),
        "storage_time": ("time", "ns"),
        "integration_window": ("time", "ns"),
        "retrieval_window_offset": ("time", "ns"),
    },
    "solver": {"dt": ("time", "ps"), "margin": ("time", "ns")},
    "budget": {},
    "noise": {},
}

# pulse centres come from the timing plan; they are not part of the file format
_DERIVED_FIELDS = {"signal": {"center"}, "storage_control": {"center"}, "retrieval_control": {"center"}}

TOP_LEVEL = ("name", "mode", "dressing_on", "tof_decay")
EXTRA_BLOCKS = ("provenance", "measured", "sweep")


class ConfigError(ValueError):
    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        where = ""
        if source is not None:
            where = f"{source}"
        if line is not None:
            where = f"{where}:{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


@dataclass
class ScenarioFile:
    scenario: Scenario
    provenance: dict
    measured: dict
    sweep: SweepSpec | None
    raw: dict
    lines: dict


def convert_suffixed(key, value, dimension=None):
    """Split ``name_unit`` and scale ``value`` to SI. Returns (name, value)."""
    name, _, suffix = key.rpartition("_")
    dims = [dimension] if dimension else list(UNITS)
    for dim in dims:
        if name and suffix in UNITS[dim]:
            return name, value * UNITS[dim][suffix]
    return key, value


def _node_to_python(node, path, lines):
    if isinstance(node, yaml.MappingNode):
        out = {}
        for k, v in node.value:
            key = k.value
            sub = f"{path}.{key}" if path else key
            if key in out:
                raise ConfigError(f"duplicate key {sub!r}", k.start_mark.line + 1)
            lines[sub] = k.start_mark.line + 1
            out[key] = _node_to_python(v, sub, lines)
        return out
    if isinstance(node, yaml.SequenceNode):
        return [_node_to_python(v, f"{path}[{i}]", lines) for i, v in enumerate(node.value)]
    return _scalar(node)


def _scalar(node):
    loader = yaml.SafeLoader("")
    try:
        return loader.construct_object(node, deep=True)
    finally:
        loader.dispose()


def _parse(text, source=None):
    lines = {}
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError(f"parse error: {problem}", line, source) from None
    if node is None:
        return {}, lines
    if not isinstance(node, yaml.MappingNode):
        raise ConfigError("top level must be a mapping", node.start_mark.line + 1, source)
    try:
        data = _node_to_python(node, "", lines)
    except ConfigError as exc:
        raise ConfigError(str(exc).split(": ", 1)[-1], exc.line, source) from None
    return data, lines


def _section_kwargs(section, entries, lines, source):
    cls = SECTIONS[section]
    units = FIELD_UNITS[section]
    names = {f.name for f in dataclasses.fields(cls)} - _DERIVED_FIELDS.get(section, set())
    kwargs = {}
    if not isinstance(entries, dict):
        raise ConfigError(f"section {section!r} must be a mapping", lines.get(section), source)
    for key, value in entries.items():
        line = lines.get(f"{section}.{key}")
        field_name, converted = key, value
        if key not in names:
            base, _, suffix = key.rpartition("_")
            if base in units and suffix in UNITS[units[base][0]]:
                if not isinstance(value, (int, float)) or isinstance(value, bool):
                    raise ConfigError(f"{section}.{key}: expected a number, got {value!r}", line, source)
                field_name, converted = base, float(value) * UNITS[units[base][0]][suffix]
            elif base in units:
                raise ConfigError(
                    f"{section}.{key}: unit {suffix!r} is not a {units[base][0]} unit "
                    f"(expected one of {sorted(UNITS[units[base][0]])})",
                    line,
                    source,
                )
            else:
                raise ConfigError(f"unknown key {section}.{key}", line, source)
        elif key in units:
            raise ConfigError(
                f"{section}.{key} needs a unit suffix, e.g. {key}_{units[key][1]}", line, source
            )
        if field_name in kwargs:
            raise ConfigError(f"{section}.{field_name} given twice", line, source)
        kwargs[field_name] = converted
    return kwargs


def _build(cls, section, kwargs, lines, source):
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        msg = str(exc)
        field_name = next((k for k in kwargs if k in msg), None)
        line = None
        if field_name is not None:
            line = next(
                (lines[k] for k in lines if k.startswith(f"{section}.{field_name}")), lines.get(section)
            )
        label = f"{section}.{field_name}" if field_name else section
        raise ConfigError(f"invalid {label}: {msg}", line, source) from None


def _scenario_from_dict(data, lines, source=None):
    unknown = set(data) - set(SECTIONS) - set(TOP_LEVEL) - set(EXTRA_BLOCKS)
    for key in sorted(unknown):
        raise ConfigError(f"unknown key {key}", lines.get(key), source)
    parts = {}
    for section, cls in SECTIONS.items():
        kwargs = _section_kwargs(section, data.get(section, {}) or {}, lines, source)
        parts[section] = _build(cls, section, kwargs, lines, source)
    top = {k: data[k] for k in TOP_LEVEL if k in data}
    try:
        return Scenario(**top, **parts)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid scenario: {exc}", None, source) from None


def _axis_from_dict(entry, where, lines, source):
    if not isinstance(entry, dict):
        raise ConfigError(f"{where}: axis must be a mapping", lines.get(where), source)
    allowed = {"path", "values", "bounds", "unit"}
    extra = set(entry) - allowed
    if extra:
        raise ConfigError(f"{where}: unknown axis keys {sorted(extra)}", lines.get(where), source)
    unit = entry.get("unit")
    scale = 1.0
    if unit is not None:
        for table in UNITS.values():
            if unit in table:
                scale = table[unit]
                break
        else:
            raise ConfigError(f"{where}: unknown unit {unit!r}", lines.get(f"{where}.unit"), source)
    path = entry.get("path")
    if path is None:
        raise ConfigError(f"{where}: axis needs a path", lines.get(where), source)
    path = tuple(path) if isinstance(path, list) else path
    values = tuple(float(v) * scale for v in entry.get("values", ()))
    bounds = entry.get("bounds")
    if bounds is not None:
        bounds = tuple(float(b) * scale for b in bounds)
    try:
        return Axis(path, values, bounds)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}", lines.get(where), source) from None


def _sweep_from_dict(block, scenario, lines, source):
    if block is None:
        return None
    allowed = {"objective", "axes", "per_point"}
    extra = set(block) - allowed
    if extra:
        raise ConfigError(f"sweep: unknown keys {sorted(extra)}", lines.get("sweep"), source)
    axes = [_axis_from_dict(a, f"sweep.axes[{i}]", lines, source) for i, a in enumerate(block.get("axes", []))]
    nested = None
    if block.get("per_point"):
        pp = block["per_point"]
        inner = [
            _axis_from_dict(a, f"sweep.per_point.axes[{i}]", lines, source)
            for i, a in enumerate(pp.get("axes", []))
        ]
        opts = {k: pp[k] for k in ("seeds", "max_evals", "xtol") if k in pp}
        nested = NestedOptimization(tuple(inner), **opts)
    try:
        return SweepSpec(scenario, tuple(axes), Objective(block.get("objective", "eta_internal")), nested)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"sweep: {exc}", lines.get("sweep"), source) from None


def load_scenario_file(path_or_name) -> ScenarioFile:
    path = Path(path_or_name)
    if not path.exists():
        if str(path_or_name) in preset_names():
            path = preset_path(str(path_or_name))
        else:
            raise ConfigError(
                f"no such file or preset: {path_or_name!r} (presets: {', '.join(preset_names())})"
            )
    return loads_scenario_file(path.read_text(), source=str(path))


def loads_scenario_file(text, source=None) -> ScenarioFile:
    data, lines = _parse(text, source)
    scenario = _scenario_from_dict(data, lines, source)
    provenance = data.get("provenance") or {}
    measured = data.get("measured") or {}
    for block in ("provenance", "measured"):
        if not isinstance(data.get(block) or {}, dict):
            raise ConfigError(f"{block} must be a mapping", lines.get(block), source)
    sweep = _sweep_from_dict(data.get("sweep"), scenario, lines, source)
    return ScenarioFile(scenario, dict(provenance), dict(measured), sweep, data, lines)


def load_scenario(path_or_name) -> Scenario:
    """Load a scenario from a YAML file path or a preset name."""
    return load_scenario_file(path_or_name).scenario


def _out_value(value):
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, float):
        if math.isinf(value):
            return value
        return float(f"{value:.12g}")
    return value


def scenario_to_dict(scenario: Scenario):
    """Canonical nested mapping with unit-suffixed keys."""
    out = {k: _out_value(getattr(scenario, k)) for k in TOP_LEVEL}
    for section in SECTIONS:
        obj = getattr(scenario, section)
        units = FIELD_UNITS[section]
        block = {}
        for f in dataclasses.fields(obj):
            if f.name in _DERIVED_FIELDS.get(section, set()):
                continue
            value = getattr(obj, f.name)
            if f.name in units and value is not None:
                dim, suffix = units[f.name]
                block[f"{f.name}_{suffix}"] = _out_value(value / UNITS[dim][suffix])
            else:
                block[f.name] = _out_value(value)
        out[section] = block
    return out


def dump_scenario(scenario: Scenario, provenance=None, measured=None):
    data = scenario_to_dict(scenario)
    if provenance:
        data["provenance"] = dict(provenance)
    if measured:
        data["measured"] = dict(measured)
    return yaml.safe_dump(data, sort_keys=False, default_flow_style=False)


def save_scenario(scenario: Scenario, path, provenance=None, measured=None):
    Path(path).write_text(dump_scenario(scenario, provenance, measured))


def scenario_hash(scenario: Scenario):
    blob = json.dumps(scenario_to_dict(scenario), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _preset_dir():
    return resources.files("laddermem") / "presets"


def preset_names():
    return sorted(p.name[:-5] for p in _preset_dir().iterdir() if p.name.endswith(".yaml"))


def preset_path(name):
    path = _preset_dir() / f"{name}.yaml"
    if not path.is_file():
        raise ConfigError(f"unknown preset {name!r} (available: {', '.join(preset_names())})")
    return Path(str(path))


def lint_preset(path_or_name):
    """Problems with a preset file: missing fields or fields without provenance."""
    sf = load_scenario_file(path_or_name)
    problems = []
    complete = scenario_to_dict(sf.scenario)
    for key in TOP_LEVEL:
        if key not in sf.raw:
            problems.append(f"missing field {key}")
        elif key != "name" and key not in sf.provenance:
            problems.append(f"no provenance for {key}")
    for section in SECTIONS:
        given = sf.raw.get(section) or {}
        for key in complete[section]:
            if key not in given:
                problems.append(f"missing field {section}.{key}")
            elif f"{section}.{key}" not in sf.provenance:
                problems.append(f"no provenance for {section}.{key}")
    for key in sf.measured:
        if f"measured.{key}" not in sf.provenance:
            problems.append(f"no provenance for measured.{key}")
    for key, note in sf.provenance.items():
        if not isinstance(note, str) or not note.strip():
            problems.append(f"empty provenance note for {key}")
    return problems
