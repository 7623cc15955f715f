"""Batch commands: run a scenario, persist an immutable run record and its tables."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import math
import os
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, _accel
from .analytics import (
    end_to_end_efficiency,
    fit_decay,
    mu1_signal_to_noise,
    noise_per_pulse,
)
from .atomic import StorageMode
from .calibration import DEFAULT_STORAGE_TIMES
from .config import load_scenario_file, scenario_hash, scenario_to_dict
from .optimizer import Axis, NestedOptimization, SweepSpec, scan
from .pulses import effective_fractional_delay

__all__ = [
    "COMMANDS",
    "FIGURES",
    "RunRecord",
    "RunError",
    "run",
    "figure_spec",
    "table_text",
]

log = logging.getLogger(__name__)

COMMANDS = ("simulate", "lifetime", "sweep", "fit", "budget", "report")
FIGURES = ("fig2", "fig3a", "fig3b", "fig4")

CONTROL_POWERS = (0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4)
SIGNAL_FWHMS = (0.5e-9, 1.0e-9, 1.5e-9, 2.0e-9, 3.0e-9)
POWER_PATHS = ("storage_control.peak_power", "retrieval_control.peak_power")
TIMING_AXIS = Axis("timing.storage_control_center", bounds=(-3e-9, 2e-9))


class RunError(RuntimeError):
    pass


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    if dataclasses.is_dataclass(x):
        return _jsonable(dataclasses.asdict(x))
    return x


def _digest(obj):
    blob = json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class RunRecord:
    command: str
    config_hash: str
    version: str
    scenario: dict
    results: dict
    tables: dict = field(default_factory=dict)
    wall_time: float = 0.0
    timestamp: str = ""
    backend: str = ""
    results_hash: str = ""

    def __post_init__(self):
        self.results = _jsonable(self.results)
        if not self.results_hash:
            self.results_hash = _digest({"results": self.results, "tables": self.tables})

    def to_json(self):
        return json.dumps(_jsonable(dataclasses.asdict(self)), indent=2, sort_keys=True)

    VOLATILE = ("wall_time", "timestamp", "backend")

    def canonical(self):
        """The record without run-dependent metadata; equal for equal configs."""
        d = _jsonable(dataclasses.asdict(self))
        for k in self.VOLATILE:
            d.pop(k)
        return json.dumps(d, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))


def table_text(header, rows):
    lines = ["\t".join(header)] + ["\t".join(_cell(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _exclusive_path(directory: Path, stem, suffix):
    """Records are immutable: never overwrite, number the next free name."""
    path = directory / f"{stem}{suffix}"
    n = 1
    while path.exists():
        path = directory / f"{stem}.{n}{suffix}"
        n += 1
    return path


# ---------------------------------------------------------------- commands


def _cmd_simulate(sf, out, opts):
    from .solver import run_storage_retrieval

    res = run_storage_retrieval(sf.scenario)
    t_ns = res.t * 1e9
    rows = zip(t_ns, res.retrieved_waveform, res.reference_waveform, res.stored_energy_vs_time)
    tables = {
        "waveform": ("t_ns", "retrieved_photons_per_s", "reference_photons_per_s", "stored_photons"),
    }
    results = res.summary()
    results["eta_e2e"] = end_to_end_efficiency(res.eta_internal, sf.scenario.budget, sf.scenario.mode)
    return results, {"waveform": (tables["waveform"], list(rows))}


def _storage_times(opts):
    times = opts.get("times")
    return tuple(times) if times else DEFAULT_STORAGE_TIMES


def _cmd_lifetime(sf, out, opts):
    from .solver import lifetime_curve

    times = _storage_times(opts)
    curve = lifetime_curve(sf.scenario, times)
    fit = fit_decay(curve)
    rows = [(t * 1e9, eta) for t, eta in curve]
    results = {"curve": curve, "fit": fit.as_dict()}
    return results, {"lifetime": (("timing.storage_time_ns", "eta_internal"), rows)}


def figure_spec(name, scenario):
    """The sweep behind one figure analog, applied to ``scenario``."""
    if name == "fig3a":
        return SweepSpec(
            scenario,
            (Axis(POWER_PATHS, CONTROL_POWERS),),
            per_point=NestedOptimization((TIMING_AXIS,), seeds=6, max_evals=25, xtol=0.01),
        )
    if name == "fig4":
        power = Axis(POWER_PATHS, bounds=(0.2, 1.4))
        return SweepSpec(
            scenario,
            (Axis("signal.fwhm", SIGNAL_FWHMS),),
            per_point=NestedOptimization((TIMING_AXIS, power), seeds=4, max_evals=40, xtol=0.02),
        )
    if name == "fig2":
        return SweepSpec(scenario, (Axis("timing.storage_time", DEFAULT_STORAGE_TIMES),))
    raise RunError(f"figure {name!r} is not a solver sweep")


def _cmd_sweep(sf, out, opts):
    figure = opts.get("figure")
    jobs = opts.get("jobs", 1)
    if figure == "fig3b":
        rows = []
        for p in CONTROL_POWERS:
            rows.append(
                (
                    p,
                    noise_per_pulse(p, StorageMode.ON_RES, sf.scenario.noise),
                    noise_per_pulse(p, StorageMode.OFF_RES, sf.scenario.noise),
                )
            )
        header = ("storage_control.peak_power", "noise_on_res", "noise_off_res")
        return {"noise": rows}, {"fig3b": (header, rows)}
    if figure == "fig2":
        from .solver import lifetime_curve

        tables, results = {}, {}
        header = ("timing.storage_time_ns", "eta_internal")
        for label, flag in (("dressing_on", True), ("dressing_off", False)):
            s = dataclasses.replace(sf.scenario, dressing_on=flag)
            curve = lifetime_curve(s, _storage_times(opts))
            results[label] = {"curve": curve, "fit": fit_decay(curve).as_dict()}
            tables[f"fig2_{label}"] = (header, [(t * 1e9, e) for t, e in curve])
        return results, tables
    if figure is not None:
        spec = figure_spec(figure, sf.scenario)
        name = figure
    elif sf.sweep is not None:
        spec = sf.sweep
        name = "sweep"
    else:
        raise RunError("sweep needs --figure or a 'sweep' block in the scenario file")
    table = scan(spec, jobs=jobs)
    rows = list(table.rows())
    results = {
        "header": table.header,
        "rows": rows,
        "failed": [p.params for p in table.points if p.failed],
    }
    return results, {name: (tuple(table.header), rows)}


def _read_curve(path):
    data = np.loadtxt(path, delimiter=None, comments="#", ndmin=2, skiprows=_header_rows(path))
    if data.shape[1] < 2:
        raise RunError(f"{path}: expected two columns (t_ns, eta)")
    return [(float(t) * 1e-9, float(e)) for t, e in data[:, :2]]


def _header_rows(path):
    first = Path(path).read_text().lstrip().split("\n", 1)[0]
    try:
        [float(x) for x in first.replace(",", " ").split()]
        return 0
    except ValueError:
        return 1


def _cmd_fit(sf, out, opts):
    path = opts.get("input")
    if path:
        curve = _read_curve(path)
    else:
        from .solver import lifetime_curve

        curve = lifetime_curve(sf.scenario, _storage_times(opts))
    fit = fit_decay(curve, bootstrap=opts.get("bootstrap", 0), seed=opts.get("seed"))
    rows = [(t * 1e9, e) for t, e in curve]
    return {"curve": curve, "fit": fit.as_dict()}, {"fit_input": (("t_ns", "eta"), rows)}


def _measured(sf, key):
    if key not in sf.measured:
        raise RunError(f"scenario {sf.scenario.name!r} has no measured value {key!r}")
    return float(sf.measured[key])


def _budget_row(sf):
    s = sf.scenario
    eta_int = _measured(sf, "eta_internal_0")
    return {
        "preset": s.name,
        "mode": s.mode.value,
        "eta_internal_0": eta_int,
        "setup_transmission": s.budget.setup,
        "rb85_penalty_applied": s.mode is StorageMode.OFF_RES,
        "eta_e2e_0": end_to_end_efficiency(eta_int, s.budget, s.mode),
    }


def _cmd_budget(sf, out, opts):
    files = [sf] if sf is not None else [load_scenario_file(n) for n in ("flame2_on_res", "flame2_off_res")]
    rows = [_budget_row(f) for f in files]
    header = ("preset", "mode", "eta_internal_0", "setup_transmission", "eta_e2e_0")
    table = [tuple(r[h] for h in header) for r in rows]
    return {"budget": rows}, {"budget": (header, table)}


def _report_row(sf, label):
    s = sf.scenario
    eta_int = _measured(sf, "eta_internal_0")
    eta_e2e = end_to_end_efficiency(eta_int, s.budget, s.mode)
    nu = noise_per_pulse(_measured(sf, "noise_control_power_w"), s.mode, s.noise)
    tau = _measured(sf, "lifetime_ns") * 1e-9
    return {
        "memory": label,
        "mode": s.mode.value,
        "eta_internal_0_percent": 100 * eta_int,
        "eta_e2e_0_percent": 100 * eta_e2e,
        "lifetime_ns": tau * 1e9,
        "noise_1e-5": nu * 1e5,
        "mu1": mu1_signal_to_noise(eta_e2e, nu),
        "fractional_delay": effective_fractional_delay(tau, s.signal.fwhm),
        "source": "computed",
    }


def _stored_row(sf, label):
    keys = ("eta_internal_0", "eta_e2e_0", "lifetime_ns", "noise_photons")
    m = {k: _measured(sf, k) for k in keys}
    return {
        "memory": label,
        "mode": sf.scenario.mode.value,
        "eta_internal_0_percent": 100 * m["eta_internal_0"],
        "eta_e2e_0_percent": 100 * m["eta_e2e_0"],
        "lifetime_ns": m["lifetime_ns"],
        "noise_1e-5": m["noise_photons"] * 1e5,
        "mu1": mu1_signal_to_noise(m["eta_e2e_0"], m["noise_photons"]),
        "fractional_delay": effective_fractional_delay(m["lifetime_ns"] * 1e-9, sf.scenario.signal.fwhm),
        "source": "stored",
    }


def _cmd_report(sf, out, opts):
    main = sf if sf is not None else load_scenario_file("flame2_on_res")
    rows = [_report_row(main, "FLAME-2")]
    compare = opts.get("compare")
    if compare:
        if compare != "flame1":
            raise RunError(f"unknown comparison {compare!r}")
        rows.append(_stored_row(load_scenario_file("flame1_off_res"), "FLAME-1"))
    header = (
        "memory",
        "mode",
        "eta_internal_0_percent",
        "eta_e2e_0_percent",
        "lifetime_ns",
        "noise_1e-5",
        "mu1",
        "fractional_delay",
        "source",
    )
    table = [tuple(r[h] for h in header) for r in rows]
    return {"table": rows, "text": format_report(rows)}, {"table1": (header, table)}


def format_report(rows):
    lines = [
        f"{'memory':<9} {'mode':<8} {'eta_int(0) %':>12} {'eta_e2e(0) %':>12} {'tau_s ns':>9} {'noise 1e-5':>10}"
    ]
    for r in rows:
        lines.append(
            f"{r['memory']:<9} {r['mode']:<8} {r['eta_internal_0_percent']:>12.1f} "
            f"{r['eta_e2e_0_percent']:>12.1f} {r['lifetime_ns']:>9.0f} {r['noise_1e-5']:>10.2f}"
        )
    return "\n".join(lines)


_HANDLERS = {
    "simulate": _cmd_simulate,
    "lifetime": _cmd_lifetime,
    "sweep": _cmd_sweep,
    "fit": _cmd_fit,
    "budget": _cmd_budget,
    "report": _cmd_report,
}
_OPTIONAL_SCENARIO = {"budget", "report", "fit"}


def run(command, scenario=None, output_dir=None, **opts):
    """Execute ``command`` and persist a RunRecord plus its tables in ``output_dir``."""
    if command not in _HANDLERS:
        raise RunError(f"unknown command {command!r}; expected one of {', '.join(COMMANDS)}")
    sf = load_scenario_file(scenario) if scenario is not None else None
    if sf is None and command not in _OPTIONAL_SCENARIO:
        raise RunError(f"{command} needs --scenario")
    if sf is None and command == "fit" and not opts.get("input"):
        raise RunError("fit needs --input or --scenario")
    out = Path(output_dir) if output_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    start = time.perf_counter()
    results, tables = _HANDLERS[command](sf, out, opts)
    wall = time.perf_counter() - start

    snapshot = scenario_to_dict(sf.scenario) if sf is not None else {}
    chash = scenario_hash(sf.scenario) if sf is not None else _digest({"command": command})
    table_hashes = {}
    for name, (header, rows) in tables.items():
        text = table_text(header, rows)
        table_hashes[name] = hashlib.sha256(text.encode()).hexdigest()
        if out is not None:
            _exclusive_path(out, name, ".tsv").write_text(text)
    record = RunRecord(
        command=command,
        config_hash=chash,
        version=__version__,
        scenario=snapshot,
        results=results,
        tables=table_hashes,
        wall_time=wall,
        timestamp=datetime.now(timezone.utc).isoformat(),
        backend=_accel.backend_name(),
    )
    if out is not None:
        _exclusive_path(out, f"{command}_{chash[:12]}", ".json").write_text(record.to_json())
    return record


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def default_jobs():
    return os.cpu_count() or 1
