"""Parameter scans and derivative-free maximisation of simulated efficiency."""

from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

from .analytics import end_to_end_efficiency
from .scenario import Scenario, get_path

__all__ = [
    "Axis",
    "Objective",
    "NestedOptimization",
    "SweepSpec",
    "ScanPoint",
    "ScanTable",
    "OptimizationResult",
    "evaluate",
    "scan",
    "optimize",
    "golden_section_max",
]

log = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class Objective(str, Enum):
    ETA_INTERNAL = "eta_internal"
    ETA_E2E = "eta_e2e"


@dataclass(frozen=True)
class Axis:
    """One scanned or optimised quantity.

    ``path`` may name several scenario fields that always take the same value,
    e.g. the peak power of both control pulses.
    """

    path: str | tuple[str, ...]
    values: tuple = ()
    bounds: tuple[float, float] | None = None

    def __post_init__(self):
        paths = (self.path,) if isinstance(self.path, str) else tuple(self.path)
        if not paths:
            raise ValueError("axis needs at least one parameter path")
        object.__setattr__(self, "path", paths)
        object.__setattr__(self, "values", tuple(self.values))
        if self.bounds is not None:
            lo, hi = (float(b) for b in self.bounds)
            if not lo < hi:
                raise ValueError(f"axis {self.name}: bounds must satisfy lo < hi")
            object.__setattr__(self, "bounds", (lo, hi))

    @property
    def name(self):
        return self.path[0]

    def apply(self, scenario: Scenario, value):
        for p in self.path:
            scenario = scenario.replace(p, value)
        return scenario

    def validate(self, scenario: Scenario):
        for p in self.path:
            get_path(scenario, p)


@dataclass(frozen=True)
class NestedOptimization:
    """Re-optimise ``axes`` at every scan point before recording the objective."""

    axes: tuple[Axis, ...]
    seeds: int = 5
    max_evals: int = 40
    xtol: float = 1e-2

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        for ax in self.axes:
            if ax.bounds is None:
                raise ValueError(f"nested axis {ax.name} needs bounds")


@dataclass(frozen=True)
class SweepSpec:
    template: Scenario
    axes: tuple[Axis, ...]
    objective: Objective = Objective.ETA_INTERNAL
    per_point: NestedOptimization | None = None
    # replaces the solver, e.g. with a synthetic objective; must be picklable for jobs > 1
    evaluator: Callable[[Scenario], float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        object.__setattr__(self, "objective", Objective(self.objective))
        if not self.axes:
            raise ValueError("a sweep needs at least one axis")
        for ax in self.axes:
            ax.validate(self.template)
        if self.per_point is not None:
            for ax in self.per_point.axes:
                ax.validate(self.template)

    def evaluate(self, scenario: Scenario):
        if self.evaluator is not None:
            return float(self.evaluator(scenario))
        return evaluate(scenario, self.objective)


def evaluate(scenario: Scenario, objective=Objective.ETA_INTERNAL):
    from .solver import run_storage_retrieval

    eta = run_storage_retrieval(scenario).eta_internal
    if Objective(objective) is Objective.ETA_E2E:
        return end_to_end_efficiency(eta, scenario.budget, scenario.mode)
    return eta


@dataclass
class ScanPoint:
    index: tuple[int, ...]
    params: dict
    value: float | None
    error: str | None = None
    optimized: dict = field(default_factory=dict)

    @property
    def failed(self):
        return self.error is not None


@dataclass
class ScanTable:
    axes: tuple[str, ...]
    inner: tuple[str, ...]
    objective: str
    points: list[ScanPoint]

    @property
    def header(self):
        return [*self.axes, *self.inner, self.objective, "error"]

    def rows(self):
        for p in sorted(self.points, key=lambda p: p.index):
            yield [
                *(p.params[a] for a in self.axes),
                *(p.optimized.get(a, math.nan) for a in self.inner),
                math.nan if p.value is None else p.value,
                p.error or "",
            ]

    def values(self):
        return [p.value for p in sorted(self.points, key=lambda p: p.index)]

    def to_tsv(self):
        lines = ["\t".join(self.header)]
        for row in self.rows():
            lines.append("\t".join(_fmt(x) for x in row))
        return "\n".join(lines) + "\n"


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _scan_point(spec: SweepSpec, index, values):
    params = {ax.name: v for ax, v in zip(spec.axes, values)}
    scenario = spec.template
    for ax, v in zip(spec.axes, values):
        scenario = ax.apply(scenario, v)
    try:
        if spec.per_point is None:
            return ScanPoint(index, params, spec.evaluate(scenario))
        inner = spec.per_point
        sub = SweepSpec(scenario, inner.axes, spec.objective, None, spec.evaluator)
        res = optimize(sub, seeds=inner.seeds, max_evals=inner.max_evals, xtol=inner.xtol)
        return ScanPoint(index, params, res.best_value, optimized=dict(res.best_params))
    except Exception as exc:  # a failed point is recorded, the scan continues
        log.warning("scan point %s failed: %s", params, exc)
        return ScanPoint(index, params, None, error=f"{type(exc).__name__}: {exc}")


def scan(spec: SweepSpec, jobs=1):
    """Evaluate the Cartesian product of the axis values.

    Points are independent; the table is keyed by grid index, so the result
    does not depend on ``jobs`` or completion order.
    """
    for ax in spec.axes:
        if not ax.values:
            raise ValueError(f"scan axis {ax.name} has no values")
    grid = list(
        zip(
            itertools.product(*(range(len(ax.values)) for ax in spec.axes)),
            itertools.product(*(ax.values for ax in spec.axes)),
        )
    )
    if jobs > 1 and len(grid) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_scan_point, spec, i, v) for i, v in grid]
            points = [f.result() for f in futures]
    else:
        points = [_scan_point(spec, i, v) for i, v in grid]
    inner = tuple(ax.name for ax in spec.per_point.axes) if spec.per_point else ()
    return ScanTable(tuple(ax.name for ax in spec.axes), inner, spec.objective.value, points)


@dataclass
class OptimizationResult:
    best_params: dict
    best_value: float
    trace: list = field(default_factory=list)
    converged: bool = True
    n_evals: int = 0
    message: str = ""


class _BudgetExhausted(Exception):
    pass


class _Evaluator:
    """Memoised objective with a hard evaluation budget and a full trace."""

    def __init__(self, spec: SweepSpec, max_evals, jobs):
        self.spec = spec
        self.max_evals = max_evals
        self.jobs = jobs
        self.cache = {}
        self.trace = []

    def _scenario(self, x):
        s = self.spec.template
        for ax, v in zip(self.spec.axes, x):
            s = ax.apply(s, v)
        return s

    def _record(self, x, value):
        self.cache[x] = value
        self.trace.append(({ax.name: v for ax, v in zip(self.spec.axes, x)}, value))

    def __call__(self, x):
        x = tuple(float(v) for v in x)
        if x in self.cache:
            return self.cache[x]
        if len(self.trace) >= self.max_evals:
            raise _BudgetExhausted
        try:
            value = self.spec.evaluate(self._scenario(x))
        except Exception as exc:
            log.warning("objective failed at %s: %s", x, exc)
            value = -math.inf
        if math.isnan(value):
            value = -math.inf
        self._record(x, value)
        return value

    def many(self, xs):
        xs = [tuple(float(v) for v in x) for x in xs]
        todo = [x for x in dict.fromkeys(xs) if x not in self.cache]
        room = self.max_evals - len(self.trace)
        if self.jobs > 1 and len(todo) > 1:
            batch = todo[: max(room, 0)]
            with ProcessPoolExecutor(max_workers=self.jobs) as pool:
                results = list(pool.map(_safe_eval, [self.spec] * len(batch), map(self._scenario, batch)))
            for x, v in zip(batch, results):
                self._record(x, v)
        return [self(x) for x in xs]


def _safe_eval(spec, scenario):
    try:
        value = spec.evaluate(scenario)
    except Exception:
        return -math.inf
    return -math.inf if math.isnan(value) else value


def golden_section_max(f, lo, hi, xtol, fa=None):
    """Maximise a unimodal ``f`` on [lo, hi]; returns (x, f(x))."""
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > xtol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def optimize(spec: SweepSpec, seeds=5, max_evals=60, xtol=1e-3, max_cycles=4, ftol=1e-6, jobs=1):
    """Coordinate search: per axis, a seed grid followed by golden-section refinement.

    ``xtol`` is relative to each axis' bound width. Deterministic for a
    deterministic objective. When the budget runs out the best point so far is
    returned with ``converged=False``.
    """
    for ax in spec.axes:
        if ax.bounds is None:
            raise ValueError(f"optimisation axis {ax.name} needs bounds")
    if seeds < 2:
        raise ValueError("seeds must be >= 2")
    ev = _Evaluator(spec, max_evals, jobs)
    x = [0.5 * (ax.bounds[0] + ax.bounds[1]) for ax in spec.axes]
    converged = False
    message = ""
    try:
        best = ev(x)
        for _ in range(max_cycles):
            start = best
            for k, ax in enumerate(spec.axes):
                lo, hi = ax.bounds
                grid = [lo + (hi - lo) * i / (seeds - 1) for i in range(seeds)]
                points = [x[:k] + [g] + x[k + 1 :] for g in grid]
                vals = ev.many(points)
                i = max(range(seeds), key=lambda j: (vals[j], -j))
                a = grid[max(i - 1, 0)]
                b = grid[min(i + 1, seeds - 1)]

                def along(v, k=k):
                    return ev(x[:k] + [v] + x[k + 1 :])

                xg, fg = golden_section_max(along, a, b, xtol * (hi - lo))
                cand = [(vals[i], grid[i]), (fg, xg), (best, x[k])]
                fbest, xbest = max(cand, key=lambda c: c[0])
                x[k] = xbest
                best = fbest
            if best - start <= ftol * max(abs(best), 1.0):
                converged = True
                break
        else:
            message = "cycle limit reached"
    except _BudgetExhausted:
        message = "evaluation budget exhausted"
    params, value = max(ev.trace, key=lambda t: t[1])
    if not converged and not message:
        message = "not converged"
    return OptimizationResult(dict(params), value, list(ev.trace), converged, len(ev.trace), message)
