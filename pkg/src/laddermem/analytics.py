"""Efficiency-versus-time model, its fit, histogram windows and setup budgets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .atomic import StorageMode, TransmissionBudget

__all__ = [
    "INF",
    "DecayFitResult",
    "FitFailure",
    "HistogramRole",
    "HistogramRecord",
    "NoiseBudget",
    "UndefinedLifetimeError",
    "EmptyWindowError",
    "decay_model",
    "lifetime_1e",
    "fit_decay",
    "window_counts",
    "efficiency_from_histograms",
    "load_histogram",
    "end_to_end_efficiency",
    "noise_per_pulse",
    "mu1_signal_to_noise",
]

# explicit sentinel for a decay channel that is switched off
INF = math.inf


class UndefinedLifetimeError(ValueError):
    pass


class EmptyWindowError(ZeroDivisionError):
    pass


class FitFailure(RuntimeError):
    pass


def decay_model(t, eta0, tau_sigma, tau_gamma):
    """eta0 * exp(-t^2 / (2 tau_sigma^2) - t / tau_gamma); ``INF`` disables a channel."""
    t = np.asarray(t, dtype=float)
    if tau_sigma <= 0 or tau_gamma <= 0:
        raise ValueError("decay times must be positive")
    a = 0.0 if math.isinf(tau_sigma) else 0.5 / tau_sigma**2
    b = 0.0 if math.isinf(tau_gamma) else 1.0 / tau_gamma
    out = eta0 * np.exp(-a * t * t - b * t)
    return float(out) if out.ndim == 0 else out


def lifetime_1e(tau_sigma, tau_gamma):
    """Positive root of t^2/(2 tau_sigma^2) + t/tau_gamma = 1."""
    if tau_sigma <= 0 or tau_gamma <= 0:
        raise ValueError("decay times must be positive")
    a = 0.0 if math.isinf(tau_sigma) else 0.5 / tau_sigma**2
    b = 0.0 if math.isinf(tau_gamma) else 1.0 / tau_gamma
    if a == 0 and b == 0:
        raise UndefinedLifetimeError("both decay channels are infinite")
    # cancellation-free form of (-b + sqrt(b^2 + 4a)) / 2a
    return 2.0 / (b + math.sqrt(b * b + 4.0 * a))


@dataclass
class DecayFitResult:
    eta0: float
    tau_sigma: float
    tau_gamma: float
    tau_s: float
    uncertainty: dict = field(default_factory=dict)
    residual_norm: float = math.nan
    success: bool = True
    message: str = ""
    n_iter: int = 0

    def as_dict(self):
        return {
            "eta0": self.eta0,
            "tau_sigma": self.tau_sigma,
            "tau_gamma": self.tau_gamma,
            "tau_s": self.tau_s,
            "uncertainty": dict(self.uncertainty),
            "residual_norm": self.residual_norm,
            "success": self.success,
            "message": self.message,
        }


def _from_rates(a, b):
    tau_sigma = INF if a <= 0 else 1.0 / math.sqrt(2.0 * a)
    tau_gamma = INF if b <= 0 else 1.0 / b
    return tau_sigma, tau_gamma


def _failed(message):
    nan = math.nan
    return DecayFitResult(nan, nan, nan, nan, {}, nan, success=False, message=message)


def _gauss_newton(t, y, w, x0, max_iter=200, tol=1e-15):
    """Damped Gauss-Newton on (eta0, a, b) with a, b kept non-negative."""
    x = np.array(x0, dtype=float)

    def resid(p):
        return w * (p[0] * np.exp(-p[1] * t * t - p[2] * t) - y)

    def jac(p):
        e = np.exp(-p[1] * t * t - p[2] * t)
        return w[:, None] * np.column_stack([e, -p[0] * t * t * e, -p[0] * t * e])

    r = resid(x)
    cost = r @ r
    lam = 0.0
    it = 0
    for it in range(1, max_iter + 1):
        J = jac(x)
        g = J.T @ r
        H = J.T @ J
        # column scaling keeps eta0 (~1) and the rates (~1e-2..1e-4) comparable
        scale = np.sqrt(np.diag(H))
        scale[scale == 0] = 1.0
        Hs = H / np.outer(scale, scale)
        gs = g / scale
        improved = False
        for _ in range(40):
            step = -np.linalg.solve(Hs + lam * np.eye(3), gs) / scale
            trial = x + step
            trial[1:] = np.maximum(trial[1:], 0.0)
            r_trial = resid(trial)
            cost_trial = r_trial @ r_trial
            if cost_trial <= cost:
                improved = True
                break
            lam = max(4.0 * lam, 1e-6)
        if not improved:
            break
        shrink = cost - cost_trial
        x, r, cost = trial, r_trial, cost_trial
        lam *= 0.25
        if lam < 1e-12:
            lam = 0.0
        if shrink <= tol * max(cost, 1e-300) and np.max(np.abs(step) / np.maximum(np.abs(x), 1e-300)) < 1e-12:
            break
        if cost == 0.0:
            break
    return x, r, J, it


def _initial_guess(t, y):
    """Log-linear regression of ln(eta) on (1, t, t^2)."""
    A = np.column_stack([np.ones_like(t), t, t * t])
    coef, *_ = np.linalg.lstsq(A, np.log(y), rcond=None)
    eta0 = math.exp(coef[0])
    b = max(-coef[1], 0.0)
    a = max(-coef[2], 0.0)
    if a == 0.0 and b == 0.0:
        # fall back to a single-channel estimate through the first and last points
        eta0 = y[0]
        b = max(math.log(y[0] / y[-1]) / (t[-1] - t[0]), 1e-12)
    return np.array([eta0, a, b])


def fit_decay(samples, sigma=None, bootstrap=0, seed=None):
    """Fit ``decay_model`` to ``(t, eta)`` samples.

    ``sigma`` gives per-sample standard deviations (uniform weights if omitted).
    Returns a :class:`DecayFitResult`; degenerate data produce ``success=False``
    with a diagnostic message rather than an exception.
    """
    data = np.asarray(samples, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        return _failed("samples must be a sequence of (t, eta) pairs")
    order = np.argsort(data[:, 0], kind="stable")
    t, y = data[order, 0], data[order, 1]
    if len(t) < 4:
        return _failed(f"need at least 4 samples, got {len(t)}")
    if len(np.unique(t)) != len(t):
        return _failed("sample times must be distinct")
    if not np.all(np.isfinite(y)) or np.any(y <= 0):
        return _failed("efficiencies must be finite and positive")
    if np.all(y == y[0]):
        return _failed("all efficiencies are equal; no decay to fit")
    if y[-1] >= y[0] and np.all(np.diff(y) >= 0):
        return _failed("efficiency does not decrease with storage time")

    if sigma is None:
        s = np.ones_like(y)
        absolute_sigma = False
    else:
        s = np.broadcast_to(np.asarray(sigma, dtype=float), y.shape)[order]
        if np.any(s <= 0):
            return _failed("sigma must be positive")
        absolute_sigma = True
    w = 1.0 / s

    x0 = _initial_guess(t, y)
    x, r, J, n_iter = _gauss_newton(t, y, w, x0)
    eta0, a, b = x
    if not np.all(np.isfinite(x)) or eta0 <= 0 or (a <= 0 and b <= 0):
        return _failed("fit did not converge to a decaying solution")
    tau_sigma, tau_gamma = _from_rates(a, b)
    tau_s = lifetime_1e(tau_sigma, tau_gamma)

    rss = float(r @ r)
    dof = max(len(t) - 3, 1)
    uncertainty = _curvature_uncertainty(J, x, rss, dof, absolute_sigma)
    if bootstrap:
        uncertainty = _bootstrap_uncertainty(t, y, w, x, bootstrap, seed)

    return DecayFitResult(
        eta0=float(eta0),
        tau_sigma=tau_sigma,
        tau_gamma=tau_gamma,
        tau_s=tau_s,
        uncertainty=uncertainty,
        residual_norm=math.sqrt(rss),
        success=True,
        n_iter=n_iter,
    )


def _derived_gradients(x):
    """Gradients of (eta0, tau_sigma, tau_gamma, tau_s) with respect to (eta0, a, b)."""
    eta0, a, b = x
    grads = {"eta0": np.array([1.0, 0.0, 0.0])}
    grads["tau_sigma"] = np.array([0.0, -0.5 * (2 * a) ** -1.5 * 2, 0.0]) if a > 0 else None
    grads["tau_gamma"] = np.array([0.0, 0.0, -1.0 / b**2]) if b > 0 else None
    root = math.sqrt(b * b + 4 * a)
    tau_s = 2.0 / (b + root)
    d_da = -2.0 / (b + root) ** 2 * (2.0 / root)
    d_db = -2.0 / (b + root) ** 2 * (1.0 + b / root)
    grads["tau_s"] = np.array([0.0, d_da, d_db]) if tau_s > 0 else None
    return grads


def _curvature_uncertainty(J, x, rss, dof, absolute_sigma):
    try:
        cov = np.linalg.inv(J.T @ J)
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(J.T @ J)
    if not absolute_sigma:
        cov = cov * (rss / dof)
    out = {}
    for name, g in _derived_gradients(x).items():
        out[name] = math.nan if g is None else float(math.sqrt(max(g @ cov @ g, 0.0)))
    return out


def _bootstrap_uncertainty(t, y, w, x, n_boot, seed):
    rng = np.random.default_rng(seed)
    model = x[0] * np.exp(-x[1] * t * t - x[2] * t)
    scaled_resid = (y - model) * w
    draws = {"eta0": [], "tau_sigma": [], "tau_gamma": [], "tau_s": []}
    for _ in range(n_boot):
        y_b = model + rng.choice(scaled_resid, size=len(t), replace=True) / w
        if np.any(y_b <= 0):
            continue
        xb, *_ = _gauss_newton(t, y_b, w, _initial_guess(t, y_b))
        ts, tg = _from_rates(xb[1], xb[2])
        if xb[1] <= 0 and xb[2] <= 0:
            continue
        draws["eta0"].append(xb[0])
        draws["tau_sigma"].append(ts)
        draws["tau_gamma"].append(tg)
        draws["tau_s"].append(lifetime_1e(ts, tg))
    return {k: float(np.std(v, ddof=1)) if len(v) > 1 else math.nan for k, v in draws.items()}


class HistogramRole(str, Enum):
    REFERENCE = "reference"
    RETRIEVED = "retrieved"
    NOISE = "noise"


@dataclass
class HistogramRecord:
    """Time-binned counts. ``edges`` are in seconds.

    Measured histograms carry integer counts; histograms made from simulated
    waveforms carry expected (non-integer) photon numbers.
    """

    edges: np.ndarray
    counts: np.ndarray
    role: HistogramRole = HistogramRole.REFERENCE

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=float)
        self.counts = np.asarray(self.counts)
        self.role = HistogramRole(self.role)
        if self.edges.ndim != 1 or len(self.edges) < 2:
            raise ValueError("need at least two bin edges")
        if np.any(np.diff(self.edges) <= 0):
            raise ValueError("bin edges must increase monotonically")
        if self.counts.shape != (len(self.edges) - 1,):
            raise ValueError(
                f"counts length {self.counts.shape} does not match {len(self.edges) - 1} bins"
            )
        if np.any(self.counts < 0):
            raise ValueError("counts must be non-negative")

    @classmethod
    def from_waveform(cls, t, intensity, role=HistogramRole.RETRIEVED):
        """Bins centred on uniformly spaced samples of a photon flux (photons/s)."""
        t = np.asarray(t, dtype=float)
        dt = t[1] - t[0]
        edges = np.concatenate([t - 0.5 * dt, [t[-1] + 0.5 * dt]])
        return cls(edges, np.asarray(intensity, dtype=float) * dt, role)

    def scaled(self, factor):
        return HistogramRecord(self.edges, self.counts * factor, self.role)


def window_counts(hist: HistogramRecord, start, stop):
    """Counts inside [start, stop); partial bins weighted by their overlap fraction."""
    if stop <= start:
        raise ValueError("window must have positive length")
    if start < hist.edges[0] - 1e-15 or stop > hist.edges[-1] + 1e-15:
        raise ValueError(
            f"window [{start:.4g}, {stop:.4g}) s lies outside the histogram "
            f"[{hist.edges[0]:.4g}, {hist.edges[-1]:.4g}) s"
        )
    lo = np.maximum(hist.edges[:-1], start)
    hi = np.minimum(hist.edges[1:], stop)
    frac = np.clip((hi - lo) / np.diff(hist.edges), 0.0, 1.0)
    return float(np.sum(frac * hist.counts))


def efficiency_from_histograms(reference, retrieved, window_start, window=6e-9, retrieved_start=None):
    """Ratio of retrieved to reference counts in equal-length integration windows.

    ``window_start`` places the reference window; ``retrieved_start`` places
    the retrieval window (defaults to the same start).
    """
    if retrieved_start is None:
        retrieved_start = window_start
    ref = window_counts(reference, window_start, window_start + window)
    if ref <= 0:
        raise EmptyWindowError(
            f"reference window [{window_start:.4g}, {window_start + window:.4g}) s holds no counts"
        )
    ret = window_counts(retrieved, retrieved_start, retrieved_start + window)
    return ret / ref


def load_histogram(path, role=HistogramRole.REFERENCE, delimiter=None):
    """Read ``time_ns, counts`` rows; each time is the left edge of a uniform bin."""
    path = Path(path)
    data = np.loadtxt(path, delimiter=delimiter, comments="#", ndmin=2)
    if data.shape[1] < 2:
        raise ValueError(f"{path}: expected two columns (time_ns, counts)")
    t = data[:, 0] * 1e-9
    if len(t) < 2:
        raise ValueError(f"{path}: need at least two bins")
    width = np.diff(t)
    if not np.allclose(width, width[0], rtol=1e-6):
        raise ValueError(f"{path}: bins must be uniformly spaced")
    edges = np.concatenate([t, [t[-1] + width[0]]])
    return HistogramRecord(edges, data[:, 1], role)


def end_to_end_efficiency(eta_int, budget: TransmissionBudget, scheme=StorageMode.ON_RES):
    scheme = StorageMode(scheme)
    if not 0 <= eta_int <= 1:
        raise ValueError(f"eta_int must lie in [0, 1], got {eta_int!r}")
    out = eta_int * budget.setup
    if scheme is StorageMode.OFF_RES:
        out *= budget.rb85_penalty
    return out


@dataclass(frozen=True)
class NoiseBudget:
    """Noise photons per retrieved pulse: pump-induced constant plus control-linear term."""

    nu_pump: float = 0.92e-5
    slope_on_res: float = 1.67e-5
    slope_off_res: float = 1.46e-5

    def __post_init__(self):
        for name in ("nu_pump", "slope_on_res", "slope_off_res"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")


def noise_per_pulse(p_control, scheme=StorageMode.ON_RES, budget: NoiseBudget | None = None):
    if p_control < 0:
        raise ValueError("control power must be >= 0")
    budget = budget or NoiseBudget()
    slope = budget.slope_on_res if StorageMode(scheme) is StorageMode.ON_RES else budget.slope_off_res
    return budget.nu_pump + slope * p_control


def mu1_signal_to_noise(eta_e2e, nu):
    """Noise photons per retrieved single input photon."""
    if eta_e2e <= 0:
        raise ZeroDivisionError("end-to-end efficiency must be > 0")
    return nu / eta_e2e
