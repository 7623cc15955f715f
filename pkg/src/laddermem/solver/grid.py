"""Velocity-class quadratures over the 1-D Maxwellian."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["VelocityGrid", "auto_node_count"]


@dataclass(frozen=True)
class VelocityGrid:
    velocities: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.velocities, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if v.shape != w.shape or v.ndim != 1 or len(v) == 0:
            raise ValueError("velocities and weights must be 1-D arrays of equal length")
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        if not math.isclose(w.sum(), 1.0, rel_tol=0, abs_tol=1e-12):
            raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
        object.__setattr__(self, "velocities", v)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return len(self.velocities)

    @property
    def nodes(self):
        return list(zip(self.velocities.tolist(), self.weights.tolist()))

    @property
    def is_symmetric(self):
        v, w = self.velocities, self.weights
        return bool(np.allclose(v, -v[::-1], atol=1e-9) and np.allclose(w, w[::-1], rtol=1e-12, atol=0))

    @classmethod
    def uniform(cls, sigma_v, n, span=4.0):
        """Equally spaced nodes on [-span sigma, span sigma] with Maxwellian weights.

        Equal spacing pushes the spurious rephasing of the optical coherence
        (the discrete-sum revival) out to t = 2 pi / (k dv).
        """
        if n == 1 or sigma_v == 0:
            return cls(np.zeros(1), np.ones(1))
        v = np.linspace(-span * sigma_v, span * sigma_v, n)
        w = np.exp(-0.5 * (v / sigma_v) ** 2)
        return cls(v, w / w.sum())

    @classmethod
    def gauss_hermite(cls, sigma_v, n):
        x, w = np.polynomial.hermite_e.hermegauss(n)
        w = w / w.sum()
        # symmetrise to remove round-off asymmetry of the node computation
        x = 0.5 * (x - x[::-1])
        w = 0.5 * (w + w[::-1])
        return cls(sigma_v * x, w / w.sum())

    @classmethod
    def two_class(cls, v):
        return cls(np.array([-abs(v), abs(v)]), np.array([0.5, 0.5]))


def auto_node_count(sigma_v, wavelength, duration, span=4.0, revival_margin=1.25, min_revival=0.0):
    """Odd node count for a uniform grid.

    The optical revival time of the grid, wavelength / dv, is made to exceed
    both ``revival_margin * duration`` and ``min_revival``. The latter should be
    several optical coherence lifetimes: a revival arriving earlier carries
    aliased polarization back into the field.
    """
    if sigma_v == 0:
        return 1
    dv = wavelength / max(revival_margin * duration, min_revival)
    half = math.ceil(span * sigma_v / dv)
    return 2 * half + 1
