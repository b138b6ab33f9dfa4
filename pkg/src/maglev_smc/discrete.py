"""Sampled-data models of the Brunovsky chain and sampled disturbances."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import numerics
from .linearization import BrunovskyModel, alpha_beta
from .plant import DisturbanceSpec, PlantParams

FD_STEP = 1e-6


@dataclass(frozen=True)
class DiscreteLTI:
    """``z(k+1) = Phi z(k) + Gamma w(k) + D d(k)``, ``y(k) = C z(k)``."""

    Phi: np.ndarray
    Gamma: np.ndarray
    C: np.ndarray
    D: np.ndarray
    tau: float

    def __post_init__(self):
        n = self.Phi.shape[0]
        if self.Phi.shape != (n, n):
            raise ValueError("Phi must be square")
        if self.Gamma.shape[0] != n or self.D.shape[0] != n or self.C.shape[1] != n:
            raise ValueError("inconsistent DiscreteLTI dimensions")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        for name in ("Phi", "Gamma", "C", "D"):
            getattr(self, name).setflags(write=False)

    @property
    def n(self) -> int:
        return self.Phi.shape[0]

    @property
    def gamma(self) -> np.ndarray:
        """Single-input ``Gamma`` as a flat vector."""
        return self.Gamma[:, 0]

    def step(self, z, w: float, d: float = 0.0) -> np.ndarray:
        z = np.asarray(z, dtype=float).ravel()
        return self.Phi @ z + self.Gamma[:, 0] * w + self.D[:, 0] * d

    def with_disturbance(self, D) -> "DiscreteLTI":
        return DiscreteLTI(self.Phi, self.Gamma, self.C, numerics.as_matrix(D, "D"), self.tau)


def discretize(model: BrunovskyModel, tau: float, D=None) -> DiscreteLTI:
    """Zero-order-hold discretization at interval ``tau``.

    ``D`` defaults to ``Gamma`` (disturbance matched with the input).
    """
    Phi, Gamma = numerics.expm_zoh(model.A, model.B, tau)
    Dm = Gamma.copy() if D is None else numerics.as_matrix(D, "D")
    return DiscreteLTI(Phi, Gamma, numerics.as_matrix(model.C, "C"), Dm, float(tau))


def disturbance_input_matrix(model: BrunovskyModel, tau: float, E) -> np.ndarray:
    """``D`` for a disturbance held over ``tau`` entering ``z' = ... + E d``."""
    _, D = numerics.expm_zoh(model.A, numerics.as_matrix(E, "E"), tau)
    return D


def mean_spread(lower: float, upper: float) -> tuple[float, float]:
    """Midpoint and half-range of the interval ``[lower, upper]``."""
    if lower > upper:
        raise ValueError(f"inverted bounds ({lower}, {upper})")
    return 0.5 * (lower + upper), 0.5 * (upper - lower)


def _theta(params: PlantParams, z, u: float, x1d) -> float:
    alpha, beta = alpha_beta(params, z, x1d)
    return alpha + beta * u


def taylor_discrete_step(params: PlantParams, z, u: float, tau: float, x1d: Optional[float] = None,
                         h: float = FD_STEP) -> np.ndarray:
    """Second-order Taylor step of the nonlinear chain under a held voltage.

    ``theta = alpha + beta u`` is the third derivative of the position; the
    ``kappa * theta`` term is its time derivative along the flow
    ``(z2, z3, theta)``, taken by central differences of step ``h``.
    Intended for model validation only.
    """
    z = np.asarray(z, dtype=float).ravel()
    if not tau > 0:
        raise ValueError("tau must be positive")
    th = _theta(params, z, u, x1d)
    flow = np.array([z[1], z[2], th])
    grad = np.empty(3)
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        grad[j] = (_theta(params, z + e, u, x1d) - _theta(params, z - e, u, x1d)) / (2 * h)
    dth = float(grad @ flow)
    return np.array([
        z[0] + tau * z[1] + 0.5 * tau**2 * z[2],
        z[1] + tau * z[2] + 0.5 * tau**2 * th,
        z[2] + tau * th + 0.5 * tau**2 * dth,
    ])


_SAMPLED_KINDS = ("none", "constant", "sinusoid", "uniform", "samples")


@dataclass(frozen=True)
class SampledDisturbance:
    """Scalar disturbance sequence ``d(k)`` at the control interval.

    Parameters
    ----------
    kind : str
        ``"none"``, ``"constant"``, ``"sinusoid"`` (``amplitude *
        sin(2 pi f k tau)``), ``"uniform"`` (seeded draws in the declared
        bounds) or ``"samples"`` (explicit sequence).
    lower, upper : float, optional
        Declared bounds; derived from the signal when omitted.
    """

    kind: str = "none"
    amplitude: float = 1.0
    frequency: float = 1.0
    tau: float = 0.1
    lower: Optional[float] = None
    upper: Optional[float] = None
    seed: int = 0
    samples: Optional[np.ndarray] = None
    length: int = 100_000

    def __post_init__(self):
        if self.kind not in _SAMPLED_KINDS:
            raise ValueError(f"unknown disturbance kind {self.kind!r}")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        lo, hi = self._natural_bounds()
        if self.lower is None:
            object.__setattr__(self, "lower", lo)
        if self.upper is None:
            object.__setattr__(self, "upper", hi)
        if self.lower > self.upper:
            raise ValueError("inverted disturbance bounds")
        if self.kind == "uniform":
            rng = np.random.default_rng(self.seed)
            object.__setattr__(self, "samples", rng.uniform(self.lower, self.upper, self.length))
        elif self.kind == "samples":
            arr = np.asarray(self.samples, dtype=float).ravel()
            if arr.size == 0 or not np.all(np.isfinite(arr)):
                raise ValueError("samples must be a finite non-empty sequence")
            object.__setattr__(self, "samples", arr)
        if self.kind in ("samples", "uniform"):
            if self.samples.min() < self.lower or self.samples.max() > self.upper:
                raise ValueError("samples fall outside the declared bounds")
        elif self.kind != "none" and (lo < self.lower or hi > self.upper):
            raise ValueError("declared bounds do not contain the signal")

    def _natural_bounds(self) -> tuple[float, float]:
        a = float(self.amplitude)
        if self.kind == "none":
            return 0.0, 0.0
        if self.kind == "constant":
            return min(a, 0.0), max(a, 0.0)
        if self.kind == "sinusoid":
            return -abs(a), abs(a)
        if self.kind == "uniform":
            if self.lower is None or self.upper is None:
                raise ValueError("uniform disturbance needs explicit bounds")
            return self.lower, self.upper
        arr = np.asarray(self.samples, dtype=float).ravel()
        return float(arr.min()), float(arr.max())

    @property
    def bounds(self) -> tuple[float, float]:
        return self.lower, self.upper

    def mean_spread(self) -> tuple[float, float]:
        return mean_spread(self.lower, self.upper)

    def value(self, k: int) -> float:
        if self.kind == "none":
            return 0.0
        if self.kind == "constant":
            return float(self.amplitude)
        if self.kind == "sinusoid":
            return float(self.amplitude * math.sin(2.0 * math.pi * self.frequency * k * self.tau))
        return float(self.samples[min(k, self.samples.size - 1)])

    def sequence(self, n: int) -> np.ndarray:
        k = np.arange(n)
        if self.kind == "none":
            return np.zeros(n)
        if self.kind == "constant":
            return np.full(n, float(self.amplitude))
        if self.kind == "sinusoid":
            return self.amplitude * np.sin(2.0 * np.pi * self.frequency * k * self.tau)
        return self.samples[np.minimum(k, self.samples.size - 1)]

    def to_spec(self, channel=(0.0, 0.0, 1.0)) -> DisturbanceSpec:
        """Continuous-time disturbance for the plant integrator.

        The scalar is held over each ``tau`` and enters the Brunovsky
        derivative along ``channel``.
        """
        E = tuple(float(c) for c in channel)
        if self.kind == "none":
            return DisturbanceSpec()
        if self.kind == "constant":
            return DisturbanceSpec("constant", tuple(self.amplitude * e for e in E), frame="z")
        if self.kind == "sinusoid":
            return DisturbanceSpec("sinusoid", tuple(self.amplitude * e for e in E), self.frequency,
                                   frame="z", hold=self.tau)
        return DisturbanceSpec("samples", E, frame="z", samples=self.samples, sample_dt=self.tau)
