"""Brunovsky coordinates and the nonlinearity-cancelling outer loop.

With ``z = (p - x1d, v, g_c - (Q/m)(i/p)^2)`` the levitation model reads
``z1' = z2, z2' = z3, z3' = alpha(z) + beta(z) u``. The outer loop
``u = (w - alpha) / beta`` turns it into a chain of three integrators
driven by ``w``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .plant import PlantParams, PlantState, SingularPositionError, P_MIN

BETA_MIN = 1e-3


class LossOfAuthorityError(ValueError):
    """|beta| fell below the guard, i.e. the coil current is (nearly) zero."""


class DomainError(ValueError):
    """z3 at or above g_c has no real coil current behind it."""


@dataclass(frozen=True)
class TransformedState:
    z1: float
    z2: float
    z3: float
    t: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(x) for x in (self.z1, self.z2, self.z3, self.t)):
            raise ValueError("transformed state must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.z1, self.z2, self.z3])

    @classmethod
    def from_array(cls, z, t: float = 0.0) -> "TransformedState":
        return cls(float(z[0]), float(z[1]), float(z[2]), t)


@dataclass(frozen=True)
class BrunovskyModel:
    """Triple integrator ``z' = A z + B w``, ``y = C z``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    @classmethod
    def maglev(cls) -> "BrunovskyModel":
        A = np.diag([1.0, 1.0], k=1)
        B = np.array([[0.0], [0.0], [1.0]])
        C = np.array([[1.0, 0.0, 0.0]])
        return cls(A, B, C)


def _vec(z) -> np.ndarray:
    if isinstance(z, TransformedState):
        return z.as_array()
    return np.asarray(z, dtype=float).ravel()


def to_z(params: PlantParams, x, x1d: Optional[float] = None) -> TransformedState:
    """Map a plant state into Brunovsky coordinates."""
    if isinstance(x, PlantState):
        p, v, i, t = x.p, x.v, x.i, x.t
    else:
        p, v, i = (float(c) for c in np.asarray(x, dtype=float).ravel()[:3])
        t = 0.0
    if not p > 0:
        raise SingularPositionError(f"position must be positive, got {p}")
    xd = params.x1d if x1d is None else x1d
    return TransformedState(p - xd, v, params.g_c - (params.Q / params.m) * (i / p) ** 2, t)


def from_z(params: PlantParams, z, x1d: Optional[float] = None) -> PlantState:
    """Inverse of :func:`to_z` on the positive-current branch."""
    zz = _vec(z)
    xd = params.x1d if x1d is None else x1d
    if zz[2] > params.g_c:
        raise DomainError(f"z3={zz[2]} exceeds g_c={params.g_c}: no real current")
    p = zz[0] + xd
    if not p > 0:
        raise SingularPositionError(f"position must be positive, got {p}")
    i = p * math.sqrt((params.g_c - zz[2]) * params.m / params.Q)
    t = z.t if isinstance(z, TransformedState) else 0.0
    return PlantState(p, float(zz[1]), i, t)


def alpha_beta(params: PlantParams, z, x1d: Optional[float] = None, p_min: float = P_MIN) -> tuple[float, float]:
    """Drift ``alpha`` and input gain ``beta`` of ``z3' = alpha + beta u``.

    Uses the position-dependent inductance ``L(p) = L1 + 2Q/p`` both in
    the ``R/L`` term and in the ``L p`` denominator of ``beta``.
    """
    z1, z2, z3 = _vec(z)
    xd = params.x1d if x1d is None else x1d
    if z3 > params.g_c:
        raise DomainError(f"z3={z3} exceeds g_c={params.g_c}")
    p = z1 + xd
    if p < p_min:
        raise SingularPositionError(f"position {p:.3g} m below guard {p_min:g} m")
    L = params.inductance(p)
    force = params.g_c - z3
    alpha = 2.0 * force * ((1.0 - 2.0 * params.Q / (L * p)) * z2 / p + params.R / L)
    beta = -(2.0 / (L * p)) * math.sqrt((params.Q / params.m) * force)
    return float(alpha), float(beta)


def outer_loop_u(params: PlantParams, z, w: float, x1d: Optional[float] = None,
                 beta_min: float = BETA_MIN) -> float:
    """Coil voltage ``u = (w - alpha) / beta`` that realizes ``z3' = w``."""
    alpha, beta = alpha_beta(params, z, x1d)
    if abs(beta) < beta_min:
        raise LossOfAuthorityError(f"|beta|={abs(beta):.3g} below {beta_min:g}")
    return (-alpha + w) / beta


def fl_baseline_w(K, z) -> float:
    """Plain feedback-linearization inner loop ``w = K z``."""
    return float(np.asarray(K, dtype=float).ravel() @ _vec(z))
