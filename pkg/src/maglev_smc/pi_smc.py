"""Proportional-integral sliding-mode control of the Brunovsky chain.

Surface ``s = M^T z - int M^T (A + B K) z dt`` and inner law
``w = K z - (k4 s + k5 sgn s + k0 |s|^a sgn s) / m3``, composed with the
outer loop to give the coil voltage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import numerics
from .linearization import BrunovskyModel, alpha_beta, to_z, BETA_MIN, LossOfAuthorityError
from .plant import PlantParams, ZeroOrderHold

DEFAULT_POLES = (-30.0, -40.0, -50.0)
DEFAULT_M = (1200.0, 70.0, 1.0)
REACH_TOL = 1e-4


def sgn(x: float) -> float:
    """Sign with ``sgn(0) = 0``."""
    return float(np.sign(x))


@dataclass(frozen=True)
class PiSmcGains:
    """Gains of the PI sliding-mode law.

    Parameters
    ----------
    K : (1, 3) array
        Pole-placement row, ``A + B K`` Hurwitz.
    M : (3,) array
        Surface weights ``(m1, m2, m3)``.
    k4, k5, k0, alpha_pow : float
        Proportional, switching and power-rate reaching gains and the
        power-rate exponent.
    eta : float
        Robustness margin in the switching-gain condition.
    """

    K: np.ndarray
    M: np.ndarray
    k4: float = 0.1
    k5: float = 5.0
    k0: float = 6.0
    alpha_pow: float = 0.5
    eta: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "K", np.asarray(self.K, dtype=float).reshape(1, 3))
        object.__setattr__(self, "M", np.asarray(self.M, dtype=float).ravel())
        if self.M.shape != (3,):
            raise ValueError("M must have three entries")
        if self.M[2] == 0:
            raise ValueError("m3 must be non-zero")

    @classmethod
    def default(cls, poles=DEFAULT_POLES, M=DEFAULT_M, **kw) -> "PiSmcGains":
        model = BrunovskyModel.maglev()
        K = numerics.place_poles(model.A, model.B, poles).K
        return cls(K=K, M=np.asarray(M, dtype=float), **kw)

    @property
    def k(self) -> np.ndarray:
        return self.K.ravel()

    def integrand_row(self) -> np.ndarray:
        """``M^T (A + B K)``, the row integrated inside the surface."""
        model = BrunovskyModel.maglev()
        return self.M @ (model.A + model.B @ self.K)

    def fl_baseline(self) -> "PiSmcGains":
        """Same pole placement with every reaching gain switched off."""
        return PiSmcGains(self.K, self.M, 0.0, 0.0, 0.0, self.alpha_pow, self.eta)


@dataclass
class PiSmcState:
    """Running integral of ``M^T (A + B K) z`` and the last surface value."""

    accumulator: float = 0.0
    s: float = 0.0
    _last_t: Optional[float] = None
    _last_g: float = 0.0

    def reset(self):
        self.accumulator = 0.0
        self.s = 0.0
        self._last_t = None
        self._last_g = 0.0

    def advance(self, t: float, integrand: float):
        """Trapezoidal update of the accumulator up to time ``t``."""
        if self._last_t is not None:
            self.accumulator += 0.5 * (t - self._last_t) * (self._last_g + integrand)
        self._last_t = t
        self._last_g = integrand
        if not math.isfinite(self.accumulator):
            raise ValueError("surface accumulator became non-finite")


def surface(gains: PiSmcGains, state: PiSmcState, z) -> float:
    """``s = M^T z`` minus the accumulated integral."""
    return float(gains.M @ np.asarray(z, dtype=float).ravel() - state.accumulator)


def control_w(gains: PiSmcGains, s: float, z) -> float:
    """Inner-loop command for surface value ``s`` at state ``z``."""
    z = np.asarray(z, dtype=float).ravel()
    sg = sgn(s)
    reach = gains.k4 * s + gains.k5 * sg + gains.k0 * abs(s) ** gains.alpha_pow * sg
    return float(gains.k @ z - reach / gains.M[2])


@dataclass(frozen=True)
class GainCheck:
    name: str
    passed: bool
    margin: float
    detail: str = ""


@dataclass(frozen=True)
class GainReport:
    checks: tuple

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list:
        return [c.name for c in self.checks if not c.passed]

    def __str__(self):
        lines = []
        for c in self.checks:
            lines.append(f"{'ok ' if c.passed else 'BAD'} {c.name}: margin {c.margin:.4g} {c.detail}".rstrip())
        return "\n".join(lines)


def validate_gains(gains: PiSmcGains, bounds=(0.0, 0.0, 0.0)) -> GainReport:
    """Check the stability conditions on the PI-SMC gains.

    The switching-gain condition is ``k5 >= m1 D1 + m2 D2 + m3 D3 + eta``.
    The sliding polynomial is ``m3 s^2 + m2 s + m1``.
    """
    D = np.asarray(bounds, dtype=float).ravel()
    if D.shape != (3,) or np.any(D < 0):
        raise ValueError("bounds must be three non-negative numbers")
    model = BrunovskyModel.maglev()
    checks = []
    for name in ("k4", "k5", "k0"):
        val = getattr(gains, name)
        checks.append(GainCheck(f"{name} > 0", val > 0, val))
    a = gains.alpha_pow
    checks.append(GainCheck("0 < alpha_pow < 1", 0 < a < 1, min(a, 1 - a)))
    checks.append(GainCheck("m3 != 0", gains.M[2] != 0, abs(gains.M[2])))
    ev = numerics.eigenvalues(model.A + model.B @ gains.K)
    worst = max(e.real for e in ev)
    checks.append(GainCheck("A+BK Hurwitz", worst < -numerics.HURWITZ_TOL, -worst))
    roots = np.roots([gains.M[2], gains.M[1], gains.M[0]])
    worst = max(r.real for r in roots)
    checks.append(GainCheck("sliding polynomial Hurwitz", worst < 0, -worst,
                            f"roots {np.round(roots, 6).tolist()}"))
    need = float(np.abs(gains.M) @ D + gains.eta)
    checks.append(GainCheck("k5 >= M.D + eta", gains.k5 >= need, gains.k5 - need,
                            f"needs {need:.4g}"))
    return GainReport(tuple(checks))


def constant_reference(x1d: float) -> Callable[[float], float]:
    return lambda t: x1d


def square_reference(center: float = 0.01, amplitude: float = 0.005, frequency: float = 1.0):
    """Square wave about ``center`` that starts on the high level."""
    def ref(t):
        phase = (t * frequency) % 1.0
        return center + (amplitude if phase < 0.5 else -amplitude)
    return ref


def sine_reference(center: float = 0.01, amplitude: float = 0.005, frequency: float = 1.0):
    def ref(t):
        return center + amplitude * math.sin(2.0 * math.pi * frequency * t)
    return ref


@dataclass
class PiSmcController:
    """Sampled PI-SMC for :func:`maglev_smc.plant.integrate`.

    Called once per ``period`` (normally the integration step); returns
    the inner command ``w`` which the integrator pushes through the outer
    loop at every stage. A time-varying ``reference`` re-evaluates the
    coordinate change with the instantaneous setpoint.
    """

    params: PlantParams
    gains: PiSmcGains
    period: float = 1e-4
    reference: Callable[[float], float] = None
    beta_min: float = BETA_MIN
    state: PiSmcState = field(default_factory=PiSmcState)
    events: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.reference is None:
            self.reference = constant_reference(self.params.x1d)
        self._row = self.gains.integrand_row()
        self.last_s = math.nan
        self.last_s_tilde = math.nan

    @property
    def hold(self) -> ZeroOrderHold:
        return ZeroOrderHold(self.period, "linearized")

    def reset(self):
        self.state.reset()
        self.events = {}
        self.last_s = math.nan

    def __call__(self, t: float, x) -> float:
        xd = self.reference(t)
        z = to_z(self.params, x, xd).as_array()
        self.state.advance(t, float(self._row @ z))
        s = surface(self.gains, self.state, z)
        self.state.s = s
        # a sign change means the continuous surface crossed zero between samples
        crossed = self.last_s * s <= 0.0
        self.last_s = s
        if "reach_time" not in self.events and (abs(s) < REACH_TOL or crossed):
            self.events["reach_time"] = t
        _, beta = alpha_beta(self.params, z, xd)
        if abs(beta) < self.beta_min:
            raise LossOfAuthorityError(f"|beta|={abs(beta):.3g} below {self.beta_min:g}")
        return control_w(self.gains, s, z)


def fl_controller(params: PlantParams, gains: Optional[PiSmcGains] = None, period: float = 1e-4,
                  reference=None) -> PiSmcController:
    """Feedback-linearization baseline ``w = K z`` in the same wrapper."""
    gains = (gains or PiSmcGains.default()).fl_baseline()
    return PiSmcController(params, gains, period, reference)
