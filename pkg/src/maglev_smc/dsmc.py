"""State-feedback discrete-time sliding-mode control.

Reaching law ``s(k+1) - s(k) = -q tau s - eps tau sgn s + d~ - d_m - d_s sgn s``
on the surface ``s = M^T z``, and the two surface-stability tests.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import numerics
from .discrete import DiscreteLTI, discretize
from .linearization import BETA_MIN, BrunovskyModel, LossOfAuthorityError, alpha_beta, to_z
from .pi_smc import sgn
from .plant import PlantParams, ZeroOrderHold


class ConstraintWarning(UserWarning):
    """A design inequality fails but the run is allowed to proceed."""


@dataclass(frozen=True)
class DsmcGains:
    M: np.ndarray
    q: float = 0.4
    eps: float = 0.3
    tau: float = 0.1
    d_m: float = 0.002
    d_s: float = 0.003

    def __post_init__(self):
        object.__setattr__(self, "M", np.asarray(self.M, dtype=float).ravel())
        if self.M.shape != (3,):
            raise ValueError("M must have three entries")
        if not self.q > 0:
            raise ValueError("q must be positive")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not 1.0 - self.q * self.tau > 0:
            raise ValueError("1 - q*tau must be positive")
        if self.d_s < 0:
            raise ValueError("d_s must be non-negative")

    @classmethod
    def default(cls) -> "DsmcGains":
        return cls(M=np.array([60000.0, 4700.0, 120.0]))

    def scaled(self, c: float) -> "DsmcGains":
        """Same law with ``M`` and every offset term multiplied by ``c > 0``."""
        if not c > 0:
            raise ValueError("scale must be positive")
        return DsmcGains(c * self.M, self.q, c * self.eps, self.tau, c * self.d_m, c * self.d_s)


def _mg(gains: DsmcGains, sys: DiscreteLTI) -> float:
    mg = float(gains.M @ sys.gamma)
    if abs(mg) < 1e-14 * max(1.0, float(np.abs(gains.M).max())):
        raise ValueError("M^T Gamma is singular")
    return mg


def control(gains: DsmcGains, sys: DiscreteLTI, z) -> float:
    """Control ``w(k)`` solving the reaching law for the nominal model."""
    z = np.asarray(z, dtype=float).ravel()
    mg = _mg(gains, sys)
    M = gains.M
    s = float(M @ z)
    row = M @ sys.Phi - M + gains.q * gains.tau * M
    return -(float(row @ z) + gains.d_m + (gains.d_s + gains.eps * gains.tau) * sgn(s)) / mg


@dataclass(frozen=True)
class QsmBound:
    xi: float
    constraint_lhs: float
    constraint_rhs: float

    @property
    def constraint_ok(self) -> bool:
        return self.constraint_lhs > self.constraint_rhs

    def messages(self) -> list[str]:
        if self.constraint_ok:
            return []
        return [f"parameter constraint q*tau^2*eps/(2(1-q*tau)) = {self.constraint_lhs:.4g} "
                f"does not exceed d_s = {self.constraint_rhs:.4g}"]


def qsm_band_bound(gains: DsmcGains, warn: bool = True) -> QsmBound:
    """Band ``xi = 2 d_s + eps tau`` and the accompanying parameter constraint."""
    qt = gains.q * gains.tau
    lhs = qt * gains.tau * gains.eps / (2.0 * (1.0 - qt))
    out = QsmBound(2.0 * gains.d_s + gains.eps * gains.tau, lhs, gains.d_s)
    if warn:
        for msg in out.messages():
            warnings.warn(msg, ConstraintWarning, stacklevel=2)
    return out


@dataclass(frozen=True)
class SurfaceReport:
    matrix: np.ndarray
    eigenvalues: list
    nontrivial: list
    stable: bool


def _split_trivial(ev: list, tol: float = 1e-9) -> list:
    """Drop the single projection eigenvalue closest to zero."""
    idx = int(np.argmin([abs(e) for e in ev]))
    if abs(ev[idx]) > tol:
        raise ValueError("projected matrix has no zero eigenvalue")
    return [e for j, e in enumerate(ev) if j != idx]


def design_surface_projected(sys: DiscreteLTI, M) -> SurfaceReport:
    """Spectrum of ``(I - Gamma (M^T Gamma)^-1 M^T) Phi`` (ideal QSM dynamics)."""
    M = np.asarray(M, dtype=float).ravel()
    g = sys.gamma
    mg = float(M @ g)
    if abs(mg) < 1e-14 * max(1.0, float(np.abs(M).max())):
        raise ValueError("M^T Gamma is singular")
    P = (np.eye(sys.n) - np.outer(g, M) / mg) @ sys.Phi
    ev = numerics.eigenvalues(P)
    nontriv = _split_trivial(ev)
    stable = all(abs(e) < 1.0 - numerics.SCHUR_TOL for e in nontriv)
    return SurfaceReport(P, ev, nontriv, stable)


@dataclass(frozen=True)
class RegularFormDecomposition:
    Omega: np.ndarray
    Phi_tilde: np.ndarray
    M11: np.ndarray
    M12: float
    Psi: np.ndarray
    L_M: np.ndarray
    eigenvalues: list
    stable: bool

    @property
    def Phi11(self):
        return self.Phi_tilde[:2, :2]

    @property
    def Phi12(self):
        return self.Phi_tilde[:2, 2:]

    @property
    def Phi21(self):
        return self.Phi_tilde[2:, :2]

    @property
    def Phi22(self):
        return self.Phi_tilde[2:, 2:]


def regular_form_basis(gamma) -> np.ndarray:
    """``Omega`` with ``Omega^-1 gamma = e3``.

    The first two columns are Gram-Schmidt completions orthogonal to
    ``gamma``; the last column is ``gamma`` itself.
    """
    g = np.asarray(gamma, dtype=float).ravel()
    if not np.linalg.norm(g) > 0:
        raise ValueError("Gamma is zero")
    basis = [g / np.linalg.norm(g)]
    for e in np.eye(len(g)):
        v = e - sum((b @ e) * b for b in basis)
        nv = np.linalg.norm(v)
        if nv > 1e-8:
            basis.append(v / nv)
        if len(basis) == len(g):
            break
    if len(basis) < len(g):
        raise ValueError("could not complete Gamma to a basis")
    return np.column_stack(basis[1:] + [g])


def design_surface_regular_form(sys: DiscreteLTI, M) -> RegularFormDecomposition:
    """Normal-form partition and the reduced sliding dynamics."""
    M = np.asarray(M, dtype=float).ravel()
    Omega = regular_form_basis(sys.gamma)
    if np.linalg.matrix_rank(Omega) < sys.n:
        raise ValueError("Omega is singular")
    Pt = np.linalg.solve(Omega, sys.Phi @ Omega)
    Mt = M @ Omega
    M11, M12 = Mt[:2].reshape(1, 2), float(Mt[2])
    if abs(M12) < 1e-14 * max(1.0, float(np.abs(M).max())):
        raise ValueError("M12 is zero; surface has no input authority")
    P11, P12, P21, P22 = Pt[:2, :2], Pt[:2, 2:], Pt[2:, :2], Pt[2:, 2:]
    psi11 = P11 - P12 @ M11 / M12
    psi12 = P12 / M12
    psi21 = M11 @ P11 + M12 * P21 - (M11 @ P12 + M12 * P22) @ M11 / M12
    psi22 = (M11 @ P12 + M12 * P22) / M12
    Psi = np.block([[psi11, psi12], [psi21, psi22]])
    L_M = np.block([[np.eye(2), np.zeros((2, 1))], [M11, np.array([[M12]])]])
    ev = numerics.eigenvalues(psi11)
    stable = all(abs(e) < 1.0 - numerics.SCHUR_TOL for e in ev)
    return RegularFormDecomposition(Omega, Pt, M11.ravel(), M12, Psi, L_M, ev, stable)


@dataclass
class DsmcController:
    """Sampled DSMC for :func:`maglev_smc.plant.integrate`.

    Runs every ``gains.tau`` on the exact state and returns ``w``, which is
    held while the outer loop keeps cancelling the nonlinearity.
    """

    params: PlantParams
    gains: DsmcGains
    sys: DiscreteLTI = None
    beta_min: float = BETA_MIN
    events: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.sys is None:
            self.sys = discretize(BrunovskyModel.maglev(), self.gains.tau)
        if abs(self.sys.tau - self.gains.tau) > 1e-12:
            raise ValueError("model interval differs from the gains' tau")
        self.bound = qsm_band_bound(self.gains, warn=False)
        self.last_s = math.nan
        self.last_s_tilde = math.nan
        self.reference = lambda t: self.params.x1d

    @property
    def hold(self) -> ZeroOrderHold:
        return ZeroOrderHold(self.gains.tau, "linearized")

    def reset(self):
        self.events = {}
        self.last_s = math.nan

    def __call__(self, t: float, x) -> float:
        z = to_z(self.params, x).as_array()
        _, beta = alpha_beta(self.params, z)
        if abs(beta) < self.beta_min:
            raise LossOfAuthorityError(f"|beta|={abs(beta):.3g} below {self.beta_min:g}")
        s = float(self.gains.M @ z)
        self.last_s = s
        if "reach_time" not in self.events and abs(s) <= self.bound.xi:
            self.events["reach_time"] = t
        return control(self.gains, self.sys, z)
