"""Multirate-output-feedback discrete-time sliding-mode control.

The position is sampled every ``rho = tau / N``; the last ``N`` samples
and the previous input reconstruct the state exactly on the linear model,
so the reaching-law controller needs no observer.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .discrete import DiscreteLTI, discretize, disturbance_input_matrix, mean_spread
from .dsmc import ConstraintWarning
from .linearization import BETA_MIN, BrunovskyModel, LossOfAuthorityError, alpha_beta, to_z
from .pi_smc import sgn
from .plant import PlantParams, ZeroOrderHold, equilibrium_voltage


@dataclass(frozen=True)
class MrofConfig:
    """Design parameters of the multirate controller.

    Parameters
    ----------
    tau, rho, N : float, float, int
        Input interval, output interval and their ratio.
    q, eps : float
        Reaching-law gains.
    M : (3,) array
        Surface weights.
    d_bounds, r_bounds, n_bounds : (lower, upper)
        Bounds on the matched disturbance, the mismatched term and the
        reconstruction uncertainty ``n = L_d d``.
    channel : (3,) array
        Brunovsky channels the physical disturbance enters; ``n_bounds``
        apply to each channel it touches.
    length_unit : float
        Metres per controller length unit. The design works on ``z`` and
        ``w`` expressed in this unit (``1e-3``: millimetres).
    """

    tau: float = 0.06
    rho: float = 0.02
    N: int = 3
    q: float = 3.0
    eps: float = 1.0
    M: np.ndarray = field(default_factory=lambda: np.array([0.66, 1.0, 0.12]))
    d_bounds: tuple = (-0.008, 0.014)
    r_bounds: tuple = (-0.002, 0.013)
    n_bounds: tuple = (-0.009, 0.015)
    channel: tuple = (0.0, 0.0, 1.0)
    length_unit: float = 1e-3

    def __post_init__(self):
        object.__setattr__(self, "M", np.asarray(self.M, dtype=float).ravel())
        if self.M.shape != (3,):
            raise ValueError("M must have three entries")
        if int(self.N) != self.N or self.N < 3:
            raise ValueError("N must be an integer no smaller than the observability index 3")
        object.__setattr__(self, "N", int(self.N))
        if not (self.tau > 0 and self.rho > 0):
            raise ValueError("tau and rho must be positive")
        if abs(self.N * self.rho - self.tau) > 1e-12 * max(1.0, self.tau):
            raise ValueError(f"tau={self.tau} is not N*rho={self.N * self.rho}")
        if not self.q > 0 or not self.eps >= 0:
            raise ValueError("q must be positive and eps non-negative")
        if not 1.0 - self.q * self.tau > 0:
            raise ValueError("1 - q*tau must be positive")
        for name in ("d_bounds", "r_bounds", "n_bounds"):
            lo, hi = getattr(self, name)
            mean_spread(lo, hi)
        if not self.length_unit > 0:
            raise ValueError("length_unit must be positive")
        object.__setattr__(self, "channel", tuple(float(c) for c in self.channel))

    @property
    def d_ms(self):
        return mean_spread(*self.d_bounds)

    @property
    def r_ms(self):
        return mean_spread(*self.r_bounds)

    @property
    def n_ms(self):
        return mean_spread(*self.n_bounds)

    @property
    def n_mask(self) -> np.ndarray:
        return (np.abs(np.asarray(self.channel)) > 0).astype(float)

    def n_mean_vector(self) -> np.ndarray:
        return self.n_ms[0] * self.n_mask


@dataclass(frozen=True)
class MrofGains:
    C0: np.ndarray
    D0: np.ndarray
    Dy: np.ndarray
    Lw: np.ndarray
    Ly: np.ndarray
    Ld: np.ndarray
    Fy: np.ndarray
    Fw: float
    Gm: float
    Gs: float
    MG: float
    M: np.ndarray
    Mn_m: float


def fast_stack(sys_rho: DiscreteLTI, N: int):
    """``C0``, ``D0`` and ``Dy`` of the lifted output equation."""
    C = sys_rho.C
    Phi = sys_rho.Phi
    n = sys_rho.n
    C0, D0, Dy = [], [], []
    acc = np.zeros((n, n))  # sum_{i<j} Phi^i
    Pj = np.eye(n)
    for j in range(N):
        C0.append(C @ Pj)
        D0.append(C @ acc @ sys_rho.Gamma)
        Dy.append(C @ acc @ sys_rho.D)
        acc = acc + Pj
        Pj = Pj @ Phi
    return np.vstack(C0), np.vstack(D0), np.vstack(Dy)


def build_gains(cfg: MrofConfig, sys_tau: DiscreteLTI, sys_rho: DiscreteLTI) -> MrofGains:
    """Reconstruction matrices and the reaching-law gains."""
    if abs(sys_tau.tau - cfg.tau) > 1e-12 or abs(sys_rho.tau - cfg.rho) > 1e-12:
        raise ValueError("model intervals do not match the configuration")
    C0, D0, Dy = fast_stack(sys_rho, cfg.N)
    n = sys_tau.n
    if np.linalg.matrix_rank(C0) < n:
        raise ValueError("C0 is rank deficient; N below the observability index")
    pinv = np.linalg.solve(C0.T @ C0, C0.T)
    Phi = sys_tau.Phi
    Lw = sys_tau.Gamma - Phi @ pinv @ D0
    Ly = Phi @ pinv
    Ld = sys_tau.D - Phi @ pinv @ Dy
    M = cfg.M
    MG = float(M @ sys_tau.gamma)
    if abs(MG) < 1e-14:
        raise ValueError("M^T Gamma is singular")
    S = M @ Phi - M + cfg.q * cfg.tau * M
    d_m, d_s = cfg.d_ms
    r_m, r_s = cfg.r_ms
    return MrofGains(
        C0=C0, D0=D0, Dy=Dy, Lw=Lw, Ly=Ly, Ld=Ld,
        Fy=-(S @ Ly) / MG, Fw=float(-(S @ Lw[:, 0]) / MG),
        Gm=(d_m + r_m) / MG, Gs=(d_s + r_s + cfg.eps * cfg.tau) / MG,
        MG=MG, M=M.copy(), Mn_m=float(M @ cfg.n_mean_vector()),
    )


def design(cfg: MrofConfig) -> tuple[MrofGains, DiscreteLTI, DiscreteLTI]:
    """Discretize the chain at both rates and build the gains."""
    model = BrunovskyModel.maglev()
    E = np.asarray(cfg.channel, dtype=float).reshape(3, 1)
    sys_tau = discretize(model, cfg.tau, disturbance_input_matrix(model, cfg.tau, E))
    sys_rho = discretize(model, cfg.rho, disturbance_input_matrix(model, cfg.rho, E))
    return build_gains(cfg, sys_tau, sys_rho), sys_tau, sys_rho


class StackNotFullError(RuntimeError):
    pass


@dataclass
class OutputStack:
    """The last ``N`` fast-rate outputs and the previous input.

    ``y`` holds ``y((k-1) tau + j rho)`` for ``j = 0..N-1``; ``times``
    records their sample instants so the delay structure can be audited.
    """

    N: int
    y: np.ndarray = None
    times: np.ndarray = None
    w_prev: float = 0.0
    k: int = 0
    _pending: list = field(default_factory=list)
    _pending_t: list = field(default_factory=list)

    def __post_init__(self):
        self.y = np.full(self.N, np.nan)
        self.times = np.full(self.N, np.nan)

    @property
    def full(self) -> bool:
        return self.k >= 1

    def push(self, t: float, y: float):
        """Record one fast-rate output sample."""
        if len(self._pending) >= self.N:
            raise RuntimeError("more than N samples pushed within one interval")
        self._pending.append(float(y))
        self._pending_t.append(float(t))

    def close_interval(self, w: float):
        """Freeze the interval's samples and remember the input applied over it."""
        if len(self._pending) != self.N:
            raise RuntimeError(f"interval closed with {len(self._pending)} of {self.N} samples")
        self.y = np.array(self._pending)
        self.times = np.array(self._pending_t)
        self._pending.clear()
        self._pending_t.clear()
        self.w_prev = float(w)
        self.k += 1


def reconstruct_state(gains: MrofGains, stack: OutputStack, d_prev: Optional[float] = None) -> np.ndarray:
    """``z(k) = L_w w(k-1) + L_y y_k`` (plus ``L_d d(k-1)`` when known)."""
    if not stack.full:
        raise StackNotFullError("output stack has no complete interval yet")
    z = gains.Lw[:, 0] * stack.w_prev + gains.Ly @ stack.y
    if d_prev is not None:
        z = z + gains.Ld[:, 0] * d_prev
    return z


def surface_tilde(gains: MrofGains, stack: OutputStack) -> float:
    """Computable surface ``M^T (L_w w(k-1) + L_y y_k + n_m)``."""
    if not stack.full:
        raise StackNotFullError("output stack has no complete interval yet")
    return float(gains.M @ (gains.Lw[:, 0] * stack.w_prev + gains.Ly @ stack.y)) + gains.Mn_m


def control(gains: MrofGains, stack: OutputStack) -> float:
    """``w(k) = F_y y_k + F_w w(k-1) - G_m - G_s sgn(s~(k))``."""
    st = surface_tilde(gains, stack)
    return float(gains.Fy @ stack.y + gains.Fw * stack.w_prev - gains.Gm - gains.Gs * sgn(st))


@dataclass(frozen=True)
class MrofBound:
    xi: float
    c1_lhs: float
    c1_rhs: float
    c2_lhs: float
    c2_rhs: float

    @property
    def c1_ok(self) -> bool:
        return self.c1_lhs > self.c1_rhs

    @property
    def c2_ok(self) -> bool:
        return self.c2_lhs > self.c2_rhs

    def messages(self) -> list[str]:
        out = []
        if not self.c1_ok:
            out.append(f"parameter constraint q*tau^2*eps/(2(1-q*tau)) = {self.c1_lhs:.4g} "
                       f"does not exceed d_s + r_s = {self.c1_rhs:.4g}")
        if not self.c2_ok:
            out.append(f"2(d_s + r_s) + eps*tau = {self.c2_lhs:.4g} does not exceed 2 n_s = {self.c2_rhs:.4g}")
        return out


def qsm_band_bound(cfg: MrofConfig, warn: bool = True) -> MrofBound:
    """Band ``xi = (2(d_s + r_s) + n_s + eps tau) / (1 - q tau)`` and its constraints."""
    _, d_s = cfg.d_ms
    _, r_s = cfg.r_ms
    _, n_s = cfg.n_ms
    qt = cfg.q * cfg.tau
    xi = (2.0 * (d_s + r_s) + n_s + cfg.eps * cfg.tau) / (1.0 - qt)
    out = MrofBound(
        xi=xi,
        c1_lhs=qt * cfg.tau * cfg.eps / (2.0 * (1.0 - qt)), c1_rhs=d_s + r_s,
        c2_lhs=2.0 * (d_s + r_s) + cfg.eps * cfg.tau, c2_rhs=2.0 * n_s,
    )
    if warn:
        for msg in out.messages():
            warnings.warn(msg, ConstraintWarning, stacklevel=2)
    return out


@dataclass(frozen=True)
class ConditionCheck:
    name: str
    passed: bool
    margin: float


@dataclass(frozen=True)
class Theorem2Report:
    xi: float
    p_m: float
    p_s: float
    theta_m: float
    theta_s: float
    gamma_m: float
    gamma_s: float
    sigma_s: float
    checks: tuple

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def warnings(self) -> list[str]:
        return [f"{c.name} fails (margin {c.margin:.4g})" for c in self.checks if not c.passed]

    def __str__(self):
        head = (f"xi={self.xi:.4g} p_s={self.p_s:.4g} theta_s={self.theta_s:.4g} "
                f"gamma_s={self.gamma_s:.4g} sigma_s={self.sigma_s:.4g}")
        body = [f"  {'ok ' if c.passed else 'BAD'} {c.name}: margin {c.margin:.4g}" for c in self.checks]
        return "\n".join([head] + body)


def validate_theorem2(cfg: MrofConfig, gains: MrofGains, sys_tau: DiscreteLTI,
                      sigma_s: Optional[float] = None) -> Theorem2Report:
    """Evaluate the quasi-sliding conditions for the multirate law.

    ``theta = M^T Phi n`` and ``gamma = M^T n`` are bounded by interval
    arithmetic over the box ``n in [n_l, n_u]`` on every disturbed channel.
    ``sigma_s`` defaults to the largest value the first condition allows.
    """
    d_m, d_s = cfg.d_ms
    r_m, r_s = cfg.r_ms
    n_m, n_s = cfg.n_ms
    mask = cfg.n_mask
    a = cfg.M @ sys_tau.Phi
    theta_m, theta_s = float(a @ (n_m * mask)), float(np.abs(a) @ (n_s * mask))
    gamma_m, gamma_s = float(cfg.M @ (n_m * mask)), float(np.abs(cfg.M) @ (n_s * mask))
    p_m = d_m + r_m
    p_s = d_s + r_s + cfg.eps * cfg.tau
    bound = qsm_band_bound(cfg, warn=False)
    base = theta_s + gamma_s + d_s
    if sigma_s is None:
        sigma_s = p_s - base
    checks = (
        ConditionCheck("q tau^2 eps / (2(1 - q tau)) > d_s + r_s", bound.c1_ok, bound.c1_lhs - bound.c1_rhs),
        ConditionCheck("2(d_s + r_s) + eps tau > 2 n_s", bound.c2_ok, bound.c2_lhs - bound.c2_rhs),
        ConditionCheck("p_s >= theta_s + gamma_s + d_s + sigma_s", p_s >= base + sigma_s - 1e-15,
                       p_s - base - sigma_s),
        ConditionCheck("sigma_s > r_m", sigma_s > r_m, sigma_s - r_m),
        ConditionCheck("r_m > 0", r_m > 0, r_m),
        ConditionCheck("p_s + r_m - (theta_s + gamma_s + d_s) < 2 xi", p_s + r_m - base < 2 * bound.xi,
                       2 * bound.xi - (p_s + r_m - base)),
    )
    return Theorem2Report(bound.xi, p_m, p_s, theta_m, theta_s, gamma_m, gamma_s, float(sigma_s), checks)


@dataclass
class LinearRun:
    z: np.ndarray        # true state at each tau boundary
    z_hat: np.ndarray    # reconstruction (NaN before the stack fills)
    w: np.ndarray
    s: np.ndarray
    s_tilde: np.ndarray
    y_fast: np.ndarray


def linear_closed_loop(cfg: MrofConfig, z0, steps: int, d: Sequence[float] = None,
                       oracle: bool = False, w0: float = 0.0) -> LinearRun:
    """Multirate controller on the exact linear model.

    ``d[k]`` is held over the k-th input interval and enters along
    ``cfg.channel``. With ``oracle=True`` the reconstruction includes the
    ``L_d d(k-1)`` term and is exact even under disturbance.
    """
    gains, sys_tau, sys_rho = design(cfg)
    d = np.zeros(steps) if d is None else np.asarray(d, dtype=float)
    z = np.asarray(z0, dtype=float).ravel().copy()
    stack = OutputStack(cfg.N)
    zs, zh, ws, ss, sts, yf = [], [], [], [], [], []
    w = w0
    for k in range(steps):
        if stack.full:
            z_hat = reconstruct_state(gains, stack, d[k - 1] if oracle else None)
            st = surface_tilde(gains, stack)
            w = control(gains, stack)
        else:
            z_hat = np.full(3, np.nan)
            st = math.nan
        zs.append(z.copy())
        zh.append(z_hat)
        ws.append(w)
        ss.append(float(cfg.M @ z))
        sts.append(st)
        for j in range(cfg.N):
            y = float(sys_rho.C[0] @ z)
            stack.push(k * cfg.tau + j * cfg.rho, y)
            yf.append(y)
            z = sys_rho.step(z, w, d[k])
        stack.close_interval(w)
    return LinearRun(np.array(zs), np.array(zh), np.array(ws), np.array(ss), np.array(sts), np.array(yf))


@dataclass
class MrofController:
    """Multirate controller for :func:`maglev_smc.plant.integrate`.

    Called every ``rho``: each call samples the position. On every
    ``N``-th call a new ``w`` is computed from the previous interval's
    samples and held for ``tau``. Until the first interval is complete the
    coil gets the open-loop equilibrium voltage.

    ``last_s_tilde`` is the computable surface the law switches on;
    ``last_s`` is the true surface from the exact state, recorded for
    diagnostics only. Both are in controller units.
    """

    params: PlantParams
    cfg: MrofConfig = field(default_factory=MrofConfig)
    noise_std: float = 0.0
    seed: int = 0
    beta_min: float = BETA_MIN
    events: dict = field(default_factory=dict)

    def __post_init__(self):
        self.gains, self.sys_tau, self.sys_rho = design(self.cfg)
        self.bound = qsm_band_bound(self.cfg, warn=False)
        self.reference = lambda t: self.params.x1d
        self.reset()

    @property
    def hold(self) -> ZeroOrderHold:
        return ZeroOrderHold(self.cfg.rho, "linearized")

    def reset(self):
        self.stack = OutputStack(self.cfg.N)
        self._calls = 0
        self._w = 0.0
        self.drive_now = "linearized"
        self._rng = np.random.default_rng(self.seed)
        self.events = {}
        self.last_s = math.nan
        self.last_s_tilde = math.nan
        self.log = {"t": [], "s": [], "s_tilde": [], "w": [], "z_hat": []}

    def __call__(self, t: float, x) -> float:
        unit = self.cfg.length_unit
        z = to_z(self.params, x).as_array()
        _, beta = alpha_beta(self.params, z)
        if abs(beta) < self.beta_min:
            raise LossOfAuthorityError(f"|beta|={abs(beta):.3g} below {self.beta_min:g}")
        j = self._calls % self.cfg.N
        self._calls += 1
        if j == 0:
            if self._calls > 1:
                self.stack.close_interval(self._w)
            if self.stack.full:
                st = surface_tilde(self.gains, self.stack)
                self._w = control(self.gains, self.stack)
                self.last_s_tilde = st
                self.last_s = float(self.cfg.M @ (z / unit))
                self.log["t"].append(t)
                self.log["s"].append(self.last_s)
                self.log["s_tilde"].append(st)
                self.log["w"].append(self._w)
                self.log["z_hat"].append(reconstruct_state(self.gains, self.stack))
                if "reach_time" not in self.events and abs(st) <= self.bound.xi:
                    self.events["reach_time"] = t
                self.drive_now = "linearized"
            else:
                # w-equivalent of the open-loop voltage, remembered as w(k-1)
                alpha, beta = alpha_beta(self.params, z)
                self._w = (alpha + beta * equilibrium_voltage(self.params)) / unit
                self.drive_now = "voltage"
        y = z[0]
        if self.noise_std > 0:
            y += self.noise_std * self._rng.standard_normal()
        self.stack.push(t, y / unit)
        if self.drive_now == "voltage":
            return equilibrium_voltage(self.params)
        return self._w * unit
