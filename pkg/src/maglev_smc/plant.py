"""Magnetic levitation plant: parameters, dynamics, disturbances, integration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import _kernels as K

P_MIN = 1e-4  # m; below this the 1/p^2 force term is treated as a crash


class SingularPositionError(ValueError):
    """Ball position at or below the singularity guard."""


class SimulationAborted(RuntimeError):
    """A run stopped early. ``trace`` holds everything recorded up to ``time``."""

    def __init__(self, reason: str, time: float, trace: "SimTrace", detail: str = ""):
        msg = f"simulation aborted at t={time:.6g} s: {reason}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
        self.reason = reason
        self.time = time
        self.trace = trace


@dataclass(frozen=True)
class PlantParams:
    """Physical constants of the levitation rig plus the position setpoint."""

    R: float = 28.7
    L1: float = 0.65
    g_c: float = 9.81
    m: float = 11.87e-3
    mu0: float = 2.125e-7
    A_perm: float = 8.0 * math.pi * 1e-4
    N_turns: float = 1024.0
    Q: float = 1.4e-4
    x1d: float = 0.01

    def __post_init__(self):
        for name in ("R", "L1", "g_c", "m", "mu0", "A_perm", "N_turns", "Q", "x1d"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise ValueError(f"{name} must be positive and finite, got {val}")
        q_geom = self.mu0 * self.A_perm * self.N_turns**2 / 4.0
        if abs(q_geom - self.Q) > 0.05 * self.Q:
            raise ValueError(f"Q={self.Q} inconsistent with mu0*A*N^2/4={q_geom:.4g}")

    def replace(self, **changes) -> "PlantParams":
        return replace(self, **changes)

    def with_mass(self, m: float) -> "PlantParams":
        """Same rig with a different ball; the force constant is left alone."""
        return replace(self, m=m)

    def as_array(self) -> np.ndarray:
        return np.array([self.R, self.L1, self.g_c, self.m, self.Q])

    def inductance(self, p: float) -> float:
        return self.L1 + 2.0 * self.Q / p


@dataclass(frozen=True)
class PlantState:
    p: float
    v: float
    i: float
    t: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(x) for x in (self.p, self.v, self.i, self.t)):
            raise ValueError("plant state must be finite")
        if self.p <= 0:
            raise SingularPositionError(f"position must be positive, got {self.p}")

    def as_array(self) -> np.ndarray:
        return np.array([self.p, self.v, self.i])

    @classmethod
    def from_array(cls, x, t: float = 0.0) -> "PlantState":
        return cls(float(x[0]), float(x[1]), float(x[2]), t)


DEFAULT_INITIAL = PlantState(0.015, 0.0, 0.35)

_KINDS = {"none": 0, "constant": 1, "sinusoid": 2, "samples": 3}
_FRAMES = {"x": 0, "z": 1}


@dataclass(frozen=True)
class DisturbanceSpec:
    """Additive disturbance on the three state channels.

    ``frame="x"`` adds the signal to the original-coordinate derivative
    ``(dp, dv, di)``; ``frame="z"`` adds it to the Brunovsky derivative
    ``(dz1, dz2, dz3)``. A positive ``hold`` samples the signal every
    ``hold`` seconds and keeps it constant in between, which is how the
    discrete-time scenarios see ``d(k)``. ``samples`` (``kind="samples"``)
    is an ``(n, 3)`` array played back with a zero-order hold of
    ``sample_dt``; each column is multiplied by the channel amplitude.
    """

    kind: str = "none"
    amplitude: tuple[float, float, float] = (0.0, 0.0, 0.0)
    frequency: float = 1.0
    frame: str = "x"
    hold: float = 0.0
    samples: Optional[np.ndarray] = None
    sample_dt: float = 1.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown disturbance kind {self.kind!r}")
        if self.frame not in _FRAMES:
            raise ValueError(f"unknown disturbance frame {self.frame!r}")
        amp = tuple(float(a) for a in self.amplitude)
        if len(amp) != 3 or not all(math.isfinite(a) for a in amp):
            raise ValueError("amplitude must be three finite numbers")
        object.__setattr__(self, "amplitude", amp)
        if self.kind == "samples":
            if self.samples is None:
                raise ValueError("kind='samples' needs a samples array")
            arr = np.asarray(self.samples, dtype=float)
            if arr.ndim == 1:
                arr = np.repeat(arr[:, None], 3, axis=1)
            if arr.ndim != 2 or arr.shape[1] != 3 or not np.all(np.isfinite(arr)):
                raise ValueError("samples must be a finite (n, 3) array")
            if self.sample_dt <= 0:
                raise ValueError("sample_dt must be positive")
            object.__setattr__(self, "samples", arr)
        if self.hold < 0:
            raise ValueError("hold must be non-negative")

    @classmethod
    def none(cls) -> "DisturbanceSpec":
        return cls()

    @classmethod
    def constant(cls, amplitude=(1.0, 1.0, 1.0), frame: str = "x") -> "DisturbanceSpec":
        return cls("constant", tuple(amplitude), frame=frame)

    @classmethod
    def sinusoid(cls, amplitude=(1.0, 1.0, 1.0), frequency: float = 1.0,
                 frame: str = "x", hold: float = 0.0) -> "DisturbanceSpec":
        return cls("sinusoid", tuple(amplitude), frequency, frame=frame, hold=hold)

    def bounds(self) -> tuple[float, float, float]:
        """Per-channel sup |d|, i.e. the (D1, D2, D3) the signal respects."""
        if self.kind == "none":
            return (0.0, 0.0, 0.0)
        if self.kind == "samples":
            peak = np.abs(self.samples).max(axis=0)
            return tuple(float(abs(a) * pk) for a, pk in zip(self.amplitude, peak))
        return tuple(abs(a) for a in self.amplitude)

    def kernel_args(self):
        samples = self.samples if self.samples is not None else K.empty_samples()
        return (_KINDS[self.kind], _FRAMES[self.frame], np.asarray(self.amplitude, dtype=float),
                float(self.frequency), float(self.hold), float(self.sample_dt), samples)


def disturbance_value(spec: DisturbanceSpec, t: float) -> np.ndarray:
    """Disturbance 3-vector at time ``t`` in the spec's own frame."""
    if t < 0:
        raise ValueError("t must be non-negative")
    kind, _, amp, freq, hold, sdt, samples = spec.kernel_args()
    return np.array(K.disturbance_at(float(t), kind, amp, freq, hold, sdt, samples))


def dynamics(params: PlantParams, state, u: float, d=(0.0, 0.0, 0.0), p_min: float = P_MIN) -> np.ndarray:
    """State derivative ``(dp, dv, di)`` of the levitation model.

    ``d`` is added in original coordinates.
    """
    x = state.as_array() if isinstance(state, PlantState) else np.asarray(state, dtype=float)
    if not x[0] > p_min:
        raise SingularPositionError(f"position {x[0]:.3g} m at or below guard {p_min:g} m")
    if not math.isfinite(u):
        raise ValueError("u must be finite")
    return np.array(K.plant_rhs(x[0], x[1], x[2], float(u), float(d[0]), float(d[1]), float(d[2]),
                                params.as_array()))


def equilibrium(params: PlantParams, x1d: Optional[float] = None) -> PlantState:
    """Resting state at the setpoint: zero velocity, current balancing gravity."""
    xd = params.x1d if x1d is None else x1d
    return PlantState(xd, 0.0, xd * math.sqrt(params.g_c * params.m / params.Q))


def equilibrium_voltage(params: PlantParams, x1d: Optional[float] = None) -> float:
    return params.R * equilibrium(params, x1d).i


@dataclass(frozen=True)
class ZeroOrderHold:
    """How a controller's output reaches the coil.

    ``drive="voltage"`` holds the returned value as the coil voltage.
    ``drive="linearized"`` holds it as the Brunovsky input ``w`` and
    recomputes the voltage ``(w - alpha) / beta`` from the live state at
    every integrator stage, i.e. the nonlinear cancellation runs in
    continuous time behind the sampled controller.
    """

    period: float
    drive: str = "voltage"

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError("hold period must be positive")
        if self.drive not in ("voltage", "linearized"):
            raise ValueError(f"unknown drive {self.drive!r}")


@dataclass(frozen=True)
class SimTrace:
    """Uniformly sampled record of a closed-loop run.

    Every series has one entry per sample time. ``w`` is the held command
    as issued (a voltage on voltage-driven intervals); ``s`` and ``s_tilde`` are the
    controller's surface values held over each control interval (NaN when
    the controller has none).
    """

    t: np.ndarray
    x: np.ndarray
    z: np.ndarray
    u: np.ndarray
    w: np.ndarray
    s: np.ndarray
    s_tilde: np.ndarray
    x1d: np.ndarray
    control_times: np.ndarray
    events: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.t)
        for name in ("x", "z", "u", "w", "s", "s_tilde", "x1d"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"series {name} has length {len(getattr(self, name))}, expected {n}")
        if n > 1 and not np.all(np.diff(self.t) > 0):
            raise ValueError("sample times must be strictly increasing")
        for name in ("t", "x", "z", "u", "w", "s", "s_tilde", "x1d", "control_times"):
            getattr(self, name).setflags(write=False)

    def __len__(self):
        return len(self.t)

    @property
    def p(self) -> np.ndarray:
        return self.x[:, 0]

    @property
    def v(self) -> np.ndarray:
        return self.x[:, 1]

    @property
    def i(self) -> np.ndarray:
        return self.x[:, 2]

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0]) if len(self.t) else 0.0

    def final_state(self) -> PlantState:
        return PlantState.from_array(self.x[-1], float(self.t[-1]))

    def at_control_times(self, name: str) -> np.ndarray:
        """Series ``name`` sampled at the controller update instants."""
        idx = np.searchsorted(self.t, self.control_times - 1e-12)
        idx = idx[idx < len(self.t)]
        return getattr(self, name)[idx]


def _z_series(params: PlantParams, x: np.ndarray, x1d: np.ndarray) -> np.ndarray:
    z = np.empty_like(x)
    z[:, 0] = x[:, 0] - x1d
    z[:, 1] = x[:, 1]
    z[:, 2] = params.g_c - (params.Q / params.m) * (x[:, 2] / x[:, 0]) ** 2
    return z


def _build_trace(params, ts, xs, us, ws, ss, sts, refs, ctimes, events) -> SimTrace:
    x = np.asarray(xs, dtype=float).reshape(-1, 3)
    x1d = np.asarray(refs, dtype=float)
    return SimTrace(
        t=np.asarray(ts, dtype=float), x=x, z=_z_series(params, x, x1d),
        u=np.asarray(us, dtype=float), w=np.asarray(ws, dtype=float),
        s=np.asarray(ss, dtype=float), s_tilde=np.asarray(sts, dtype=float),
        x1d=x1d, control_times=np.asarray(ctimes, dtype=float), events=dict(events),
    )


_DRIVES = {"voltage": K.DRIVE_VOLTAGE, "linearized": K.DRIVE_LINEARIZED}

ControlCallback = Callable[[float, np.ndarray], float]


def integrate(params: PlantParams, initial: PlantState, controller: ControlCallback,
              disturbance: Optional[DisturbanceSpec] = None, dt: float = 1e-4, t_end: float = 1.0,
              hold: Optional[ZeroOrderHold] = None, p_min: float = P_MIN) -> SimTrace:
    """Fixed-step RK4 simulation of the plant under a sampled controller.

    ``controller(t, x)`` is called once per hold period with the current
    state array and its return value is held (see :class:`ZeroOrderHold`).
    When ``hold`` is omitted the controller's own ``hold`` attribute is
    used, falling back to a voltage hold of one step. Optional controller
    attributes ``last_s``/``last_s_tilde`` are copied into the trace and
    ``reference(t)`` supplies the setpoint used for the ``z`` series. The
    outer loop cancels with ``controller.params`` when present, so a
    controller built on nominal parameters can drive a perturbed plant. A
    controller may set ``drive_now`` to ``"voltage"`` or ``"linearized"``
    to override the drive for the interval it is about to command.

    Raises :class:`SimulationAborted` (carrying the partial trace) when the
    ball crosses ``p_min``, the state stops being finite, or the
    controller itself raises.
    """
    if hold is None:
        hold = getattr(controller, "hold", None) or ZeroOrderHold(dt, "voltage")
    if not (dt > 0 and t_end > 0):
        raise ValueError("dt and t_end must be positive")
    if dt > hold.period * (1 + 1e-12):
        raise ValueError("dt must not exceed the hold period")
    ratio = hold.period / dt
    n_hold = int(round(ratio))
    if abs(ratio - n_hold) > 1e-6 * max(1.0, ratio):
        raise ValueError(f"hold period {hold.period} is not an integer multiple of dt={dt}")
    n_total = int(round(t_end / dt))

    disturbance = disturbance or DisturbanceSpec()
    dargs = disturbance.kernel_args()
    prm = params.as_array()
    model = getattr(controller, "params", None)
    cprm = model.as_array() if isinstance(model, PlantParams) else prm
    mode = K.DRIVE_LINEARIZED if hold.drive == "linearized" else K.DRIVE_VOLTAGE
    reference = getattr(controller, "reference", None)
    if hasattr(controller, "reset"):
        controller.reset()

    x = initial.as_array().astype(float)
    t0 = float(initial.t)
    buf_x = np.empty((n_hold, 3))
    buf_u = np.empty(n_hold)
    ts, xs, us, ws, ss, sts, refs, ctimes = [], [], [], [], [], [], [], []

    def finish():
        events = dict(getattr(controller, "events", {}) or {})
        return _build_trace(params, ts, xs, us, ws, ss, sts, refs, ctimes, events)

    done = 0
    while done < n_total:
        t = t0 + done * dt
        try:
            cmd = float(controller(t, x.copy()))
        except Exception as exc:  # controller-side failure, keep what we have
            raise SimulationAborted("controller error", t, finish(), str(exc)) from exc
        if not math.isfinite(cmd):
            raise SimulationAborted("non-finite command", t, finish())
        ctimes.append(t)
        drive_now = getattr(controller, "drive_now", None)
        mode_k = mode if drive_now is None else _DRIVES[drive_now]
        s_val = float(getattr(controller, "last_s", math.nan))
        st_val = float(getattr(controller, "last_s_tilde", math.nan))
        ref = float(reference(t)) if reference is not None else params.x1d
        nsteps = min(n_hold, n_total - done)
        status, k = K.rk4_span(x, t, dt, nsteps, mode_k, cmd, prm, cprm, p_min, *dargs, buf_x, buf_u)
        for j in range(k):
            ts.append(t + j * dt)
        xs.extend(buf_x[:k].tolist())
        us.extend(buf_u[:k].tolist())
        ws.extend([cmd] * k)
        ss.extend([s_val] * k)
        sts.extend([st_val] * k)
        refs.extend([ref] * k)
        done += k if status != K.STATUS_OK else nsteps
        if status == K.STATUS_SINGULAR:
            raise SimulationAborted("singular position", t0 + done * dt, finish(),
                                    f"p fell to or below {p_min:g} m")
        if status == K.STATUS_NONFINITE:
            raise SimulationAborted("non-finite state", t0 + done * dt, finish())

    # closing sample at t_end so the final state is part of the record
    ts.append(t0 + n_total * dt)
    xs.append(x.tolist())
    us.append(float(K.outer_loop_x(x[0], x[1], x[2], ws[-1], cprm)) if mode_k == K.DRIVE_LINEARIZED else us[-1])
    ws.append(ws[-1])
    ss.append(ss[-1])
    sts.append(sts[-1])
    refs.append(float(reference(ts[-1])) if reference is not None else params.x1d)
    return finish()
