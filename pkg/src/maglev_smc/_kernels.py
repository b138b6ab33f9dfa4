"""Inner-loop kernels: plant right-hand side and fixed-step RK4 spans.

Parameter vector layout is ``prm = [R, L1, g_c, m, Q]``. Disturbance
kinds: 0 none, 1 constant, 2 sinusoid, 3 sampled. Frames: 0 original
coordinates (added to the state derivative), 1 Brunovsky coordinates
(mapped through the inverse Jacobian of the coordinate change).
Drive modes: 0 the command is the coil voltage, 1 the command is the
linearized input ``w`` and the voltage is recomputed at every stage.
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import kernel

STATUS_OK = 0
STATUS_SINGULAR = 1
STATUS_NONFINITE = 2

DRIVE_VOLTAGE = 0
DRIVE_LINEARIZED = 1


@kernel
def plant_rhs(p, v, i, u, d1, d2, d3, prm):
    R, L1, g, m, Q = prm[0], prm[1], prm[2], prm[3], prm[4]
    Lp = L1 + 2.0 * Q / p
    dp = v + d1
    dv = g - (Q / m) * (i / p) ** 2 + d2
    di = (-R * i + 2.0 * Q * v * i / (p * p)) / Lp + u / Lp + d3
    return dp, dv, di


@kernel
def alpha_beta_x(p, v, i, prm):
    """alpha and beta evaluated directly from original coordinates."""
    R, L1, g, m, Q = prm[0], prm[1], prm[2], prm[3], prm[4]
    Lp = L1 + 2.0 * Q / p
    force = (Q / m) * (i / p) ** 2  # equals g - z3
    alpha = 2.0 * force * ((1.0 - 2.0 * Q / (Lp * p)) * v / p + R / Lp)
    beta = -(2.0 / (Lp * p)) * math.sqrt((Q / m) * force)
    return alpha, beta


@kernel
def outer_loop_x(p, v, i, w, prm):
    alpha, beta = alpha_beta_x(p, v, i, prm)
    return (-alpha + w) / beta


@kernel
def disturbance_at(t, kind, amp, freq, hold, sample_dt, samples):
    if kind == 0:
        return 0.0, 0.0, 0.0
    if hold > 0.0:
        t = math.floor(t / hold + 1e-9) * hold
    if kind == 1:
        return amp[0], amp[1], amp[2]
    if kind == 2:
        s = math.sin(2.0 * math.pi * freq * t)
        return amp[0] * s, amp[1] * s, amp[2] * s
    k = int(math.floor(t / sample_dt + 1e-9))
    if k >= samples.shape[0]:
        k = samples.shape[0] - 1
    if k < 0:
        k = 0
    return amp[0] * samples[k, 0], amp[1] * samples[k, 1], amp[2] * samples[k, 2]


@kernel
def _to_x_frame(p, i, d1, d2, d3, frame, prm):
    if frame == 0:
        return d1, d2, d3
    Q, m = prm[4], prm[3]
    dz3_dp = 2.0 * (Q / m) * i * i / (p * p * p)
    dz3_di = -2.0 * (Q / m) * i / (p * p)
    return d1, d2, (d3 - dz3_dp * d1) / dz3_di


@kernel
def _stage(p, v, i, t, mode, command, prm, cprm, dkind, dframe, damp, dfreq, dhold, dsample_dt, dsamples):
    if mode == 1:
        u = outer_loop_x(p, v, i, command, cprm)
    else:
        u = command
    d1, d2, d3 = disturbance_at(t, dkind, damp, dfreq, dhold, dsample_dt, dsamples)
    d1, d2, d3 = _to_x_frame(p, i, d1, d2, d3, dframe, prm)
    return plant_rhs(p, v, i, u, d1, d2, d3, prm)


@kernel
def rk4_span(x, t0, dt, nsteps, mode, command, prm, cprm, p_min,
             dkind, dframe, damp, dfreq, dhold, dsample_dt, dsamples,
             out_x, out_u):
    """Advance ``x`` in place by ``nsteps`` RK4 steps.

    ``out_x[k]`` and ``out_u[k]`` receive the state and voltage at the start
    of step ``k``. ``cprm`` is the controller's model of the plant, used
    by the outer loop in drive mode 1. Returns ``(status, steps_completed)``; on a non-zero
    status ``x`` holds the last valid state.
    """
    p, v, i = x[0], x[1], x[2]
    h2 = 0.5 * dt
    for k in range(nsteps):
        t = t0 + k * dt
        if not (p > p_min):
            return STATUS_SINGULAR, k
        out_x[k, 0] = p
        out_x[k, 1] = v
        out_x[k, 2] = i
        if mode == 1:
            out_u[k] = outer_loop_x(p, v, i, command, cprm)
        else:
            out_u[k] = command
        a1, b1, c1 = _stage(p, v, i, t, mode, command, prm, cprm, dkind, dframe, damp, dfreq, dhold, dsample_dt, dsamples)
        pa, va, ia = p + h2 * a1, v + h2 * b1, i + h2 * c1
        if not (pa > p_min):
            return STATUS_SINGULAR, k + 1
        a2, b2, c2 = _stage(pa, va, ia, t + h2, mode, command, prm, cprm, dkind, dframe, damp, dfreq, dhold, dsample_dt, dsamples)
        pb, vb, ib = p + h2 * a2, v + h2 * b2, i + h2 * c2
        if not (pb > p_min):
            return STATUS_SINGULAR, k + 1
        a3, b3, c3 = _stage(pb, vb, ib, t + h2, mode, command, prm, cprm, dkind, dframe, damp, dfreq, dhold, dsample_dt, dsamples)
        pc, vc, ic = p + dt * a3, v + dt * b3, i + dt * c3
        if not (pc > p_min):
            return STATUS_SINGULAR, k + 1
        a4, b4, c4 = _stage(pc, vc, ic, t + dt, mode, command, prm, cprm, dkind, dframe, damp, dfreq, dhold, dsample_dt, dsamples)
        pn = p + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        vn = v + dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
        i_n = i + dt / 6.0 * (c1 + 2.0 * c2 + 2.0 * c3 + c4)
        if not (math.isfinite(pn) and math.isfinite(vn) and math.isfinite(i_n)):
            return STATUS_NONFINITE, k + 1
        p, v, i = pn, vn, i_n
        x[0], x[1], x[2] = p, v, i
    return STATUS_OK, nsteps


def empty_samples() -> np.ndarray:
    return np.zeros((1, 3))
