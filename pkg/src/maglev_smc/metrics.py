"""Performance indicators computed from a :class:`~maglev_smc.plant.SimTrace`."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy.integrate import trapezoid

SETTLING_BAND = 0.02
STEADY_FRACTION = 0.2


@dataclass(frozen=True)
class MetricReport:
    """Scalar summary of one run.

    ``t_s`` is NaN and ``settled`` False when the position never stays
    inside the band. Chatter figures are taken over the steady window.
    """

    iae: float
    itae: float
    t_s: float
    settled: bool
    e_delta_max: float
    u_ss: float
    chatter_amp: float
    chatter_freq: float
    p_ss: float
    v_ss: float
    i_ss: float
    window: tuple

    def as_dict(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        return d


def steady_window(t: np.ndarray, fraction: float = STEADY_FRACTION) -> tuple[float, float]:
    """Final ``fraction`` of the time span."""
    if not 0 < fraction <= 1:
        raise ValueError("fraction must lie in (0, 1]")
    return float(t[-1] - fraction * (t[-1] - t[0])), float(t[-1])


def settling_time(t, p, setpoint, band: float = SETTLING_BAND) -> float:
    """First time after which ``|p - setpoint| <= band * |setpoint|`` for good.

    NaN when the last sample is outside the band.
    """
    t = np.asarray(t, dtype=float)
    err = np.abs(np.asarray(p, dtype=float) - setpoint)
    tol = band * np.abs(setpoint)
    outside = np.nonzero(err > tol * (1 + 1e-12))[0]
    if outside.size == 0:
        return float(t[0])
    last = outside[-1]
    if last == len(t) - 1:
        return math.nan
    return float(t[last + 1])


def zero_crossing_rate(t, x) -> float:
    """Half the number of sign changes of ``x`` per unit time."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    sg = np.sign(x)
    sg = sg[sg != 0]
    if sg.size < 2 or t[-1] <= t[0]:
        return 0.0
    crossings = int(np.count_nonzero(sg[1:] != sg[:-1]))
    return crossings / (2.0 * (t[-1] - t[0]))


def compute(trace, setpoint: Optional[float] = None, window: Optional[tuple] = None,
            band: float = SETTLING_BAND) -> MetricReport:
    """Metrics of ``trace`` against ``setpoint`` (default: the trace's own reference).

    ``window`` is ``(t_start, t_end)`` for the steady-state statistics and
    defaults to the final 20% of the run.
    """
    t = np.asarray(trace.t, dtype=float)
    if t.size < 2:
        raise ValueError("trace needs at least two samples")
    ref = np.asarray(trace.x1d, dtype=float) if setpoint is None else np.full(t.size, float(setpoint))
    p = np.asarray(trace.p, dtype=float)
    err = np.abs(ref - p)
    iae = float(trapezoid(err, t))
    itae = float(trapezoid(t * err, t))

    if window is None:
        window = steady_window(t)
    lo, hi = window
    if lo < t[0] - 1e-12 or hi > t[-1] + 1e-12 or lo >= hi:
        raise ValueError(f"window {window} outside trace span [{t[0]}, {t[-1]}]")
    w = (t >= lo - 1e-12) & (t <= hi + 1e-12)

    sp = float(ref[-1]) if setpoint is None else float(setpoint)
    t_s = settling_time(t, p, sp, band) if setpoint is not None or np.ptp(ref) == 0 else math.nan
    u = np.asarray(trace.u, dtype=float)
    u_ss = float(u[w].mean())
    return MetricReport(
        iae=iae, itae=itae, t_s=t_s, settled=not math.isnan(t_s),
        e_delta_max=float(abs(u.max() - u_ss)), u_ss=u_ss,
        chatter_amp=float(np.ptp(u[w])), chatter_freq=zero_crossing_rate(t[w], u[w] - u_ss),
        p_ss=float(p[w].mean()), v_ss=float(trace.v[w].mean()), i_ss=float(trace.i[w].mean()),
        window=(float(lo), float(hi)),
    )
