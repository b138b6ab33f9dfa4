import math
from types import SimpleNamespace

import numpy as np
import pytest

from maglev_smc import metrics


def fake_trace(t, p, u, setpoint=0.01):
    return SimpleNamespace(t=t, p=p, v=np.gradient(p, t), i=np.full_like(t, 0.2884), u=u,
                           x1d=np.full_like(t, setpoint))


def test_iae_itae_exponential():
    # e(t) = a exp(-t/T): IAE = a T (1 - e^{-tf/T}); ITAE = a T^2 (1 - (1 + tf/T) e^{-tf/T})
    a, T, tf = 0.005, 0.2, 5.0
    t = np.linspace(0.0, tf, 200_001)
    tr = fake_trace(t, 0.01 + a * np.exp(-t / T), np.full_like(t, 8.0))
    rep = metrics.compute(tr)
    assert rep.iae == pytest.approx(a * T * (1 - math.exp(-tf / T)), rel=1e-8)
    assert rep.itae == pytest.approx(a * T**2 * (1 - (1 + tf / T) * math.exp(-tf / T)), rel=1e-8)
    # 2% of 0.01 m is 2e-4: a exp(-t/T) = 2e-4 at t = T ln(25)
    assert rep.t_s == pytest.approx(T * math.log(25.0), abs=1e-4)
    assert rep.settled


def test_settling_requires_staying_in_band():
    t = np.linspace(0, 1, 101)
    p = np.full_like(t, 0.01)
    p[50] = 0.0105  # leaves the band once
    assert metrics.settling_time(t, p, 0.01) == pytest.approx(0.51)
    p[-1] = 0.02
    assert math.isnan(metrics.settling_time(t, p, 0.01))
    assert metrics.settling_time(t, np.full_like(t, 0.01), 0.01) == 0.0


def test_chatter_amplitude_and_frequency():
    f, A = 25.0, 0.05
    t = np.linspace(0.0, 10.0, 100_001)
    u = 8.277 + A * np.sin(2 * np.pi * f * t + 0.3)
    rep = metrics.compute(fake_trace(t, np.full_like(t, 0.01), u))
    assert rep.chatter_amp == pytest.approx(2 * A, rel=1e-4)
    assert rep.chatter_freq == pytest.approx(f, rel=0.01)
    assert rep.u_ss == pytest.approx(8.277, abs=1e-4)
    assert rep.window == pytest.approx((8.0, 10.0))
    assert rep.e_delta_max == pytest.approx(A, rel=1e-3)


def test_zero_crossing_rate_square_wave():
    t = np.linspace(0.0, 2.0, 20_001)
    x = np.sign(np.sin(2 * np.pi * 3.0 * t + 0.1))
    assert metrics.zero_crossing_rate(t, x) == pytest.approx(3.0, rel=0.02)
    assert metrics.zero_crossing_rate(t, np.ones_like(t)) == 0.0


def test_window_validation():
    t = np.linspace(0.0, 1.0, 11)
    tr = fake_trace(t, np.full_like(t, 0.01), np.full_like(t, 8.0))
    with pytest.raises(ValueError):
        metrics.compute(tr, window=(0.5, 2.0))
    with pytest.raises(ValueError):
        metrics.steady_window(t, 0.0)
    rep = metrics.compute(tr, window=(0.0, 1.0))
    assert rep.chatter_amp == 0.0 and rep.iae == 0.0
    assert set(rep.as_dict()) >= {"iae", "itae", "t_s", "e_delta_max", "chatter_amp", "chatter_freq"}


def test_time_varying_reference_has_no_settling_time():
    t = np.linspace(0.0, 1.0, 1001)
    ref = 0.01 + 0.005 * np.sin(2 * np.pi * t)
    tr = SimpleNamespace(t=t, p=ref, v=np.zeros_like(t), i=np.zeros_like(t), u=np.zeros_like(t), x1d=ref)
    rep = metrics.compute(tr)
    assert rep.iae == 0.0 and math.isnan(rep.t_s)
