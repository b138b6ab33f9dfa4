import math

import numpy as np
import pytest

from maglev_smc import PlantParams, PlantState, integrate
from maglev_smc.plant import (
    DisturbanceSpec, SimulationAborted, SingularPositionError, ZeroOrderHold, disturbance_value,
    dynamics, equilibrium, equilibrium_voltage,
)


class Constant:
    """Holds a fixed command; ``drive`` picks voltage or linearized input."""

    def __init__(self, value, period, drive="voltage", params=None):
        self.value = value
        self.hold = ZeroOrderHold(period, drive)
        if params is not None:
            self.params = params

    def __call__(self, t, x):
        return self.value


def test_default_params_and_equilibrium(params):
    eq = equilibrium(params)
    assert eq.p == 0.01 and eq.v == 0.0
    assert eq.i == pytest.approx(0.2884, abs=5e-5)
    assert equilibrium_voltage(params) == pytest.approx(8.277, abs=5e-4)
    np.testing.assert_allclose(dynamics(params, eq, equilibrium_voltage(params)), 0.0, atol=1e-12)


def test_params_validation():
    with pytest.raises(ValueError, match="inconsistent"):
        PlantParams(Q=2e-4)
    with pytest.raises(ValueError):
        PlantParams(m=-1.0)
    heavy = PlantParams().with_mass(0.02)
    assert heavy.m == 0.02 and heavy.Q == PlantParams().Q


def test_state_validation():
    with pytest.raises(SingularPositionError):
        PlantState(0.0, 0.0, 0.3)
    with pytest.raises(ValueError):
        PlantState(0.01, math.nan, 0.3)


def test_force_is_coenergy_gradient(params):
    # m dv/dt = m g + dW/dp with W = L(p) i^2 / 2
    p, i, h = 0.012, 0.31, 1e-7
    W = lambda q: 0.5 * params.inductance(q) * i**2
    force = (W(p + h) - W(p - h)) / (2 * h)
    dv = dynamics(params, [p, 0.0, i], 0.0)[1]
    assert dv == pytest.approx(params.g_c + force / params.m, rel=1e-7)


def test_flux_linkage_balance(params):
    # d(L(p) i)/dt = u - R i along the flow
    x = np.array([0.013, 0.05, 0.33])
    u = 7.0
    dp, _, di = dynamics(params, x, u)
    dlam = params.inductance(x[0]) * di - 2 * params.Q / x[0] ** 2 * dp * x[2]
    assert dlam == pytest.approx(u - params.R * x[2], rel=1e-12)


def test_dynamics_guard(params):
    with pytest.raises(SingularPositionError):
        dynamics(params, [5e-5, 0.0, 0.3], 1.0)
    with pytest.raises(ValueError):
        dynamics(params, [0.01, 0.0, 0.3], math.inf)


def test_equilibrium_is_held_in_open_loop(params):
    tr = integrate(params, equilibrium(params), Constant(equilibrium_voltage(params), 1e-3), dt=1e-3, t_end=0.05)
    assert np.max(np.abs(tr.p - 0.01)) < 1e-12
    assert tr.t[-1] == pytest.approx(0.05)


def test_rk4_fourth_order(params):
    x0 = PlantState(0.012, 0.0, 0.30)
    ctrl = lambda dt: Constant(8.0, dt)
    ref = integrate(params, x0, ctrl(1.25e-5), dt=1.25e-5, t_end=0.02).x[-1]
    e1 = np.abs(integrate(params, x0, ctrl(1e-4), dt=1e-4, t_end=0.02).x[-1] - ref).max()
    e2 = np.abs(integrate(params, x0, ctrl(5e-5), dt=5e-5, t_end=0.02).x[-1] - ref).max()
    assert 10 < e1 / e2 < 22


def test_z_frame_disturbance_enters_the_chain_exactly(params):
    # linearized drive with w = 0 from rest: z3' = c, so z3 = c t and z2 = c t^2 / 2
    c = 0.5
    ctrl = Constant(0.0, 1e-3, "linearized", params)
    dist = DisturbanceSpec("constant", (0.0, 0.0, c), frame="z")
    tr = integrate(params, equilibrium(params), ctrl, dist, dt=1e-3, t_end=0.2)
    np.testing.assert_allclose(tr.z[:, 2], c * tr.t, atol=1e-9)
    np.testing.assert_allclose(tr.z[:, 1], 0.5 * c * tr.t**2, atol=1e-9)


def test_disturbance_hold_and_bounds():
    spec = DisturbanceSpec("sinusoid", (0.0, 0.0, 2.0), frequency=1.0, hold=0.1)
    assert disturbance_value(spec, 0.149)[2] == pytest.approx(2 * math.sin(2 * math.pi * 0.1))
    assert disturbance_value(spec, 0.2)[2] == pytest.approx(2 * math.sin(2 * math.pi * 0.2))
    assert spec.bounds() == (0.0, 0.0, 2.0)
    samples = DisturbanceSpec("samples", (1.0, 1.0, 1.0), samples=np.array([[0, 0, 1.0], [0, 0, -3.0]]),
                              sample_dt=0.5)
    assert disturbance_value(samples, 0.7)[2] == -3.0
    assert disturbance_value(samples, 9.0)[2] == -3.0
    with pytest.raises(ValueError):
        DisturbanceSpec("ramp")


def test_abort_keeps_partial_trace(params):
    with pytest.raises(SimulationAborted) as info:
        integrate(params, PlantState(0.01, 0.0, 0.3), Constant(200.0, 1e-4), dt=1e-4, t_end=1.0)
    exc = info.value
    assert exc.reason.startswith("singular")
    assert 0 < exc.time < 1.0
    assert len(exc.trace) > 10 and exc.trace.p[-1] > 0


def test_controller_exception_aborts(params):
    def bad(t, x):
        if t > 0.01:
            raise RuntimeError("boom")
        return 8.277

    with pytest.raises(SimulationAborted, match="controller error"):
        integrate(params, equilibrium(params), bad, dt=1e-3, t_end=0.1)


def test_hold_must_be_multiple_of_dt(params):
    with pytest.raises(ValueError, match="multiple"):
        integrate(params, equilibrium(params), Constant(8.0, 2.5e-3), dt=1e-3, t_end=0.1)
    with pytest.raises(ValueError):
        integrate(params, equilibrium(params), Constant(8.0, 1e-3), dt=2e-3, t_end=0.1)


def test_trace_is_read_only(params):
    tr = integrate(params, equilibrium(params), Constant(equilibrium_voltage(params), 1e-3), dt=1e-3, t_end=0.01)
    with pytest.raises(ValueError):
        tr.x[0, 0] = 1.0
    assert len(tr.t) == len(tr.u) == len(tr.z) == 11
    assert tr.final_state().p == pytest.approx(0.01, abs=1e-9)
