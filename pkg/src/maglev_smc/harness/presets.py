"""Code-defined scenarios for the published experiments.

Gains are the published design values. Initial state, run length and
the disturbance channel for the discrete controllers are not given in
the source and use the defaults documented in the README.
"""

from __future__ import annotations

from .scenario import Scenario

PLANT_M = 11.87e-3

PI_GAINS = {"poles": [-30.0, -40.0, -50.0], "M": [1200.0, 70.0, 1.0],
            "k4": 0.1, "k5": 5.0, "k0": 6.0, "alpha_pow": 0.5}
DSMC_GAINS = {"M": [60000.0, 4700.0, 120.0], "q": 0.4, "eps": 0.3, "tau": 0.1,
              "d_bounds": [-0.001, 0.005]}
MROF_GAINS = {"tau": 0.06, "rho": 0.02, "N": 3, "q": 3.0, "eps": 1.0, "M": [0.66, 1.0, 0.12],
              "d_bounds": [-0.008, 0.014], "r_bounds": [-0.002, 0.013], "n_bounds": [-0.009, 0.015]}

CONST_ALL = {"kind": "constant", "amplitude": 1.0, "frame": "x"}
SINE_ALL = {"kind": "sinusoid", "amplitude": 1.0, "frequency": 1.0, "frame": "x"}
# d(k) = sin(2 pi k tau), held over the control interval, on the input channel
SINE_SAMPLED = {"kind": "sinusoid", "amplitude": [0.0, 0.0, 1.0], "frequency": 1.0,
                "frame": "z", "hold": "control"}


def _pi(name, desc, **kw):
    return dict(name=name, description=desc, controller="pi_smc", gains=dict(PI_GAINS), **kw)


def _fl(name, desc, **kw):
    return dict(name=name, description=desc, controller="fl_baseline",
                gains={"poles": PI_GAINS["poles"], "M": PI_GAINS["M"]}, **kw)


_TREES = [
    # Fig. 3 a-f
    _pi("fig3-regulation", "PI-SMC regulation to 0.01 m, nominal plant", t_end=5.0),
    # Fig. 3 text: ball mass increased by 30 %, controller keeps the nominal model
    _pi("fig3-mass30", "PI-SMC with the ball 30% heavier than the design model",
        plant_true={"m": 1.3 * PLANT_M}, t_end=2.0),
    _pi("fig3-mass30-known", "PI-SMC designed for the 30% heavier ball",
        plant={"m": 1.3 * PLANT_M}, t_end=2.0),
    # Fig. 3 g
    _pi("fig3g-square", "PI-SMC tracking a 1 Hz square wave of 5 mm about 10 mm",
        reference={"kind": "square", "amplitude": 0.005, "frequency": 1.0}, t_end=3.0),
    # Fig. 3 h
    _pi("fig3h-sine", "PI-SMC tracking 0.01 + 0.005 sin(2 pi t)",
        reference={"kind": "sine", "amplitude": 0.005, "frequency": 1.0}, t_end=3.0),
    # Fig. 4 a-d
    _fl("fig4a-const-disturbance-FL", "feedback linearization, d = 1 on all channels",
        disturbance=dict(CONST_ALL), t_end=3.0),
    _pi("fig4b-const-disturbance", "PI-SMC, d = 1 on all channels",
        disturbance=dict(CONST_ALL), bounds=[1.0, 1.0, 1.0], t_end=3.0),
    _fl("fig4c-sine-disturbance-FL", "feedback linearization, d = sin(2 pi t) on all channels",
        disturbance=dict(SINE_ALL), t_end=3.0),
    _pi("fig4d-sine-disturbance", "PI-SMC, d = sin(2 pi t) on all channels",
        disturbance=dict(SINE_ALL), bounds=[1.0, 1.0, 1.0], t_end=3.0),
    # Fig. 5
    dict(name="fig5-dsmc", description="state-feedback DSMC regulation",
         controller="dsmc", gains=dict(DSMC_GAINS), t_end=30.0),
    # Fig. 6
    dict(name="fig6a-mrof-q3", description="multirate output-feedback DSMC, q = 3",
         controller="mrof_dsmc", gains=dict(MROF_GAINS), t_end=30.0),
    dict(name="fig6b-mrof-q2", description="multirate output-feedback DSMC, q = 2",
         controller="mrof_dsmc", gains={**MROF_GAINS, "q": 2.0}, t_end=30.0),
    # Table 3
    _pi("table3-pi-smc", "PI-SMC under d = sin(2 pi t) on all channels",
        disturbance=dict(SINE_ALL), bounds=[1.0, 1.0, 1.0], t_end=5.0),
    dict(name="table3-dsmc", description="DSMC under d(k) = sin(2 pi k tau)",
         controller="dsmc", gains=dict(DSMC_GAINS), disturbance=dict(SINE_SAMPLED), t_end=30.0),
    dict(name="table3-mrof", description="MROF-DSMC under d(k) = sin(2 pi k tau)",
         controller="mrof_dsmc", gains=dict(MROF_GAINS), disturbance=dict(SINE_SAMPLED), t_end=30.0),
    # extra: disturbance matched with the coil voltage only
    _fl("matched-const-FL", "feedback linearization, d = 1 on the current channel only",
        disturbance={"kind": "constant", "amplitude": [0.0, 0.0, 1.0], "frame": "x"}, t_end=3.0),
    _pi("matched-const-pi-smc", "PI-SMC, d = 1 on the current channel only",
        disturbance={"kind": "constant", "amplitude": [0.0, 0.0, 1.0], "frame": "x"},
        bounds=[0.0, 0.0, 1.0], t_end=3.0),
]

PRESETS = {tree["name"]: tree for tree in _TREES}


def preset(name: str) -> Scenario:
    try:
        tree = PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; see list_presets()") from None
    return Scenario.from_dict(tree)


def list_presets() -> list[tuple[str, str]]:
    return [(name, tree.get("description", "")) for name, tree in PRESETS.items()]
