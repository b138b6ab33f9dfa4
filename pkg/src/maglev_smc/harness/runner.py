"""Build controllers from scenarios, run them, and compare the results."""

from __future__ import annotations

import logging
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .. import dsmc, metrics, mrof, pi_smc
from ..discrete import discretize, mean_spread
from ..linearization import BrunovskyModel
from ..plant import DisturbanceSpec, PlantState, SimTrace, SimulationAborted, integrate
from .scenario import Scenario, ScenarioError

log = logging.getLogger(__name__)


@dataclass
class RunRecord:
    """Everything one run produced.

    ``status`` is ``"ok"``, ``"aborted"`` (plant singularity or divergence,
    partial trace kept) or ``"error"`` (the run could not start).
    """

    scenario: dict
    trace: Optional[SimTrace]
    metrics: Optional[metrics.MetricReport]
    warnings: list
    wall_time: float
    status: str = "ok"
    message: str = ""
    events: dict = field(default_factory=dict)
    controller_log: dict = field(default_factory=dict)

    @property
    def name(self) -> str:
        return self.scenario.get("name", "?")

    @property
    def controller(self) -> str:
        return self.scenario.get("controller", "?")

    def summary(self) -> dict:
        out = {"name": self.name, "controller": self.controller, "status": self.status,
               "message": self.message, "warnings": list(self.warnings),
               "events": dict(self.events), "wall_time": self.wall_time}
        if self.metrics is not None:
            out["metrics"] = self.metrics.as_dict()
        return out


def _reference(sc: Scenario, x1d: float):
    ref = sc.reference
    kind = ref.get("kind", "constant")
    amp = float(ref.get("amplitude", 0.005))
    freq = float(ref.get("frequency", 1.0))
    if kind == "square":
        return pi_smc.square_reference(x1d, amp, freq)
    if kind == "sine":
        return pi_smc.sine_reference(x1d, amp, freq)
    return None


def build_controller(sc: Scenario):
    """Controller object plus the list of validator warnings for ``sc``."""
    params = sc.model_params()
    g = sc.gains
    notes: list[str] = []
    if sc.controller in ("pi_smc", "fl_baseline"):
        gains = pi_smc.PiSmcGains.default(
            poles=g.get("poles", pi_smc.DEFAULT_POLES), M=g.get("M", pi_smc.DEFAULT_M),
            **{k: float(g[k]) for k in ("k4", "k5", "k0", "alpha_pow", "eta") if k in g})
        report = pi_smc.validate_gains(gains, sc.bounds)
        if sc.controller == "fl_baseline":
            ctrl = pi_smc.fl_controller(params, gains, sc.dt, _reference(sc, params.x1d))
        else:
            notes += [f"gain condition '{c.name}' fails (margin {c.margin:.4g})"
                      for c in report.checks if not c.passed]
            ctrl = pi_smc.PiSmcController(params, gains, sc.dt, _reference(sc, params.x1d))
        return ctrl, notes

    if sc.controller == "dsmc":
        d_l, d_u = g.get("d_bounds", (-0.001, 0.005))
        d_m, d_s = mean_spread(float(d_l), float(d_u))
        gains = dsmc.DsmcGains(M=np.asarray(g.get("M", (60000.0, 4700.0, 120.0)), dtype=float),
                               q=float(g.get("q", 0.4)), eps=float(g.get("eps", 0.3)),
                               tau=float(g.get("tau", 0.1)), d_m=d_m, d_s=d_s)
        bound = dsmc.qsm_band_bound(gains, warn=False)
        notes += bound.messages()
        sys = discretize(BrunovskyModel.maglev(), gains.tau)
        if not dsmc.design_surface_projected(sys, gains.M).stable:
            notes.append("projected sliding dynamics are not Schur stable")
        if not dsmc.design_surface_regular_form(sys, gains.M).stable:
            notes.append("regular-form sliding dynamics are not Schur stable")
        return dsmc.DsmcController(params, gains, sys), notes

    kw = {}
    for key in ("tau", "rho", "q", "eps", "length_unit"):
        if key in g:
            kw[key] = float(g[key])
    if "N" in g:
        kw["N"] = int(g["N"])
    for key in ("d_bounds", "r_bounds", "n_bounds", "channel"):
        if key in g:
            kw[key] = tuple(float(v) for v in g[key])
    if "M" in g:
        kw["M"] = np.asarray(g["M"], dtype=float)
    cfg = mrof.MrofConfig(**kw)
    ctrl = mrof.MrofController(params, cfg, noise_std=sc.noise_std, seed=sc.seed)
    report = mrof.validate_theorem2(cfg, ctrl.gains, ctrl.sys_tau)
    notes += report.warnings()
    return ctrl, notes


def build_disturbance(sc: Scenario, ctrl) -> DisturbanceSpec:
    d = sc.disturbance
    kind = d.get("kind", "none")
    if kind == "none":
        return DisturbanceSpec()
    hold = d.get("hold", 0.0)
    if hold == "control":
        hold = ctrl.hold.period if sc.controller in ("pi_smc", "fl_baseline") else _control_interval(ctrl)
    return DisturbanceSpec(kind, tuple(sc.disturbance_amplitude()), float(d.get("frequency", 1.0)),
                           frame=d.get("frame", "x"), hold=float(hold))


def _control_interval(ctrl) -> float:
    if isinstance(ctrl, dsmc.DsmcController):
        return ctrl.gains.tau
    return ctrl.cfg.tau


def run(sc: Scenario) -> RunRecord:
    """Simulate one scenario; never raises for plant-side failures."""
    t0 = time.perf_counter()
    snapshot = sc.to_dict()
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            ctrl, notes = build_controller(sc)
        dist = build_disturbance(sc, ctrl)
        initial = PlantState(*(float(v) for v in sc.initial))
        true = sc.true_params()
    except (ValueError, ScenarioError) as exc:
        return RunRecord(snapshot, None, None, [], time.perf_counter() - t0, "error", str(exc))

    status, message = "ok", ""
    try:
        trace = integrate(true, initial, ctrl, dist, dt=sc.dt, t_end=sc.t_end)
    except SimulationAborted as exc:
        trace, status, message = exc.trace, "aborted", str(exc)
        log.warning("%s: %s", sc.name, message)
    except ValueError as exc:
        return RunRecord(snapshot, None, None, notes, time.perf_counter() - t0, "error", str(exc))

    report = None
    if trace is not None and len(trace) >= 2:
        setpoint = None if sc.reference.get("kind", "constant") != "constant" else sc.model_params().x1d
        report = metrics.compute(trace, setpoint)
    ctrl_log = {k: np.asarray(v).tolist() for k, v in getattr(ctrl, "log", {}).items()}
    return RunRecord(snapshot, trace, report, notes, time.perf_counter() - t0, status, message,
                     dict(trace.events if trace is not None else {}), ctrl_log)


def _run_tree(tree: dict) -> RunRecord:
    return run(Scenario.from_dict(tree))


def run_batch(scenarios: Sequence[Scenario], parallelism: int = 1) -> list[RunRecord]:
    """Run scenarios, optionally across processes; output order follows input."""
    scenarios = list(scenarios)
    if not scenarios:
        raise ValueError("empty batch")
    if parallelism <= 1 or len(scenarios) == 1:
        return [run(sc) for sc in scenarios]
    trees = [sc.to_dict() for sc in scenarios]
    with ProcessPoolExecutor(max_workers=min(parallelism, len(trees))) as pool:
        return list(pool.map(_run_tree, trees))


COMPARE_COLUMNS = ("iae", "itae", "t_s", "e_delta_max", "chatter_amp", "chatter_freq", "u_ss", "i_ss")


def compare(records: Sequence) -> list[dict]:
    """One row per record with the comparison metrics.

    Accepts :class:`RunRecord` objects or their ``summary()`` dicts.
    """
    rows = []
    for rec in records:
        summ = rec.summary() if isinstance(rec, RunRecord) else rec
        row = {"name": summ["name"], "controller": summ["controller"], "status": summ["status"]}
        m = summ.get("metrics") or {}
        for col in COMPARE_COLUMNS:
            val = m.get(col)
            row[col] = math.nan if val is None else float(val)
        rows.append(row)
    return rows


def format_table(rows: list[dict]) -> str:
    head = ["name", "controller", "status"] + list(COMPARE_COLUMNS)
    body = []
    for r in rows:
        body.append([str(r["name"]), str(r["controller"]), str(r["status"])]
                    + [f"{r[c]:.4g}" for c in COMPARE_COLUMNS])
    widths = [max(len(h), *(len(b[j]) for b in body)) for j, h in enumerate(head)]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    lines = [fmt.format(*head), fmt.format(*("-" * w for w in widths))]
    lines += [fmt.format(*b) for b in body]
    return "\n".join(lines)
