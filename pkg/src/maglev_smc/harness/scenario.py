"""Scenario description: a flat key-value tree that fully determines a run.

Schema (every key optional except ``controller``)::

    name: str
    description: str
    controller: pi_smc | fl_baseline | dsmc | mrof_dsmc
    gains: {...}            # controller-specific, see CONTROLLER_KEYS
    plant: {R, L1, g_c, m, mu0, A_perm, N_turns, Q, x1d}
    plant_true: {...}       # overrides applied to the simulated plant only
    disturbance:
      kind: none | constant | sinusoid
      amplitude: float or [d1, d2, d3]
      frequency: Hz
      frame: x | z          # original or Brunovsky coordinates
      hold: seconds, or "control" for the controller interval
    bounds: [D1, D2, D3]    # declared disturbance bounds (PI-SMC validation)
    reference: {kind: constant | square | sine, amplitude, frequency}
    initial: [p, v, i]
    dt: s
    t_end: s
    seed: int
    noise_std: m            # additive position-sensor noise (mrof_dsmc)
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

from ..plant import DEFAULT_INITIAL, PlantParams

CONTROLLERS = ("pi_smc", "fl_baseline", "dsmc", "mrof_dsmc")

CONTROLLER_KEYS = {
    "pi_smc": {"poles", "M", "k4", "k5", "k0", "alpha_pow", "eta"},
    "fl_baseline": {"poles", "M"},
    "dsmc": {"M", "q", "eps", "tau", "d_bounds"},
    "mrof_dsmc": {"tau", "rho", "N", "q", "eps", "M", "d_bounds", "r_bounds", "n_bounds",
                  "channel", "length_unit"},
}

DEFAULT_DT = {"pi_smc": 1e-4, "fl_baseline": 1e-4, "dsmc": 1e-3, "mrof_dsmc": 1e-3}

_PLANT_KEYS = {f.name for f in fields(PlantParams)}


class ScenarioError(ValueError):
    """The scenario tree is malformed or inconsistent."""


def _amplitude3(a) -> list:
    if isinstance(a, (int, float)):
        return [float(a)] * 3
    a = [float(x) for x in a]
    if len(a) != 3:
        raise ScenarioError("disturbance amplitude must be a number or three numbers")
    return a


@dataclass
class Scenario:
    controller: str
    name: str = "scenario"
    description: str = ""
    gains: dict = field(default_factory=dict)
    plant: dict = field(default_factory=dict)
    plant_true: dict = field(default_factory=dict)
    disturbance: dict = field(default_factory=lambda: {"kind": "none"})
    bounds: list = field(default_factory=lambda: [0.0, 0.0, 0.0])
    reference: dict = field(default_factory=lambda: {"kind": "constant"})
    initial: list = field(default_factory=lambda: DEFAULT_INITIAL.as_array().tolist())
    dt: float = None
    t_end: float = 5.0
    seed: int = 0
    noise_std: float = 0.0

    def __post_init__(self):
        if self.dt is None and self.controller in DEFAULT_DT:
            self.dt = DEFAULT_DT[self.controller]
        self.validate()

    def validate(self):
        if self.controller not in CONTROLLERS:
            raise ScenarioError(f"unknown controller {self.controller!r}; choose from {CONTROLLERS}")
        extra = set(self.gains) - CONTROLLER_KEYS[self.controller]
        if extra:
            raise ScenarioError(f"gain keys {sorted(extra)} do not apply to {self.controller}")
        for tree in (self.plant, self.plant_true):
            bad = set(tree) - _PLANT_KEYS
            if bad:
                raise ScenarioError(f"unknown plant keys {sorted(bad)}")
        try:
            self.model_params()
            self.true_params()
        except ValueError as exc:
            raise ScenarioError(str(exc)) from exc
        kind = self.disturbance.get("kind", "none")
        if kind not in ("none", "constant", "sinusoid"):
            raise ScenarioError(f"unknown disturbance kind {kind!r}")
        if self.disturbance.get("frame", "x") not in ("x", "z"):
            raise ScenarioError("disturbance frame must be 'x' or 'z'")
        hold = self.disturbance.get("hold", 0.0)
        if not (hold == "control" or (isinstance(hold, (int, float)) and hold >= 0)):
            raise ScenarioError("disturbance hold must be a non-negative number or 'control'")
        _amplitude3(self.disturbance.get("amplitude", 0.0))
        if len(self.bounds) != 3 or any(float(b) < 0 for b in self.bounds):
            raise ScenarioError("bounds must be three non-negative numbers")
        rk = self.reference.get("kind", "constant")
        if rk not in ("constant", "square", "sine"):
            raise ScenarioError(f"unknown reference kind {rk!r}")
        if rk != "constant" and self.controller not in ("pi_smc", "fl_baseline"):
            raise ScenarioError("time-varying references are supported for pi_smc and fl_baseline only")
        if len(self.initial) != 3 or not all(math.isfinite(float(v)) for v in self.initial):
            raise ScenarioError("initial must be three finite numbers [p, v, i]")
        if float(self.initial[0]) <= 0:
            raise ScenarioError("initial position must be positive")
        for name in ("dt", "t_end"):
            val = getattr(self, name)
            if not (isinstance(val, (int, float)) and val > 0 and math.isfinite(val)):
                raise ScenarioError(f"{name} must be a positive number")
        if self.noise_std < 0:
            raise ScenarioError("noise_std must be non-negative")

    def model_params(self) -> PlantParams:
        """Parameters the controller is designed with."""
        return PlantParams(**{k: float(v) for k, v in self.plant.items()})

    def true_params(self) -> PlantParams:
        """Parameters of the simulated plant."""
        merged = {**self.plant, **self.plant_true}
        return PlantParams(**{k: float(v) for k, v in merged.items()})

    def disturbance_amplitude(self) -> list:
        return _amplitude3(self.disturbance.get("amplitude", 0.0))

    def to_dict(self) -> dict:
        return {f.name: copy.deepcopy(getattr(self, f.name)) for f in fields(self)}

    @classmethod
    def from_dict(cls, tree: dict) -> "Scenario":
        if not isinstance(tree, dict):
            raise ScenarioError("scenario must be a mapping")
        known = {f.name for f in fields(cls)}
        unknown = set(tree) - known
        if unknown:
            raise ScenarioError(f"unknown scenario keys {sorted(unknown)}")
        if "controller" not in tree:
            raise ScenarioError("scenario needs a 'controller'")
        return cls(**copy.deepcopy(tree))

    def replace(self, **changes) -> "Scenario":
        tree = self.to_dict()
        tree.update({k: v for k, v in changes.items() if v is not None})
        return Scenario.from_dict(tree)


def load_scenario(path) -> Scenario:
    """Read a scenario from a YAML or JSON file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc}") from exc
    try:
        tree = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ScenarioError(f"cannot parse {path}: {exc}") from exc
    tree = tree or {}
    if not isinstance(tree, dict):
        raise ScenarioError(f"{path}: top level must be a mapping")
    tree.setdefault("name", path.stem)
    return Scenario.from_dict(tree)


def dump_scenario(scenario: Scenario, path) -> None:
    path = Path(path)
    tree = scenario.to_dict()
    if path.suffix == ".json":
        path.write_text(json.dumps(tree, indent=2))
    else:
        path.write_text(yaml.safe_dump(tree, sort_keys=False))


def as_jsonable(obj: Any) -> Any:
    """Best-effort conversion of numpy scalars/arrays inside a tree."""
    if isinstance(obj, dict):
        return {k: as_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [as_jsonable(v) for v in obj]
    if hasattr(obj, "tolist"):
        return obj.tolist()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj
