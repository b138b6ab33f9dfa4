"""Scenario files, presets, batch runs and the command-line entry point."""

from .presets import PRESETS, list_presets, preset
from .runner import RunRecord, build_controller, compare, format_table, run, run_batch
from .scenario import Scenario, ScenarioError, dump_scenario, load_scenario

__all__ = [
    "PRESETS", "RunRecord", "Scenario", "ScenarioError", "build_controller", "compare",
    "dump_scenario", "format_table", "list_presets", "load_scenario", "preset", "run", "run_batch",
]
