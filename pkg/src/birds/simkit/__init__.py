"""Scenario configuration, the simulation loop, experiment sweeps and CSV output."""

from birds.simkit.config import Scenario, load_scenario, parse_scenario
from birds.simkit.engine import RunResult, Simulation, UavState, run_scenario
from birds.simkit.metrics import MetricsRow, emit_csv

__all__ = [
    "MetricsRow", "RunResult", "Scenario", "Simulation", "UavState", "emit_csv",
    "load_scenario", "parse_scenario", "run_scenario",
]
