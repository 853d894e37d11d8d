"""drivetune: a deterministic longitudinal-driving workbench.

The package closes the loop from PID gain values to a leaderboard-style
driving score on a frozen, seeded scenario suite, and automates the
retuning step with derivative-free search.
"""
from .config import SimConfig
from .control import PRESETS, ControlAction, GainSet, PidState, resolve_gains
from .fusion import FusionWeight, Situation, SituationWindow, detect_situation, fuse
from .plant import PlantParams, VehicleState, default_params, step
from .scenario import Scenario, WeatherProfile, build_routes, build_suite
from .scoring import (
    InfractionEvent,
    RunResult,
    ScoreCard,
    ShutdownEvent,
    aggregate,
    driving_score,
    penalty_score,
)
from .simloop import simulate_run

__version__ = "0.1.0"

__all__ = [
    "ControlAction",
    "FusionWeight",
    "GainSet",
    "InfractionEvent",
    "PRESETS",
    "PidState",
    "PlantParams",
    "RunResult",
    "ScoreCard",
    "Scenario",
    "ShutdownEvent",
    "SimConfig",
    "Situation",
    "SituationWindow",
    "VehicleState",
    "WeatherProfile",
    "aggregate",
    "build_routes",
    "build_suite",
    "default_params",
    "detect_situation",
    "driving_score",
    "fuse",
    "penalty_score",
    "resolve_gains",
    "simulate_run",
    "step",
    "__version__",
]
