"""Deterministic head-to-head racing simulator with context-driven adversaries."""

from .adversary import AdversaryConfig, Context
from .dynamics import Action, VehicleParams, VehicleState, scale_action, step_physics, substep
from .env import EpisodeConfig, RaceEnv, RewardConfig, StepResult
from .raceline import Raceline, RacelineParams, compute_raceline, load_raceline, save_raceline
from .sensing import LidarConfig, scan
from .track import Track, load_track, make_oval, make_single_corner, make_square, save_track

__all__ = [
    "Action",
    "AdversaryConfig",
    "Context",
    "EpisodeConfig",
    "LidarConfig",
    "RaceEnv",
    "Raceline",
    "RacelineParams",
    "RewardConfig",
    "StepResult",
    "Track",
    "VehicleParams",
    "VehicleState",
    "compute_raceline",
    "load_raceline",
    "load_track",
    "make_oval",
    "make_single_corner",
    "make_square",
    "save_raceline",
    "save_track",
    "scale_action",
    "scan",
    "step_physics",
    "substep",
]
