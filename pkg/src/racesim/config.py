"""YAML environment configuration: every tunable block in one file.

Unknown keys are rejected so typos fail loudly rather than silently running
defaults. Track file paths are resolved relative to the config file.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import yaml

from .adversary import AdversaryConfig, Context
from .dynamics import VehicleParams
from .env import EpisodeConfig, RaceEnv, RewardConfig
from .errors import ConfigurationError
from .raceline import Raceline, RacelineParams, cached_raceline
from .sensing import LidarConfig
from .track import GENERATORS, Track, load_track

_TOP_KEYS = {"track", "raceline", "episode", "vehicle", "lidar", "adversary", "reward"}
_TRACK_KEYS = {"file", "generator", "params"}
_RACELINE_KEYS = {
    "file", "cache_dir", "a_lat_max", "a_long_max", "v_max", "margin",
    "spacing", "opt_tol", "max_iter",
}
_EPISODE_KEYS = {
    "n_adversaries", "start_spacing", "max_steps", "n_substeps", "physics_dt",
    "context", "context_sample_bound", "start_offset", "overtake_hysteresis",
    "max_start_fraction", "seed",
}


@dataclass
class RaceSetup:
    """Everything needed to construct and run environments."""

    track: Track
    raceline: Raceline
    config: EpisodeConfig
    seed: int

    def make_env(self) -> RaceEnv:
        return RaceEnv(self.track, self.config, raceline=self.raceline)


def _check_keys(section: str, data: dict, allowed: set) -> None:
    unknown = set(data) - allowed
    if unknown:
        raise ConfigurationError(
            f"unknown key(s) in {section!r} section: {', '.join(sorted(unknown))}"
        )


def _build_dataclass(section, cls, data):
    _check_keys(section, data, {f for f in cls.__dataclass_fields__})
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigurationError(f"bad {section!r} section: {exc}") from None


def load_config(path) -> RaceSetup:
    with open(path, "r") as f:
        data = yaml.safe_load(f) or {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: top level must be a mapping")
    return setup_from_dict(data, base_dir=os.path.dirname(os.path.abspath(path)))


def setup_from_dict(data: dict, base_dir: str = ".") -> RaceSetup:
    _check_keys("top-level", data, _TOP_KEYS)

    track_spec = dict(data.get("track") or {"generator": "oval"})
    _check_keys("track", track_spec, _TRACK_KEYS)
    if "file" in track_spec and "generator" in track_spec:
        raise ConfigurationError("track: give either 'file' or 'generator', not both")
    if "file" in track_spec:
        track = load_track(os.path.join(base_dir, track_spec["file"]))
    else:
        name = track_spec.get("generator", "oval")
        if name not in GENERATORS:
            raise ConfigurationError(
                f"unknown track generator {name!r}; choose from {sorted(GENERATORS)}"
            )
        track = GENERATORS[name](**(track_spec.get("params") or {}))

    vehicle = _build_dataclass("vehicle", VehicleParams, dict(data.get("vehicle") or {}))
    lidar = _build_dataclass("lidar", LidarConfig, dict(data.get("lidar") or {}))
    adversary = _build_dataclass("adversary", AdversaryConfig, dict(data.get("adversary") or {}))
    reward = _build_dataclass("reward", RewardConfig, dict(data.get("reward") or {}))

    raceline_spec = dict(data.get("raceline") or {})
    _check_keys("raceline", raceline_spec, _RACELINE_KEYS)
    raceline_file = raceline_spec.pop("file", None)
    cache_dir = raceline_spec.pop("cache_dir", None)
    raceline_spec.setdefault("v_max", vehicle.v_max)
    rl_params = _build_dataclass("raceline", RacelineParams, raceline_spec)
    raceline = cached_raceline(
        track,
        rl_params,
        cache_dir=os.path.join(base_dir, cache_dir) if cache_dir else None,
        raceline_file=os.path.join(base_dir, raceline_file) if raceline_file else None,
    )

    episode_spec = dict(data.get("episode") or {})
    _check_keys("episode", episode_spec, _EPISODE_KEYS)
    seed = int(episode_spec.pop("seed", 0))
    ctx = episode_spec.pop("context", None)
    context = None
    if ctx is not None:
        if not isinstance(ctx, (list, tuple)) or len(ctx) != 2:
            raise ConfigurationError("episode.context must be a [speed, steer] pair or null")
        context = Context(float(ctx[0]), float(ctx[1]))
    config = EpisodeConfig(
        context=context,
        vehicle=vehicle,
        lidar=lidar,
        adversary=adversary,
        reward=reward,
        **episode_spec,
    )
    return RaceSetup(track=track, raceline=raceline, config=config, seed=seed)


def default_config() -> dict:
    """A complete, commented-by-structure starting configuration."""
    return {
        "track": {"generator": "oval", "params": {}},
        "raceline": {},
        "episode": {
            "n_adversaries": 1,
            "start_spacing": 1.5,
            "max_steps": 3000,
            "context": [0.0, 0.0],
            "seed": 0,
        },
        "vehicle": {},
        "lidar": {},
        "adversary": {},
        "reward": {},
    }


def write_default_config(path) -> None:
    with open(path, "w") as f:
        yaml.safe_dump(default_config(), f, sort_keys=False)
