"""Episode orchestration: grid start, 10 Hz stepping over 100 Hz physics,
collision and lap detection, overtake accounting, and the dense racing reward.

One ``RaceEnv`` instance owns all episode state and is single-threaded; run
many instances with independent seeds for parallel workloads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np

from .adversary import AdversaryConfig, Context, adversary_action
from .dynamics import Action, VehicleParams, VehicleState, scale_action, step_physics, substep
from .errors import ConfigurationError, EpisodeProtocolError
from .raceline import Raceline, RacelineParams, compute_raceline
from .sensing import LidarConfig, apply_noise, rectangle_corners, scan
from .track import LapCounter, Track, TrackProjector, progress_fraction

CAUSES = ("none", "lap_complete", "wall_collision", "agent_collision", "timeout")


@dataclass(frozen=True)
class RewardConfig:
    crash_penalty: float = 1.0
    lap_bonus: float = 1.0
    overtake_bonus: float = 1.0
    normalize_cross_track: bool = False


@dataclass(frozen=True)
class EpisodeConfig:
    n_adversaries: int = 1
    start_spacing: float = 1.5
    max_steps: int = 3000
    n_substeps: int = 10
    physics_dt: float = 0.01
    context: Context | None = None
    context_sample_bound: float = 0.15
    start_offset: float = 0.0
    overtake_hysteresis: float = 0.1
    max_start_fraction: float = 0.5
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    lidar: LidarConfig = field(default_factory=LidarConfig)
    adversary: AdversaryConfig = field(default_factory=AdversaryConfig)
    reward: RewardConfig = field(default_factory=RewardConfig)

    def __post_init__(self) -> None:
        if self.n_adversaries < 0:
            raise ConfigurationError("n_adversaries must be >= 0")
        if self.start_spacing <= 0.0:
            raise ConfigurationError("start_spacing must be positive")
        if self.max_steps <= 0:
            raise ConfigurationError("max_steps must be positive")
        if self.n_substeps < 1 or self.physics_dt <= 0.0:
            raise ConfigurationError("invalid physics stepping parameters")


@dataclass
class StepResult:
    obs: np.ndarray
    reward: float
    done: bool
    info: dict


class OvertakeTracker:
    """Net pass/passed accounting between the agent and each adversary.

    A pass only registers once the progress gap crosses the hysteresis band
    (+h after having been below -h, or vice versa), so near-equal progress
    cannot chatter. Gaps are in meters of track progress in the agent's lap
    frame.
    """

    def __init__(self, agent_progress_m: float, adversary_progress_m: Sequence[float], hysteresis: float):
        self.h = hysteresis
        self.state = [
            "behind" if agent_progress_m <= p else "ahead" for p in adversary_progress_m
        ]

    def update(self, agent_progress_m: float, adversary_progress_m: Sequence[float]) -> tuple[int, int]:
        """Returns (passes performed, passes suffered) this step."""
        overtakes = 0
        overtaken = 0
        for k, p in enumerate(adversary_progress_m):
            rel = agent_progress_m - p
            if self.state[k] == "behind" and rel > self.h:
                self.state[k] = "ahead"
                overtakes += 1
            elif self.state[k] == "ahead" and rel < -self.h:
                self.state[k] = "behind"
                overtaken += 1
        return overtakes, overtaken


def rectangles_overlap(corners_a: np.ndarray, corners_b: np.ndarray) -> bool:
    """Separating-axis test for two oriented rectangles; touching counts."""
    for corners in (corners_a, corners_b):
        edges = np.roll(corners, -1, axis=0) - corners
        for k in range(2):  # two unique edge directions per rectangle
            axis = np.array([-edges[k][1], edges[k][0]])
            pa = corners_a @ axis
            pb = corners_b @ axis
            if pa.max() < pb.min() or pb.max() < pa.min():
                return False
    return True


def as_action(action) -> Action:
    if isinstance(action, Action):
        return action
    seq = np.asarray(action, dtype=float).reshape(-1)
    if seq.shape != (2,):
        raise ValueError(f"action must have exactly 2 components, got shape {seq.shape}")
    return Action(speed_cmd=float(seq[0]), steer_cmd=float(seq[1]))


class RaceEnv:
    """Head-to-head race episode with one trainable agent (vehicle index 0)."""

    def __init__(
        self,
        track: Track,
        config: EpisodeConfig | None = None,
        raceline: Raceline | None = None,
        raceline_params: RacelineParams | None = None,
    ):
        self.track = track
        self.cfg = config or EpisodeConfig()
        self.raceline = raceline or compute_raceline(track, raceline_params)
        n_cars = self.cfg.n_adversaries + 1
        if self.cfg.start_spacing * n_cars > self.cfg.max_start_fraction * track.total_length:
            raise ConfigurationError(
                f"start grid ({n_cars} cars at {self.cfg.start_spacing} m) exceeds "
                f"{self.cfg.max_start_fraction:.0%} of the track length"
            )
        self._trace: IO[str] | None = None
        self._active = False
        self._done = False

    # -- tracing -----------------------------------------------------------

    def set_trace(self, sink: IO[str] | None) -> None:
        """Attach a text sink receiving one JSON record per reset/step."""
        self._trace = sink

    def _emit(self, record: dict) -> None:
        if self._trace is not None:
            self._trace.write(json.dumps(record, separators=(",", ":")) + "\n")

    # -- episode lifecycle ---------------------------------------------------

    def reset(self, seed: int, context: Context | None = None) -> tuple[np.ndarray, dict]:
        """Start a new episode; vehicles line up on the centerline at rest.

        The trainable agent is rearmost and its initial position defines the
        start/finish line. The context is taken from the argument, else the
        configured one, else sampled uniformly from the training range.
        """
        cfg = self.cfg
        self.rng = np.random.default_rng(seed)
        self.seed = int(seed)
        if context is None:
            context = cfg.context
        if context is None:
            b = cfg.context_sample_bound
            draw = self.rng.uniform(-b, b, size=2)
            context = Context(float(draw[0]), float(draw[1]))
        self.context = context

        track = self.track
        self.s_start = cfg.start_offset % track.total_length
        self.vehicles: list[VehicleState] = []
        for i in range(cfg.n_adversaries + 1):
            s = (self.s_start + cfg.start_spacing * i) % track.total_length
            x, y, heading = track.pose_at(s)
            self.vehicles.append(VehicleState.at_rest(x, y, heading))

        self.projectors = [TrackProjector(track) for _ in self.vehicles]
        poses = [p.project(v.x, v.y, v.yaw) for p, v in zip(self.projectors, self.vehicles)]
        self.lap_counters = [LapCounter(track.total_length, pose.s) for pose in poses]
        self._progress_m = [self._vehicle_progress_m(pose.s, 0) for pose in poses]
        self.max_progress = 0.0
        self.overtake_score = 0
        self._overtakes = OvertakeTracker(
            self._progress_m[0], self._progress_m[1:], cfg.overtake_hysteresis
        )
        self._halted = [False] * cfg.n_adversaries
        self.step_idx = 0
        self._done = False
        self._active = True
        self.cause = "none"

        obs = self._observe()
        info = self._info(
            action=None, events={"lap": False, "crash": False, "overtakes": 0, "overtaken": 0},
            overtake_delta=0,
        )
        info["context"] = self.context.as_list()
        info["seed"] = self.seed
        self._emit(
            {
                "type": "header",
                "seed": self.seed,
                "context": self.context.as_list(),
                "n_adversaries": cfg.n_adversaries,
                "start_spacing": cfg.start_spacing,
                "max_steps": cfg.max_steps,
                "track_length": self.track.total_length,
            }
        )
        return obs, info

    def step(self, action) -> StepResult:
        """Advance one control period (all cars), then score and observe."""
        if not self._active:
            raise EpisodeProtocolError("step before reset")
        if self._done:
            raise EpisodeProtocolError("step after episode end; call reset")
        cfg = self.cfg
        action = as_action(action)

        # 1) adversary commands from the pre-step world state
        adv_actions = [
            adversary_action(self.vehicles[k + 1], self.raceline, cfg.adversary, self.context, cfg.vehicle)
            for k in range(cfg.n_adversaries)
        ]

        # 2) physics: every moving vehicle advances n_substeps at the physics rate
        self.vehicles[0] = substep(self.vehicles[0], action, cfg.vehicle, cfg.n_substeps, cfg.physics_dt)
        for k in range(cfg.n_adversaries):
            if not self._halted[k]:
                self.vehicles[k + 1] = substep(
                    self.vehicles[k + 1], adv_actions[k], cfg.vehicle, cfg.n_substeps, cfg.physics_dt
                )

        # 3) track poses, lap counting, progress
        poses = [p.project(v.x, v.y, v.yaw) for p, v in zip(self.projectors, self.vehicles)]
        laps = [counter.update(pose.s) for counter, pose in zip(self.lap_counters, poses)]
        self._progress_m = [self._vehicle_progress_m(pose.s, lap) for pose, lap in zip(poses, laps)]
        agent_progress = self._progress_m[0] / self.track.total_length
        lapped = agent_progress >= 1.0
        self.max_progress = max(self.max_progress, agent_progress)

        # 4) collisions
        rects = [
            rectangle_corners(v.x, v.y, v.yaw, cfg.vehicle.body_length, cfg.vehicle.body_width)
            for v in self.vehicles
        ]
        agent_hit = any(
            rectangles_overlap(rects[0], rects[k + 1]) for k in range(cfg.n_adversaries)
        )
        wall_hit = self._body_outside(rects[0])
        adv_wall = []
        adv_adv = []
        for k in range(cfg.n_adversaries):
            if self._body_outside(rects[k + 1]):
                adv_wall.append(k)
            for j in range(k + 1, cfg.n_adversaries):
                if rectangles_overlap(rects[k + 1], rects[j + 1]):
                    adv_adv.extend([k, j])
        for k in set(adv_wall) | set(adv_adv):
            self._halted[k] = True

        # 5) overtake accounting with hysteresis on the progress gap
        overtakes, overtaken = self._overtakes.update(self._progress_m[0], self._progress_m[1:])
        overtake_delta = overtakes - overtaken
        self.overtake_score += overtake_delta

        # 6) termination (exactly one cause) and reward
        self.step_idx += 1
        crashed = wall_hit or agent_hit
        if wall_hit:
            self.cause = "wall_collision"
        elif agent_hit:
            self.cause = "agent_collision"
        elif lapped:
            self.cause = "lap_complete"
        elif self.step_idx >= cfg.max_steps:
            self.cause = "timeout"
        else:
            self.cause = "none"
        self._done = self.cause != "none"

        events = {"lap": lapped, "crash": crashed, "overtakes": overtakes, "overtaken": overtaken}
        reward = compute_reward(
            poses[0], self.vehicles[0].v, cfg.vehicle.v_max, events, cfg.reward
        )

        obs = self._observe()
        info = self._info(action=action, events=events, overtake_delta=overtake_delta)
        if adv_wall or adv_adv:
            info["adversary_contacts"] = {"wall": adv_wall, "mutual": sorted(set(adv_adv))}
        self._emit(
            {
                "type": "step",
                "t": self.step_idx,
                "action": [action.speed_cmd, action.steer_cmd],
                "reward": reward,
                "done": self._done,
                "cause": self.cause,
                "progress": agent_progress,
                "max_progress": self.max_progress,
                "overtake_delta": overtake_delta,
                "overtake_score": self.overtake_score,
                "events": events,
                "poses": info["poses"],
            }
        )
        return StepResult(obs=obs, reward=reward, done=self._done, info=info)

    @property
    def done(self) -> bool:
        return self._done

    # -- internals -----------------------------------------------------------

    def _vehicle_progress_m(self, s: float, laps: int) -> float:
        L = self.track.total_length
        return ((s - self.s_start) % L) + laps * L

    def _body_outside(self, corners: np.ndarray) -> bool:
        return any(not self.track.project(cx, cy).inside for cx, cy in corners)

    def _observe(self) -> np.ndarray:
        agent = self.vehicles[0]
        others = [(v, self.cfg.vehicle) for v in self.vehicles[1:]]
        beams = scan(agent, self.track, others, self.cfg.lidar)
        return apply_noise(beams, self.rng, self.cfg.lidar.noise_std)

    def _info(self, action, events, overtake_delta) -> dict:
        poses = [[v.x, v.y, v.yaw, v.v] for v in self.vehicles]
        return {
            "progress": self._progress_m[0] / self.track.total_length,
            "max_progress": self.max_progress,
            "overtake_delta": overtake_delta,
            "overtake_score": self.overtake_score,
            "cause": self.cause,
            "events": events,
            "poses": poses,
        }


def compute_reward(
    pose, v: float, v_max: float, events: dict, cfg: RewardConfig | None = None
) -> float:
    """Dense cross-track/heading term plus event bonuses and penalties.

    dense = (v / v_max) * cos(phi) - d_c;  crash -1, lap +1, each overtake
    performed +1 and each suffered -1 (scaled by the configured magnitudes).
    """
    cfg = cfg or RewardConfig()
    d_c = pose.d_c
    if cfg.normalize_cross_track:
        d_c = d_c / pose.bound
    reward = (v / v_max) * math.cos(pose.phi) - d_c
    if events.get("crash"):
        reward -= cfg.crash_penalty
    if events.get("lap"):
        reward += cfg.lap_bonus
    reward += cfg.overtake_bonus * (events.get("overtakes", 0) - events.get("overtaken", 0))
    return reward
