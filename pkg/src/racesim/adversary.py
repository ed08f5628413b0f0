"""Context-parameterized rules-based opponents.

An adversary steers toward a lookahead point on the precomputed driving line
(pure pursuit) and commands the speed stored at that point, attenuated to
30% and then scaled by the episode context. The context only enters through
two scale factors, so behavior within an episode is fixed by the context
chosen at reset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .dynamics import Action, VehicleParams, VehicleState, clamp, substep, wrap_angle
from .errors import ConfigurationError
from .raceline import Raceline

EVAL_CONTEXT_BOUND = 0.3
TRAIN_CONTEXT_BOUND = 0.15


@dataclass(frozen=True)
class Context:
    """Per-episode coefficients scaling adversary speed and steering behavior."""

    speed_coeff: float = 0.0
    steer_coeff: float = 0.0

    def __post_init__(self) -> None:
        bound = EVAL_CONTEXT_BOUND + 1e-9
        if abs(self.speed_coeff) > bound or abs(self.steer_coeff) > bound:
            raise ConfigurationError(
                f"context {self.speed_coeff, self.steer_coeff} outside evaluation "
                f"envelope [-{EVAL_CONTEXT_BOUND}, {EVAL_CONTEXT_BOUND}]"
            )

    def in_distribution(self) -> bool:
        bound = TRAIN_CONTEXT_BOUND + 1e-9
        return abs(self.speed_coeff) <= bound and abs(self.steer_coeff) <= bound

    def as_list(self) -> list[float]:
        return [self.speed_coeff, self.steer_coeff]


@dataclass(frozen=True)
class AdversaryConfig:
    base_lookahead: float = 1.2
    lambda_v: float = 1.0
    lambda_theta: float = 1.0
    speed_attenuation: float = 0.3

    def __post_init__(self) -> None:
        if self.base_lookahead <= 0.0:
            raise ConfigurationError("base_lookahead must be positive")
        if not 0.0 < self.speed_attenuation <= 1.0:
            raise ConfigurationError("speed_attenuation must be in (0, 1]")
        if 1.0 - abs(self.lambda_theta) * EVAL_CONTEXT_BOUND <= 0.0:
            raise ConfigurationError(
                "lambda_theta too large: lookahead factor must stay positive "
                "over the context envelope"
            )


def pure_pursuit_steer(
    state: VehicleState, goal: tuple[float, float], params: VehicleParams
) -> float:
    """Steering angle that arcs the wheelbase through the goal point.

    alpha is the heading error to the goal in the vehicle frame; the classic
    geometric law steer = atan(2 L sin(alpha) / l_d) follows the circle of
    chord l_d through the goal, clamped to the steering range.
    """
    dx = goal[0] - state.x
    dy = goal[1] - state.y
    l_d = math.hypot(dx, dy)
    if l_d < 1e-9:
        raise ValueError("pure pursuit goal coincides with the vehicle position")
    alpha = wrap_angle(math.atan2(dy, dx) - state.yaw)
    steer = math.atan(2.0 * params.wheelbase * math.sin(alpha) / l_d)
    return clamp(steer, -params.steer_max, params.steer_max)


def effective_lookahead(cfg: AdversaryConfig, ctx: Context) -> float:
    return cfg.base_lookahead * (1.0 + cfg.lambda_theta * ctx.steer_coeff)


def adversary_command(
    state: VehicleState,
    raceline: Raceline,
    cfg: AdversaryConfig,
    ctx: Context,
    params: VehicleParams,
) -> tuple[float, float]:
    """(steer [rad], commanded speed [m/s] before the v_max clamp)."""
    goal, goal_speed = raceline.lookahead_from(state.x, state.y, effective_lookahead(cfg, ctx))
    steer = pure_pursuit_steer(state, (goal[0], goal[1]), params)
    speed = goal_speed * cfg.speed_attenuation * (1.0 + cfg.lambda_v * ctx.speed_coeff)
    return steer, speed


def adversary_action(
    state: VehicleState,
    raceline: Raceline,
    cfg: AdversaryConfig,
    ctx: Context,
    params: VehicleParams,
) -> Action:
    """Normalized action for one adversary given the pre-step world state."""
    steer, speed = adversary_command(state, raceline, cfg, ctx, params)
    speed = clamp(speed, 0.0, params.v_max)
    return Action(
        speed_cmd=clamp(2.0 * speed / params.v_max - 1.0, -1.0, 1.0),
        steer_cmd=clamp(steer / params.steer_max, -1.0, 1.0),
    )


def simulate_pursuit(
    raceline: Raceline,
    cfg: AdversaryConfig,
    ctx: Context,
    params: VehicleParams,
    start: VehicleState,
    n_steps: int,
    n_substeps: int = 10,
    dt: float = 0.01,
) -> list[VehicleState]:
    """Drive a lone pursuit vehicle in closed loop; returns states per control step."""
    states = [start]
    state = start
    for _ in range(n_steps):
        action = adversary_action(state, raceline, cfg, ctx, params)
        state = substep(state, action, params, n_substeps, dt)
        states.append(state)
    return states
