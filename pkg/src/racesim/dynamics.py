"""Kinematic single-track vehicle model stepped at a fixed physics rate.

All functions here are pure: the successor state is a deterministic function
of (state, command, params, dt), so stepping is bit-reproducible and safe to
call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigurationError

TWO_PI = 2.0 * math.pi


def wrap_angle(angle: float) -> float:
    """Wrap an angle to the interval (-pi, pi]."""
    a = math.fmod(angle, TWO_PI)
    if a <= -math.pi:
        a += TWO_PI
    elif a > math.pi:
        a -= TWO_PI
    return a


def clamp(value: float, lo: float, hi: float) -> float:
    return lo if value < lo else hi if value > hi else value


@dataclass(frozen=True)
class VehicleParams:
    """Geometry and actuation limits of one car.

    Defaults describe a common 1:10-scale platform. ``steer_tau`` and
    ``speed_tau`` are first-order actuator time constants; the resulting
    steering/acceleration rates are additionally clamped to
    ``steer_rate_max`` / ``accel_max``.
    """

    wheelbase: float = 0.33
    lf: float = 0.165
    lr: float = 0.165
    mass: float = 3.5
    steer_max: float = 0.4
    v_max: float = 8.0
    accel_max: float = 7.0
    steer_rate_max: float = 3.2
    body_length: float = 0.5
    body_width: float = 0.3
    steer_tau: float = 0.1
    speed_tau: float = 0.2

    def __post_init__(self) -> None:
        for name in (
            "wheelbase", "lf", "lr", "mass", "steer_max", "v_max",
            "accel_max", "steer_rate_max", "body_length", "body_width",
            "steer_tau", "speed_tau",
        ):
            if getattr(self, name) <= 0.0:
                raise ConfigurationError(f"vehicle parameter {name!r} must be positive")
        if abs(self.lf + self.lr - self.wheelbase) > 1e-9:
            raise ConfigurationError("lf + lr must equal wheelbase")


@dataclass(frozen=True)
class VehicleState:
    """Seven-dimensional state of one car in the global frame."""

    x: float = 0.0
    y: float = 0.0
    v: float = 0.0
    yaw: float = 0.0
    yaw_rate: float = 0.0
    steer: float = 0.0
    slip: float = 0.0

    @classmethod
    def at_rest(cls, x: float, y: float, yaw: float) -> "VehicleState":
        return cls(x=x, y=y, v=0.0, yaw=wrap_angle(yaw), yaw_rate=0.0, steer=0.0, slip=0.0)


@dataclass(frozen=True)
class Action:
    """Normalized agent command; both components are used clamped to [-1, 1]."""

    speed_cmd: float = 0.0
    steer_cmd: float = 0.0


def scale_action(action: Action, params: VehicleParams) -> tuple[float, float]:
    """Map a normalized action to a (target_speed, target_steer) command.

    speed_cmd in [-1, 1] maps linearly onto [0, v_max]; steer_cmd maps onto
    [-steer_max, steer_max]. Inputs are clamped, so there is no error case.
    """
    speed_cmd = clamp(action.speed_cmd, -1.0, 1.0)
    steer_cmd = clamp(action.steer_cmd, -1.0, 1.0)
    target_speed = 0.5 * (speed_cmd + 1.0) * params.v_max
    target_steer = steer_cmd * params.steer_max
    return target_speed, target_steer


def unscale_command(target_speed: float, target_steer: float, params: VehicleParams) -> Action:
    """Inverse of :func:`scale_action`, with the result clamped to [-1, 1]."""
    speed_cmd = clamp(2.0 * target_speed / params.v_max - 1.0, -1.0, 1.0)
    steer_cmd = clamp(target_steer / params.steer_max, -1.0, 1.0)
    return Action(speed_cmd=speed_cmd, steer_cmd=steer_cmd)


def step_physics(
    state: VehicleState,
    target_speed: float,
    target_steer: float,
    params: VehicleParams,
    dt: float,
) -> VehicleState:
    """Advance one explicit-Euler physics step of length ``dt``.

    Steering and speed approach their targets through a rate-clamped
    first-order response, then the kinematic single-track equations advance
    the pose. The slip angle is the kinematic one at the center of gravity,
    beta = atan(lr * tan(steer) / wheelbase).
    """
    target_steer = clamp(target_steer, -params.steer_max, params.steer_max)
    target_speed = clamp(target_speed, 0.0, params.v_max)

    steer_rate = clamp(
        (target_steer - state.steer) / params.steer_tau,
        -params.steer_rate_max,
        params.steer_rate_max,
    )
    steer = clamp(state.steer + steer_rate * dt, -params.steer_max, params.steer_max)

    accel = clamp(
        (target_speed - state.v) / params.speed_tau,
        -params.accel_max,
        params.accel_max,
    )
    v = clamp(state.v + accel * dt, 0.0, params.v_max)

    slip = math.atan(params.lr * math.tan(steer) / params.wheelbase)
    yaw_rate = v * math.tan(steer) / params.wheelbase

    x = state.x + v * math.cos(state.yaw + slip) * dt
    y = state.y + v * math.sin(state.yaw + slip) * dt
    yaw = wrap_angle(state.yaw + yaw_rate * dt)

    return VehicleState(x=x, y=y, v=v, yaw=yaw, yaw_rate=yaw_rate, steer=steer, slip=slip)


def substep(
    state: VehicleState,
    action: Action,
    params: VehicleParams,
    n_substeps: int,
    dt_physics: float,
) -> VehicleState:
    """Apply ``n_substeps`` physics steps with targets held fixed.

    This is how an agent command issued at the control rate is executed on
    the faster physics clock (10 substeps of 0.01 s per 10 Hz command by
    default).
    """
    if n_substeps < 1:
        raise ValueError("n_substeps must be >= 1")
    target_speed, target_steer = scale_action(action, params)
    for _ in range(n_substeps):
        state = step_physics(state, target_speed, target_steer, params, dt_physics)
    return state
