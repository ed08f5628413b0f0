"""2D lidar simulation: exact raycasting against walls and vehicle bodies."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import VehicleParams, VehicleState
from .track import Track


@dataclass(frozen=True)
class LidarConfig:
    n_beams: int = 108
    fov: float = math.pi
    max_range: float = 10.0
    noise_std: float = 0.01


def beam_angles(yaw: float, config: LidarConfig) -> np.ndarray:
    """Beam k points at yaw + (-fov/2 + k * fov/(n-1)), k = 0..n-1."""
    return yaw + np.linspace(-0.5 * config.fov, 0.5 * config.fov, config.n_beams)


def rectangle_corners(x: float, y: float, yaw: float, length: float, width: float) -> np.ndarray:
    """Corners of an oriented rectangle centered at (x, y), CCW order."""
    c, s = math.cos(yaw), math.sin(yaw)
    hl, hw = 0.5 * length, 0.5 * width
    local = np.array([[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]])
    rot = np.array([[c, -s], [s, c]])
    return local @ rot.T + np.array([x, y])


def vehicle_segments(state: VehicleState, params: VehicleParams) -> tuple[np.ndarray, np.ndarray]:
    corners = rectangle_corners(state.x, state.y, state.yaw, params.body_length, params.body_width)
    vecs = np.roll(corners, -1, axis=0) - corners
    return corners, vecs


def ray_distances(
    origin: tuple[float, float],
    angles: np.ndarray,
    seg_starts: np.ndarray,
    seg_vecs: np.ndarray,
    max_range: float,
) -> np.ndarray:
    """Distance each ray travels before hitting a segment, capped at max_range.

    Exact ray/segment intersection, fully vectorized over (beams x segments).
    Rays parallel to a segment are treated as missing it.
    """
    if len(seg_starts) == 0:
        return np.full(len(angles), max_range)
    d = np.stack([np.cos(angles), np.sin(angles)], axis=1)  # (B, 2)
    o = np.asarray(origin, dtype=float)
    qp = seg_starts[None, :, :] - o[None, None, :]  # (1, M, 2)
    e = seg_vecs[None, :, :]
    dx = d[:, None, 0]
    dy = d[:, None, 1]
    denom = dx * e[..., 1] - dy * e[..., 0]  # cross(d, e), (B, M)
    t_num = qp[..., 0] * e[..., 1] - qp[..., 1] * e[..., 0]  # cross(qp, e)
    u_num = qp[..., 0] * dy - qp[..., 1] * dx  # cross(qp, d)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = t_num / denom
        u = u_num / denom
    hit = (np.abs(denom) > 1e-15) & (t >= 0.0) & (u >= 0.0) & (u <= 1.0)
    t = np.where(hit, t, np.inf)
    return np.minimum(t.min(axis=1), max_range)


def cast_ray(
    origin: tuple[float, float],
    angle: float,
    seg_starts: np.ndarray,
    seg_vecs: np.ndarray,
    max_range: float,
) -> float:
    """Distance to the nearest obstacle along one ray, capped at max_range."""
    return float(ray_distances(origin, np.array([angle]), seg_starts, seg_vecs, max_range)[0])


def world_segments(
    track: Track,
    others: list[tuple[VehicleState, VehicleParams]],
) -> tuple[np.ndarray, np.ndarray]:
    """Obstacle segments seen by a scanning vehicle: walls plus other bodies."""
    starts, vecs = track.boundary_segments()
    parts_s = [starts]
    parts_v = [vecs]
    for state, params in others:
        s, v = vehicle_segments(state, params)
        parts_s.append(s)
        parts_v.append(v)
    return np.concatenate(parts_s), np.concatenate(parts_v)


def scan(
    state: VehicleState,
    track: Track,
    others: list[tuple[VehicleState, VehicleParams]],
    config: LidarConfig,
) -> np.ndarray:
    """Normalized lidar scan from the vehicle center; own body is excluded."""
    seg_starts, seg_vecs = world_segments(track, others)
    angles = beam_angles(state.yaw, config)
    dist = ray_distances((state.x, state.y), angles, seg_starts, seg_vecs, config.max_range)
    return dist / config.max_range


def apply_noise(beams: np.ndarray, rng: np.random.Generator, noise_std: float) -> np.ndarray:
    """Add one Gaussian sample per beam, then clamp back to [0, 1]."""
    noisy = beams + rng.normal(0.0, noise_std, size=beams.shape)
    return np.clip(noisy, 0.0, 1.0)
