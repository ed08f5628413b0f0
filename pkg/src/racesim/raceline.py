"""Offline driving-line generation and lookup.

The line is parameterized as lateral offsets from the resampled centerline,
optimized to reduce summed squared discrete curvature (second differences at
the nominal point spacing) subject to staying inside the track with a safety
margin. A curvature-limited velocity profile is then attached.
"""

from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import CubicSpline
from scipy.sparse.linalg import spsolve

from .errors import ConfigurationError
from .track import Track


@dataclass(frozen=True)
class RacelineParams:
    a_lat_max: float = 6.0
    a_long_max: float = 7.0
    v_max: float = 8.0
    margin: float = 0.25
    spacing: float = 0.1
    opt_tol: float = 1e-6
    max_iter: int = 500

    def key(self) -> str:
        return (
            f"alat={self.a_lat_max!r};along={self.a_long_max!r};vmax={self.v_max!r};"
            f"margin={self.margin!r};spacing={self.spacing!r};tol={self.opt_tol!r};"
            f"iter={self.max_iter}"
        )


class Raceline:
    """Closed driving line with per-point target speeds; immutable after build."""

    def __init__(
        self,
        s: np.ndarray,
        points: np.ndarray,
        heading: np.ndarray,
        curvature: np.ndarray,
        target_speed: np.ndarray,
    ):
        self.s = np.asarray(s, dtype=float)
        self.points = np.asarray(points, dtype=float)
        self.heading = np.asarray(heading, dtype=float)
        self.curvature = np.asarray(curvature, dtype=float)
        self.target_speed = np.asarray(target_speed, dtype=float)
        seg_vec = np.roll(self.points, -1, axis=0) - self.points
        self._seg_vec = seg_vec
        self._seg_len = np.linalg.norm(seg_vec, axis=1)
        self.total_length = float(self.s[-1] + self._seg_len[-1])
        for arr in (self.s, self.points, self.heading, self.curvature,
                    self.target_speed, self._seg_vec, self._seg_len):
            arr.flags.writeable = False

    def __len__(self) -> int:
        return len(self.points)

    def project_s(self, x: float, y: float) -> float:
        """Arc-length position of the nearest point on the line's polyline."""
        q = np.array([x, y])
        rel = q - self.points
        t = np.einsum("ij,ij->i", rel, self._seg_vec) / (self._seg_len**2)
        np.clip(t, 0.0, 1.0, out=t)
        closest = self.points + t[:, None] * self._seg_vec
        d2 = np.einsum("ij,ij->i", q - closest, q - closest)
        k = int(np.argmin(d2))
        s = float(self.s[k] + t[k] * self._seg_len[k])
        return s % self.total_length

    def lookahead_from(self, x: float, y: float, lookahead: float) -> tuple[np.ndarray, float]:
        """First stored point at arc distance >= lookahead ahead of (x, y)."""
        if lookahead <= 0.0:
            raise ValueError("lookahead must be positive")
        target = (self.project_s(x, y) + lookahead) % self.total_length
        idx = int(np.searchsorted(self.s, target, side="left"))
        if idx >= len(self.s):
            idx = 0
        return self.points[idx].copy(), float(self.target_speed[idx])

    def cross_track_error(self, x: float, y: float) -> float:
        q = np.array([x, y])
        rel = q - self.points
        t = np.einsum("ij,ij->i", rel, self._seg_vec) / (self._seg_len**2)
        np.clip(t, 0.0, 1.0, out=t)
        closest = self.points + t[:, None] * self._seg_vec
        d2 = np.einsum("ij,ij->i", q - closest, q - closest)
        return math.sqrt(float(d2.min()))


# -- geometry helpers --------------------------------------------------------


def resample_closed(points: np.ndarray, values: list[np.ndarray], spacing: float):
    """Resample a closed polyline (and attached per-point values) uniformly.

    Points are taken from a periodic cubic spline through the vertices so the
    resampled reference and its normals are smooth; raw chord interpolation
    leaves sagitta wobble that pollutes curvature-based objectives. Attached
    values are interpolated linearly.
    """
    closed = np.vstack([points, points[:1]])
    seg = np.diff(closed, axis=0)
    seg_len = np.linalg.norm(seg, axis=1)
    cum = np.concatenate(([0.0], np.cumsum(seg_len)))
    total = cum[-1]
    n = max(8, int(round(total / spacing)))
    s_new = np.linspace(0.0, total, n, endpoint=False)
    spline = CubicSpline(cum, closed, bc_type="periodic")
    out_pts = spline(s_new)
    out_vals = []
    for v in values:
        vc = np.concatenate([v, v[:1]])
        out_vals.append(np.interp(s_new, cum, vc))
    return out_pts, out_vals


def signed_curvature(points: np.ndarray) -> np.ndarray:
    """Signed discrete curvature (left turns positive) via the circumcircle."""
    prev_pts = np.roll(points, 1, axis=0)
    next_pts = np.roll(points, -1, axis=0)
    a = points - prev_pts
    b = next_pts - points
    c = next_pts - prev_pts
    cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    la = np.linalg.norm(a, axis=1)
    lb = np.linalg.norm(b, axis=1)
    lc = np.linalg.norm(c, axis=1)
    denom = la * lb * lc
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = 2.0 * cross / denom
    return np.where(denom > 0.0, kappa, 0.0)


def path_heading(points: np.ndarray) -> np.ndarray:
    chord = np.roll(points, -1, axis=0) - np.roll(points, 1, axis=0)
    return np.arctan2(chord[:, 1], chord[:, 0])


# -- optimization ------------------------------------------------------------


def _second_difference_gram(n: int) -> sp.csr_matrix:
    """Gram matrix D^T D of the wrapped second-difference operator."""
    idx = np.arange(n)
    rows = np.repeat(idx, 3)
    cols = np.concatenate([(idx - 1) % n, idx, (idx + 1) % n]).reshape(3, n).T.reshape(-1)
    vals = np.tile([1.0, -2.0, 1.0], n)
    d = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return (d.T @ d).tocsr()


def optimize_offsets(track: Track, params: RacelineParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Minimize summed squared discrete curvature of the offset path.

    Curvature is taken as the second difference over the nominal resampling
    spacing, which makes the objective an exact box-constrained quadratic in
    the offsets. It is minimized by an active-set loop with exact sparse
    solves over the free coordinates; per-coordinate descent is hopeless here
    because the uniform-shrink mode carries a near-zero eigenvalue.

    Returns (points, normals, alphas) for the resampled line.
    """
    center, (w_left, w_right) = resample_closed(
        track.centerline, [track.width_left, track.width_right], params.spacing
    )
    chord = np.roll(center, -1, axis=0) - np.roll(center, 1, axis=0)
    norms = np.linalg.norm(chord, axis=1)
    tangent = chord / norms[:, None]
    normal = np.stack([-tangent[:, 1], tangent[:, 0]], axis=1)

    lo = -(w_right - params.margin)
    hi = w_left - params.margin
    if np.any(hi <= lo):
        raise ConfigurationError(f"track too narrow for raceline margin {params.margin} m")

    n = len(center)
    inv_ds4 = 1.0 / params.spacing**4
    gram = _second_difference_gram(n)
    # f(a) = a^T M a + 2 b^T a + f0 with M_ij = (n_i . n_j) (D^T D)_ij / ds^4
    coo = gram.tocoo()
    vals = coo.data * np.einsum("ij,ij->i", normal[coo.row], normal[coo.col]) * inv_ds4
    m = sp.csr_matrix((vals, (coo.row, coo.col)), shape=(n, n))
    b = inv_ds4 * np.einsum("ij,ij->i", normal, np.column_stack([gram @ center[:, 0], gram @ center[:, 1]]))
    f0 = inv_ds4 * float(center[:, 0] @ (gram @ center[:, 0]) + center[:, 1] @ (gram @ center[:, 1]))

    def value(a: np.ndarray) -> float:
        return float(a @ (m @ a) + 2.0 * (b @ a) + f0)

    alpha = np.zeros(n)
    f_prev = f0
    for _ in range(params.max_iter):
        g = 2.0 * (m @ alpha + b)
        at_lo = alpha <= lo + 1e-12
        at_hi = alpha >= hi - 1e-12
        clamped = (at_lo & (g > 0.0)) | (at_hi & (g < 0.0))
        free = ~clamped
        if not free.any():
            break
        rhs = -b[free]
        if clamped.any():
            rhs = rhs - m[np.ix_(free, clamped)] @ alpha[clamped]
        target = alpha.copy()
        target[free] = spsolve(m[np.ix_(free, free)].tocsc(), rhs)
        step = target - alpha
        # project out components that would immediately leave the box
        step[at_hi & (step > 0.0)] = 0.0
        step[at_lo & (step < 0.0)] = 0.0
        if float(np.abs(step).max()) < 1e-12:
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            t_hi = np.where(step > 1e-15, (hi - alpha) / step, np.inf)
            t_lo = np.where(step < -1e-15, (lo - alpha) / step, np.inf)
        t = min(1.0, float(np.minimum(t_hi, t_lo).min()))
        candidate = np.clip(alpha + t * step, lo, hi)
        f_new = value(candidate)
        if f_new > f_prev:
            break
        alpha = candidate
        if t == 1.0 and f_prev - f_new <= params.opt_tol * max(abs(f_prev), 1.0):
            break
        f_prev = f_new
    return center + alpha[:, None] * normal, normal, alpha


def velocity_profile(
    points: np.ndarray,
    curvature: np.ndarray,
    a_lat_max: float,
    a_long_max: float,
    v_max: float,
) -> np.ndarray:
    """Curvature-capped speeds with ring-wise accel/brake feasibility.

    Start from v_i = min(v_max, sqrt(a_lat/|k_i|)) and repeat forward and
    backward passes over the closed loop until both are fixed points, so
    |v_{i+1}^2 - v_i^2| <= 2 a_long ds everywhere.
    """
    seg_len = np.linalg.norm(np.roll(points, -1, axis=0) - points, axis=1)
    kappa = np.abs(curvature)
    with np.errstate(divide="ignore"):
        v = np.where(kappa > 0.0, np.sqrt(a_lat_max / np.maximum(kappa, 1e-12)), np.inf)
    v = np.minimum(v, v_max)
    n = len(v)
    for _ in range(200):
        changed = False
        for i in range(n):  # forward: accelerating out of slow points
            j = (i + 1) % n
            cap = math.sqrt(v[i] ** 2 + 2.0 * a_long_max * seg_len[i])
            if v[j] > cap:
                v[j] = cap
                changed = True
        for i in range(n - 1, -1, -1):  # backward: braking into slow points
            j = (i + 1) % n
            cap = math.sqrt(v[j] ** 2 + 2.0 * a_long_max * seg_len[i])
            if v[i] > cap:
                v[i] = cap
                changed = True
        if not changed:
            break
    return v


def compute_raceline(track: Track, params: RacelineParams | None = None) -> Raceline:
    """Optimize the line geometry for a track and attach its speed profile."""
    params = params or RacelineParams()
    points, _, _ = optimize_offsets(track, params)
    return raceline_from_points(points, params)


def centerline_raceline(track: Track, params: RacelineParams | None = None) -> Raceline:
    """Speed-profiled line that follows the centerline itself (no optimization)."""
    params = params or RacelineParams()
    points, _ = resample_closed(track.centerline, [], params.spacing)
    return raceline_from_points(points, params)


def raceline_from_points(points: np.ndarray, params: RacelineParams) -> Raceline:
    kappa = signed_curvature(points)
    heading = path_heading(points)
    speeds = velocity_profile(points, kappa, params.a_lat_max, params.a_long_max, params.v_max)
    seg_len = np.linalg.norm(np.roll(points, -1, axis=0) - points, axis=1)
    s = np.concatenate(([0.0], np.cumsum(seg_len)[:-1]))
    return Raceline(s, points, heading, kappa, speeds)


# -- persistence -------------------------------------------------------------


def save_raceline(raceline: Raceline, path) -> None:
    with open(path, "w", newline="") as f:
        f.write("# s, x, y, heading, curvature, target_speed\n")
        for i in range(len(raceline)):
            row = (
                raceline.s[i], raceline.points[i, 0], raceline.points[i, 1],
                raceline.heading[i], raceline.curvature[i], raceline.target_speed[i],
            )
            f.write(",".join(repr(float(v)) for v in row) + "\n")


def load_raceline(path) -> Raceline:
    rows = []
    with open(path, "r", newline="") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != 6:
                raise ConfigurationError(f"{path}:{lineno}: expected 6 columns")
            rows.append([float(p) for p in parts])
    data = np.array(rows)
    return Raceline(data[:, 0], data[:, 1:3], data[:, 3], data[:, 4], data[:, 5])


def track_fingerprint(track: Track, params: RacelineParams) -> str:
    h = hashlib.blake2b(digest_size=16)
    h.update(np.ascontiguousarray(track.centerline).tobytes())
    h.update(np.ascontiguousarray(track.width_left).tobytes())
    h.update(np.ascontiguousarray(track.width_right).tobytes())
    h.update(params.key().encode())
    return h.hexdigest()


def cached_raceline(
    track: Track,
    params: RacelineParams | None = None,
    cache_dir: str | None = None,
    raceline_file: str | None = None,
) -> Raceline:
    """Load a precomputed line if given, else compute (optionally file-cached)."""
    params = params or RacelineParams()
    if raceline_file is not None:
        return load_raceline(raceline_file)
    if cache_dir is None:
        return compute_raceline(track, params)
    os.makedirs(cache_dir, exist_ok=True)
    path = os.path.join(cache_dir, f"raceline-{track_fingerprint(track, params)}.csv")
    if os.path.exists(path):
        return load_raceline(path)
    raceline = compute_raceline(track, params)
    save_raceline(raceline, path)
    return raceline
