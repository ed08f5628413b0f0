"""Closed-loop track geometry: loading, validation, projection and progress.

A track is a closed centerline polyline with per-point lateral widths. The
left/right boundary polylines are derived from the centerline via per-point
normals and are what the lidar rays and wall-collision tests see, so sensing
and collision use consistent geometry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import wrap_angle
from .errors import TrackFormatError, TrackValidationError

MIN_POINTS = 16


@dataclass(frozen=True)
class TrackPose:
    """Result of projecting a vehicle pose onto the track.

    ``bound`` is the lateral half-width on the vehicle's side of the
    centerline at its projection, so ``inside == (d_c <= bound)``.
    """

    s: float
    d_c: float
    phi: float
    inside: bool
    segment: int
    bound: float


class Track:
    """Immutable closed-loop track; queries are read-only and thread-safe."""

    def __init__(
        self,
        centerline: np.ndarray,
        width_left: np.ndarray,
        width_right: np.ndarray,
        validate: bool = True,
    ):
        centerline = np.asarray(centerline, dtype=float)
        width_left = np.asarray(width_left, dtype=float)
        width_right = np.asarray(width_right, dtype=float)
        if centerline.ndim != 2 or centerline.shape[1] != 2:
            raise TrackValidationError("centerline must be an (N, 2) array")
        n = len(centerline)
        if width_left.shape != (n,) or width_right.shape != (n,):
            raise TrackValidationError("widths must match the number of centerline points")

        self.centerline = centerline
        self.width_left = width_left
        self.width_right = width_right

        # Per-segment geometry; segment i runs from point i to point (i+1) % n.
        self.seg_vec = np.roll(centerline, -1, axis=0) - centerline
        self.seg_len = np.linalg.norm(self.seg_vec, axis=1)
        self.cum_s = np.concatenate(([0.0], np.cumsum(self.seg_len)[:-1]))
        self.total_length = float(self.seg_len.sum())

        # Per-point unit tangents (central differences, wrapped) and left normals.
        chord = np.roll(centerline, -1, axis=0) - np.roll(centerline, 1, axis=0)
        norms = np.linalg.norm(chord, axis=1)
        norms[norms == 0.0] = 1.0
        self.tangent = chord / norms[:, None]
        self.normal = np.stack([-self.tangent[:, 1], self.tangent[:, 0]], axis=1)

        self.boundary_left = centerline + self.normal * width_left[:, None]
        self.boundary_right = centerline - self.normal * width_right[:, None]

        if validate:
            self._validate()

        for arr in (
            self.centerline, self.width_left, self.width_right, self.seg_vec,
            self.seg_len, self.cum_s, self.tangent, self.normal,
            self.boundary_left, self.boundary_right,
        ):
            arr.flags.writeable = False

    @property
    def n_points(self) -> int:
        return len(self.centerline)

    def _validate(self) -> None:
        n = self.n_points
        if n < MIN_POINTS:
            raise TrackValidationError(f"track needs at least {MIN_POINTS} points, got {n}")
        if np.any(self.width_left <= 0.0) or np.any(self.width_right <= 0.0):
            bad = int(np.argmax((self.width_left <= 0.0) | (self.width_right <= 0.0)))
            raise TrackValidationError(f"widths must be strictly positive (point {bad})")
        if np.any(self.seg_len <= 0.0):
            bad = int(np.argmax(self.seg_len <= 0.0))
            raise TrackValidationError(f"duplicate consecutive centerline points (segment {bad})")
        # The loop is closed implicitly; a closing jump far longer than the
        # typical spacing means the file describes an open path.
        median_len = float(np.median(self.seg_len[:-1]))
        if self.seg_len[-1] > 4.0 * median_len:
            raise TrackValidationError(
                "open loop: closing segment is "
                f"{self.seg_len[-1]:.3f} m vs median spacing {median_len:.3f} m"
            )
        if not np.all(np.diff(self.cum_s) > 0.0):
            raise TrackValidationError("cumulative arc length must be strictly increasing")
        for name, poly in (("left", self.boundary_left), ("right", self.boundary_right)):
            if _closed_polyline_self_intersects(poly):
                raise TrackValidationError(f"self-intersection in {name} boundary polyline")

    # -- queries ---------------------------------------------------------

    def project(self, x: float, y: float, yaw: float = 0.0) -> TrackPose:
        """Project a pose onto the centerline (exact search over all segments)."""
        return self._project_segments(x, y, yaw, np.arange(self.n_points))

    def _project_segments(self, x, y, yaw, idx) -> TrackPose:
        q = np.array([x, y])
        starts = self.centerline[idx]
        vecs = self.seg_vec[idx]
        lens2 = self.seg_len[idx] ** 2
        t = np.einsum("ij,ij->i", q - starts, vecs) / lens2
        np.clip(t, 0.0, 1.0, out=t)
        closest = starts + t[:, None] * vecs
        d2 = np.einsum("ij,ij->i", q - closest, q - closest)
        k = int(np.argmin(d2))
        seg = int(idx[k])
        d_c = math.sqrt(float(d2[k]))
        s = float(self.cum_s[seg] + t[k] * self.seg_len[seg])
        if s >= self.total_length:
            s -= self.total_length
        tangent = self.seg_vec[seg]
        phi = wrap_angle(yaw - math.atan2(tangent[1], tangent[0]))
        # Side of the centerline (left positive), then compare against the
        # lateral width interpolated along the segment.
        cross = tangent[0] * (y - self.centerline[seg][1]) - tangent[1] * (x - self.centerline[seg][0])
        nxt = (seg + 1) % self.n_points
        tt = float(t[k])
        if cross >= 0.0:
            width = self.width_left[seg] * (1.0 - tt) + self.width_left[nxt] * tt
        else:
            width = self.width_right[seg] * (1.0 - tt) + self.width_right[nxt] * tt
        return TrackPose(
            s=s, d_c=d_c, phi=phi, inside=bool(d_c <= width), segment=seg, bound=float(width)
        )

    def pose_at(self, s: float) -> tuple[float, float, float]:
        """Centerline point and tangent heading at arc-length position ``s``."""
        s = s % self.total_length
        seg = int(np.searchsorted(self.cum_s, s, side="right") - 1)
        t = (s - self.cum_s[seg]) / self.seg_len[seg]
        p = self.centerline[seg] + t * self.seg_vec[seg]
        heading = math.atan2(self.seg_vec[seg][1], self.seg_vec[seg][0])
        return float(p[0]), float(p[1]), heading

    def boundary_segments(self) -> tuple[np.ndarray, np.ndarray]:
        """Both boundary polylines as (starts, vecs) segment arrays."""
        starts = np.concatenate([self.boundary_left, self.boundary_right])
        vecs = np.concatenate(
            [
                np.roll(self.boundary_left, -1, axis=0) - self.boundary_left,
                np.roll(self.boundary_right, -1, axis=0) - self.boundary_right,
            ]
        )
        return starts, vecs

    def contains(self, x: float, y: float) -> bool:
        return self.project(x, y).inside


class TrackProjector:
    """Windowed projection cache for sequential queries of one moving vehicle.

    Holds the last matched segment and searches a window around it, falling
    back to the full search whenever the window result is not trustworthy.
    Per-caller state: do not share one projector between vehicles.
    """

    def __init__(self, track: Track, window: int = 64):
        self.track = track
        self.window = window
        self._last: int | None = None

    def project(self, x: float, y: float, yaw: float = 0.0) -> TrackPose:
        track = self.track
        if self._last is None or 2 * self.window + 1 >= track.n_points:
            pose = track.project(x, y, yaw)
        else:
            idx = (self._last + np.arange(-self.window, self.window + 1)) % track.n_points
            pose = track._project_segments(x, y, yaw, idx)
            offset = (pose.segment - self._last) % track.n_points
            at_edge = min(offset, track.n_points - offset) >= self.window - 1
            if at_edge:
                pose = track.project(x, y, yaw)
        self._last = pose.segment
        return pose

    def reset(self) -> None:
        self._last = None


def progress_fraction(total_length: float, s_start: float, s_now: float, laps_signed: int) -> float:
    """Signed fraction of laps completed from ``s_start``, given a lap count."""
    return (((s_now - s_start) % total_length) + laps_signed * total_length) / total_length


class LapCounter:
    """Signed lap counter driven by successive arc-length samples.

    A jump of more than half the track length between samples is read as a
    start-line crossing (forward or backward), which is robust at control
    rates far above one lap per sample.
    """

    def __init__(self, total_length: float, s_initial: float):
        self.total_length = total_length
        self.prev_s = s_initial
        self.laps = 0

    def update(self, s_now: float) -> int:
        ds = s_now - self.prev_s
        if ds < -0.5 * self.total_length:
            self.laps += 1
        elif ds > 0.5 * self.total_length:
            self.laps -= 1
        self.prev_s = s_now
        return self.laps


# -- construction and I/O --------------------------------------------------


def _closed_polyline_self_intersects(points: np.ndarray) -> bool:
    """Exact segment-pair intersection test over a closed polyline."""
    n = len(points)
    starts = points
    vecs = np.roll(points, -1, axis=0) - points
    # Pairwise proper-intersection test, skipping identical and adjacent segments.
    p = starts[:, None, :]
    r = vecs[:, None, :]
    q = starts[None, :, :]
    s = vecs[None, :, :]
    denom = r[..., 0] * s[..., 1] - r[..., 1] * s[..., 0]
    qp = q - p
    t_num = qp[..., 0] * s[..., 1] - qp[..., 1] * s[..., 0]
    u_num = qp[..., 0] * r[..., 1] - qp[..., 1] * r[..., 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = t_num / denom
        u = u_num / denom
    eps = 1e-12
    crossing = (
        (np.abs(denom) > eps)
        & (t > eps) & (t < 1.0 - eps)
        & (u > eps) & (u < 1.0 - eps)
    )
    i_idx, j_idx = np.nonzero(crossing)
    for i, j in zip(i_idx, j_idx):
        if i == j:
            continue
        if (i + 1) % n == j or (j + 1) % n == i:
            continue
        return True
    return False


def _densify(
    centerline: np.ndarray, width_left: np.ndarray, width_right: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Midpoint-subdivide every segment until there are at least MIN_POINTS.

    Subdivision does not change the polyline's shape or perimeter, so coarse
    hand-authored tracks (a four-point square, say) load with their geometry
    intact.
    """
    while len(centerline) < MIN_POINTS:
        nxt_c = np.roll(centerline, -1, axis=0)
        nxt_l = np.roll(width_left, -1)
        nxt_r = np.roll(width_right, -1)
        mid_c = 0.5 * (centerline + nxt_c)
        mid_l = 0.5 * (width_left + nxt_l)
        mid_r = 0.5 * (width_right + nxt_r)
        centerline = np.stack([centerline, mid_c], axis=1).reshape(-1, 2)
        width_left = np.stack([width_left, mid_l], axis=1).reshape(-1)
        width_right = np.stack([width_right, mid_r], axis=1).reshape(-1)
    return centerline, width_left, width_right


def load_track(path) -> Track:
    """Load a track from CSV rows ``x, y, w_left, w_right`` (loop closure implicit).

    Lines starting with ``#`` and blank lines are ignored. A duplicated
    closing point is dropped. Tracks with fewer than 16 points are densified
    by midpoint subdivision, which preserves shape and perimeter.
    """
    rows = []
    with open(path, "r", newline="") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 4:
                raise TrackFormatError(f"{path}:{lineno}: expected 4 columns, got {len(parts)}")
            try:
                rows.append([float(p) for p in parts])
            except ValueError as exc:
                raise TrackFormatError(f"{path}:{lineno}: {exc}") from None
    if len(rows) < 3:
        raise TrackFormatError(f"{path}: need at least 3 rows, got {len(rows)}")
    data = np.array(rows)
    if np.allclose(data[0, :2], data[-1, :2]):
        data = data[:-1]
    centerline = data[:, :2]
    width_left = data[:, 2]
    width_right = data[:, 3]
    centerline, width_left, width_right = _densify(centerline, width_left, width_right)
    return Track(centerline, width_left, width_right)


def save_track(track: Track, path) -> None:
    with open(path, "w", newline="") as f:
        f.write("# x, y, w_left, w_right\n")
        for (x, y), wl, wr in zip(track.centerline, track.width_left, track.width_right):
            f.write(f"{float(x)!r},{float(y)!r},{float(wl)!r},{float(wr)!r}\n")


# -- synthetic generators ----------------------------------------------------


def _walk(segments, spacing: float) -> np.ndarray:
    """Trace straight/arc/turn segments into a point sequence at roughly ``spacing``."""
    x, y, heading = 0.0, 0.0, 0.0
    pts = [(x, y)]
    for seg in segments:
        kind = seg[0]
        if kind == "straight":
            length = seg[1]
            n = max(1, int(round(length / spacing)))
            step = length / n
            for _ in range(n):
                x += step * math.cos(heading)
                y += step * math.sin(heading)
                pts.append((x, y))
        elif kind == "arc":
            radius, angle = seg[1], seg[2]
            arc_len = abs(radius * angle)
            n = max(2, int(round(arc_len / spacing)))
            dtheta = angle / n
            chord = 2.0 * abs(radius) * math.sin(abs(dtheta) / 2.0)
            for _ in range(n):
                heading += 0.5 * dtheta
                x += chord * math.cos(heading)
                y += chord * math.sin(heading)
                heading += 0.5 * dtheta
                pts.append((x, y))
        elif kind == "turn":
            heading += seg[1]
        else:
            raise ValueError(f"unknown segment kind {kind!r}")
    # Drop the final point if the walk closed back onto the start.
    if math.hypot(pts[-1][0] - pts[0][0], pts[-1][1] - pts[0][1]) < 0.5 * spacing:
        pts = pts[:-1]
    return np.array(pts)


def _uniform_width_track(points: np.ndarray, half_width: float) -> Track:
    n = len(points)
    w = np.full(n, half_width)
    return Track(points, w.copy(), w.copy())


def make_oval(
    straight: float = 15.0,
    radius: float = 5.0,
    half_width: float = 1.0,
    spacing: float = 0.25,
) -> Track:
    """Stadium-shaped oval: two straights joined by half circles, CCW."""
    segments = [
        ("straight", straight),
        ("arc", radius, math.pi),
        ("straight", straight),
        ("arc", radius, math.pi),
    ]
    return _uniform_width_track(_walk(segments, spacing), half_width)


def make_square(side: float = 10.0, half_width: float = 1.0, spacing: float = 1.0) -> Track:
    """Square corridor with sharp 90-degree corners, CCW."""
    segments = []
    for _ in range(4):
        segments.append(("straight", side))
        segments.append(("turn", math.pi / 2.0))
    return _uniform_width_track(_walk(segments, spacing), half_width)


def make_single_corner(
    width: float = 16.0,
    height: float = 10.0,
    corner_radius: float = 1.5,
    other_radius: float = 4.0,
    half_width: float = 1.1,
    spacing: float = 0.25,
) -> Track:
    """Rounded rectangle with one markedly tighter corner.

    The tight corner concentrates the track's maximum curvature in one spot,
    which makes corner-cutting behavior easy to measure.
    """
    r = [other_radius, other_radius, other_radius, corner_radius]
    segments = [
        ("straight", width - r[0] - r[1]),
        ("arc", r[1], math.pi / 2.0),
        ("straight", height - r[1] - r[2]),
        ("arc", r[2], math.pi / 2.0),
        ("straight", width - r[2] - r[3]),
        ("arc", r[3], math.pi / 2.0),
        ("straight", height - r[3] - r[0]),
        ("arc", r[0], math.pi / 2.0),
    ]
    return _uniform_width_track(_walk(segments, spacing), half_width)


GENERATORS = {
    "oval": make_oval,
    "square": make_square,
    "single_corner": make_single_corner,
}
