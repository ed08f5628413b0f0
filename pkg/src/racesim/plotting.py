"""Figure emitters for driven paths and speed profiles (SVG/PNG via matplotlib)."""

from __future__ import annotations

import json

import numpy as np

from .raceline import Raceline
from .track import Track


def _axes_for_track(ax, track: Track) -> None:
    ax.plot(*np.vstack([track.boundary_left, track.boundary_left[:1]]).T, "k-", lw=1)
    ax.plot(*np.vstack([track.boundary_right, track.boundary_right[:1]]).T, "k-", lw=1)
    ax.plot(*np.vstack([track.centerline, track.centerline[:1]]).T, "k--", lw=0.5, alpha=0.4)
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")


def parse_trace(lines) -> list[dict]:
    return [json.loads(line) for line in lines if line.strip()]


def episode_paths(records: list[dict]) -> list[np.ndarray]:
    """Per-vehicle xy paths from a single episode's trace records."""
    steps = [r for r in records if r.get("type") == "step"]
    if not steps:
        return []
    n_vehicles = len(steps[0]["poses"])
    return [
        np.array([step["poses"][v][:2] for step in steps]) for v in range(n_vehicles)
    ]


def episode_speeds(records: list[dict], vehicle: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """(progress fraction, speed) samples for one vehicle over an episode."""
    steps = [r for r in records if r.get("type") == "step"]
    progress = np.array([s["progress"] for s in steps])
    speed = np.array([s["poses"][vehicle][3] for s in steps])
    return progress, speed


def render_episode(path: str, track: Track, raceline: Raceline, records: list[dict]) -> None:
    """Two-panel figure for one episode: driven paths and speed profiles."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, (ax_path, ax_speed) = plt.subplots(1, 2, figsize=(13, 5))
    _axes_for_track(ax_path, track)
    ax_path.plot(*np.vstack([raceline.points, raceline.points[:1]]).T, "g:", lw=1,
                 label="driving line")
    paths = episode_paths(records)
    labels = ["agent"] + [f"adversary {k}" for k in range(1, len(paths))]
    for label, pts in zip(labels, paths):
        ax_path.plot(pts[:, 0], pts[:, 1], lw=1.5, label=label)
    ax_path.legend(loc="upper right", fontsize=8)
    ax_path.set_title("driven paths")

    for v, label in enumerate(labels):
        steps, speed = episode_speeds(records, vehicle=v)
        ax_speed.plot(np.arange(len(speed)) * 0.1, speed, lw=1.2, label=label)
    ax_speed.set_xlabel("time [s]")
    ax_speed.set_ylabel("speed [m/s]")
    ax_speed.set_title("speed profiles")
    ax_speed.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_context_sweep(
    path: str,
    track: Track,
    sweeps: list[tuple[str, list[dict]]],
    vehicle: int = 1,
) -> None:
    """Overlay one vehicle's path and speed across several context settings.

    ``sweeps`` holds (label, episode records) pairs, typically three contexts
    of one coordinate; the figure shows how the adversary's line and velocity
    profile shift with the context.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, (ax_path, ax_speed) = plt.subplots(1, 2, figsize=(13, 5))
    _axes_for_track(ax_path, track)
    for label, records in sweeps:
        paths = episode_paths(records)
        if vehicle >= len(paths):
            continue
        pts = paths[vehicle]
        ax_path.plot(pts[:, 0], pts[:, 1], lw=1.5, label=label)
        progress, speed = episode_speeds(records, vehicle=vehicle)
        order = np.argsort(progress)
        ax_speed.plot(progress[order], speed[order], lw=1.2, label=label)
    ax_path.set_title("adversary lines by context")
    ax_path.legend(fontsize=8)
    ax_speed.set_xlabel("lap progress")
    ax_speed.set_ylabel("speed [m/s]")
    ax_speed.set_title("adversary velocity profiles by context")
    ax_speed.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
