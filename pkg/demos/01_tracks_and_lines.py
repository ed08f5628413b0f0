"""Generate the three synthetic tracks, compute their driving lines, and
plot everything side by side.

Run:  python3 demos/01_tracks_and_lines.py
Writes demos/out/tracks_and_lines.png
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from racesim import compute_raceline, make_oval, make_single_corner, make_square

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

tracks = {
    "oval": make_oval(),
    "square corridor": make_square(),
    "single corner": make_single_corner(),
}

fig, axes = plt.subplots(1, 3, figsize=(16, 5))
for ax, (name, track) in zip(axes, tracks.items()):
    for boundary in (track.boundary_left, track.boundary_right):
        closed = np.vstack([boundary, boundary[:1]])
        ax.plot(closed[:, 0], closed[:, 1], "k-", lw=1)
    center = np.vstack([track.centerline, track.centerline[:1]])
    ax.plot(center[:, 0], center[:, 1], "k--", lw=0.6, alpha=0.5, label="centerline")

    line = compute_raceline(track)
    pts = np.vstack([line.points, line.points[:1]])
    # color the line by target speed
    sc = ax.scatter(pts[:-1, 0], pts[:-1, 1], c=line.target_speed, s=4, cmap="viridis")
    ax.set_title(f"{name}\nlap {track.total_length:.1f} m, "
                 f"top speed {line.target_speed.max():.1f} m/s")
    ax.set_aspect("equal")
    print(f"{name:>16}: {track.n_points} points, perimeter {track.total_length:.2f} m, "
          f"line speeds {line.target_speed.min():.2f}..{line.target_speed.max():.2f} m/s")

fig.colorbar(sc, ax=axes, label="target speed [m/s]", shrink=0.8)
path = os.path.join(OUT, "tracks_and_lines.png")
fig.savefig(path, dpi=130)
print(f"wrote {path}")
