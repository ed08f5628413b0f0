"""A small context-grid evaluation of the scripted centerline racer.

The full protocol uses a 7x7 grid (49 cells) with 50 laps per cell; this
demo shrinks that to a 3x3 grid with 2 laps per cell so it finishes in
seconds, then prints the in-distribution vs out-of-distribution table.

Run:  python3 demos/04_evaluation_grid.py
Writes reports into demos/out/grid/
"""

import os

from racesim.config import setup_from_dict
from racesim.evaluation import build_grid, evaluate_grid, format_table, write_reports
from racesim.policies import builtin_policy
from racesim.raceline import centerline_raceline

OUT = os.path.join(os.path.dirname(__file__), "out", "grid")

setup = setup_from_dict({"track": {"generator": "oval"}, "episode": {"n_adversaries": 1}})
env = setup.make_env()
policy = builtin_policy(
    "centerline", setup.raceline, centerline_raceline(setup.track), setup.config.vehicle
)

grid = build_grid(-0.3, 0.3, 0.3, laps=2)  # 9 cells instead of 49
cells = evaluate_grid(env, policy, grid, grid_seed=0, out_dir=OUT)
write_reports(cells, OUT)

for cell in cells:
    marker = "ID " if cell.in_distribution else "OOD"
    print(f"{marker} ctx=({cell.context.speed_coeff:+.1f},{cell.context.steer_coeff:+.1f}) "
          f"PG={cell.pg_mean:.3f} OT={cell.ot_mean:+.2f} A2A={cell.a2a_count}")
print()
print(format_table(cells))
print(f"per-cell traces and CSV reports in {OUT}")
