"""One head-to-head episode: a scripted agent starts behind one adversary,
chases it down the middle of the road, and overtakes on the way to the lap.

Run:  python3 demos/02_single_episode.py
Writes demos/out/episode.svg and demos/out/episode.jsonl
"""

import io
import os

from racesim.adversary import Context
from racesim.config import setup_from_dict
from racesim.plotting import parse_trace, render_episode
from racesim.policies import builtin_policy
from racesim.raceline import centerline_raceline

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

setup = setup_from_dict({"track": {"generator": "oval"}, "episode": {"n_adversaries": 1}})
env = setup.make_env()
policy = builtin_policy(
    "centerline", setup.raceline, centerline_raceline(setup.track), setup.config.vehicle
)

sink = io.StringIO()
env.set_trace(sink)
obs, info = env.reset(seed=5, context=Context(0.0, 0.0))
policy.reset(obs, info)
reward_total = 0.0
while not env.done:
    result = env.step(policy.act(obs, info))
    obs, info = result.obs, result.info
    reward_total += result.reward

print(f"cause={info['cause']}  progress={info['max_progress']:.3f}  "
      f"overtake score={info['overtake_score']}  return={reward_total:.2f}")

trace_path = os.path.join(OUT, "episode.jsonl")
with open(trace_path, "w") as f:
    f.write(sink.getvalue())
svg_path = os.path.join(OUT, "episode.svg")
render_episode(svg_path, setup.track, setup.raceline, parse_trace(sink.getvalue().splitlines()))
print(f"wrote {trace_path} and {svg_path}")
