"""How the episode context reshapes adversary behavior.

The speed coefficient scales the whole velocity profile up or down; the
steering coefficient scales the pursuit lookahead, which controls how much
the car cuts corners. Each sweep drives a lone adversary around the
single-corner track at three context settings and overlays the results.

Run:  python3 demos/03_context_effects.py
Writes demos/out/context_speed.svg and demos/out/context_steering.svg
"""

import io
import os

from racesim.adversary import Context
from racesim.config import setup_from_dict
from racesim.plotting import parse_trace, render_context_sweep

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

setup = setup_from_dict(
    {
        "track": {"generator": "single_corner"},
        "episode": {"n_adversaries": 1, "max_steps": 700},
    }
)


def adversary_episode(context: Context) -> list[dict]:
    """Idle the agent in place so the trace records one full adversary lap."""
    env = setup.make_env()
    sink = io.StringIO()
    env.set_trace(sink)
    env.reset(seed=0, context=context)
    while not env.done:
        env.step([-1.0, 0.0])  # agent parked; episode ends at the step cap
    return parse_trace(sink.getvalue().splitlines())


speed_sweep = [
    (f"speed ctx {c:+.1f}", adversary_episode(Context(c, 0.0))) for c in (-0.3, 0.0, 0.3)
]
render_context_sweep(os.path.join(OUT, "context_speed.svg"), setup.track, speed_sweep)
print("speed sweep: higher context -> uniformly faster profile")

steer_sweep = [
    (f"steer ctx {c:+.1f}", adversary_episode(Context(0.0, c))) for c in (-0.3, 0.0, 0.3)
]
render_context_sweep(os.path.join(OUT, "context_steering.svg"), setup.track, steer_sweep)
print("steering sweep: higher context -> longer lookahead, more corner cutting")
print(f"wrote figures into {OUT}")
