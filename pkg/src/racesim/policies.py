"""Scripted agent policies for evaluation, testing, and scripted runs.

A policy sees exactly what an external agent would: the observation plus the
step info dict. Scripted policies are allowed to read the pose from info;
they serve as deterministic oracles, not as learners.
"""

from __future__ import annotations

import numpy as np

from .adversary import AdversaryConfig, Context, adversary_action
from .dynamics import Action, VehicleParams, VehicleState
from .raceline import Raceline


class PursuitPolicy:
    """Pure pursuit along a given line at that line's speeds times a scale."""

    def __init__(
        self,
        line: Raceline,
        params: VehicleParams,
        lookahead: float = 2.0,
        speed_scale: float = 1.0,
    ):
        self.line = line
        self.params = params
        self.cfg = AdversaryConfig(
            base_lookahead=lookahead, lambda_v=0.0, lambda_theta=0.0, speed_attenuation=speed_scale
        )
        self.ctx = Context(0.0, 0.0)

    def reset(self, obs, info) -> None:
        pass

    def act(self, obs, info) -> Action:
        x, y, yaw, v = info["poses"][0]
        state = VehicleState(x=x, y=y, yaw=yaw, v=v)
        return adversary_action(state, self.line, self.cfg, self.ctx, self.params)


class StraightPolicy:
    """Constant command; drives straight into whatever is ahead."""

    def __init__(self, speed_cmd: float = 0.0, steer_cmd: float = 0.0):
        self.action = Action(speed_cmd, steer_cmd)

    def reset(self, obs, info) -> None:
        pass

    def act(self, obs, info) -> Action:
        return self.action


class RandomPolicy:
    """Uniform random actions from a private seeded generator."""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.rng = np.random.default_rng(seed)

    def reset(self, obs, info) -> None:
        self.rng = np.random.default_rng(self.seed)

    def act(self, obs, info) -> Action:
        draw = self.rng.uniform(-1.0, 1.0, size=2)
        return Action(float(draw[0]), float(draw[1]))


class CrashAtPolicy:
    """Follows a base policy, then steers hard into the wall at a progress mark."""

    def __init__(self, base, progress_threshold: float):
        self.base = base
        self.threshold = progress_threshold

    def reset(self, obs, info) -> None:
        self.base.reset(obs, info)

    def act(self, obs, info) -> Action:
        if info["progress"] >= self.threshold:
            return Action(1.0, 1.0)
        return self.base.act(obs, info)


class SubprocessPolicy:
    """Adapter for an external agent process speaking the wire format.

    The harness writes one ``reset`` line at every episode start (no reply
    expected) and one ``state`` line per decision point; the agent answers
    each state with one ``step`` line carrying its action. Message encodings
    are exactly those of the environment server.
    """

    def __init__(self, command):
        import shlex
        import subprocess

        argv = shlex.split(command) if isinstance(command, str) else list(command)
        self.proc = subprocess.Popen(
            argv,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )

    def _send(self, line: str) -> None:
        if self.proc.poll() is not None:
            raise RuntimeError("agent process exited")
        self.proc.stdin.write(line + "\n")
        self.proc.stdin.flush()

    def reset(self, obs, info) -> None:
        from . import protocol

        self._send(
            protocol.encode_request(
                {
                    "kind": "reset",
                    "seed": int(info.get("seed", 0)),
                    "context": [float(c) for c in info.get("context", [0.0, 0.0])],
                }
            )
        )

    def act(self, obs, info) -> Action:
        from . import protocol

        self._send(
            protocol.encode_response(
                protocol.state_response(
                    obs, float(info.get("reward", 0.0)), bool(info.get("done", False)), {}
                )
            )
        )
        line = self.proc.stdout.readline()
        if not line:
            raise RuntimeError("agent closed its output stream")
        reply = protocol.decode_request(line)
        if reply["kind"] != "step":
            raise RuntimeError(f"agent sent {reply['kind']!r}, expected a step")
        return Action(reply["action"][0], reply["action"][1])

    def close(self) -> None:
        if self.proc.poll() is None:
            try:
                self.proc.stdin.close()
            except OSError:
                pass
            self.proc.terminate()
            self.proc.wait(timeout=5)


def builtin_policy(
    name: str,
    raceline: Raceline,
    centerline_line: Raceline,
    params: VehicleParams,
    seed: int = 0,
):
    """Construct one of the named builtin agents.

    ``pursuit`` races the optimized line at full speed; ``centerline`` holds
    the middle of the road (useful head-to-head, since adversaries run the
    optimized line); ``straight`` and ``random`` are degenerate baselines.
    """
    if name == "pursuit":
        return PursuitPolicy(raceline, params)
    if name == "centerline":
        return PursuitPolicy(centerline_line, params, speed_scale=0.9)
    if name == "straight":
        return StraightPolicy(speed_cmd=0.2)
    if name == "random":
        return RandomPolicy(seed=seed)
    raise ValueError(f"unknown builtin agent {name!r}")
