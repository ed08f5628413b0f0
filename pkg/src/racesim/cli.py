"""Command line entry points.

Subcommands: ``track gen``, ``track validate``, ``raceline compute``,
``race run``, ``eval grid``, ``serve``. Run ``racesim <command> -h`` for the
flags of each.
"""

from __future__ import annotations

import argparse
import io
import sys
import time

from .adversary import Context
from .config import RaceSetup, load_config, setup_from_dict
from .errors import ConfigurationError
from .evaluation import build_grid, evaluate_grid, format_table, write_reports
from .policies import SubprocessPolicy, builtin_policy
from .raceline import RacelineParams, centerline_raceline, compute_raceline, save_raceline
from .track import GENERATORS, load_track, save_track


def _parse_kv_params(pairs):
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise ConfigurationError(f"--param expects name=value, got {pair!r}")
        key, value = pair.split("=", 1)
        out[key] = float(value)
    return out


def _parse_context(text: str) -> Context:
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigurationError(f"--context expects 'c_speed,c_steer', got {text!r}")
    return Context(float(parts[0]), float(parts[1]))


def _parse_range(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigurationError(f"--range expects 'lo:hi:step', got {text!r}")
    return float(parts[0]), float(parts[1]), float(parts[2])


def _load_setup(args) -> RaceSetup:
    if getattr(args, "config", None):
        return load_config(args.config)
    data: dict = {"episode": {}}
    if getattr(args, "track", None):
        data["track"] = {"file": args.track}
    if getattr(args, "adversaries", None) is not None:
        data["episode"]["n_adversaries"] = args.adversaries
    return setup_from_dict(data)


def cmd_track_gen(args) -> int:
    if args.kind not in GENERATORS:
        raise ConfigurationError(f"unknown track kind {args.kind!r}; choose from {sorted(GENERATORS)}")
    track = GENERATORS[args.kind](**_parse_kv_params(args.param))
    save_track(track, args.out)
    print(f"wrote {args.kind} track ({track.n_points} points, "
          f"{track.total_length:.2f} m) to {args.out}")
    return 0


def cmd_track_validate(args) -> int:
    try:
        track = load_track(args.file)
    except (ConfigurationError, ValueError) as exc:
        print(f"INVALID: {exc}")
        return 1
    print(f"OK: {track.n_points} points, {track.total_length:.2f} m perimeter")
    return 0


def cmd_raceline_compute(args) -> int:
    track = load_track(args.track)
    params = RacelineParams(
        a_lat_max=args.a_lat_max,
        a_long_max=args.a_long_max,
        v_max=args.v_max,
        margin=args.margin,
        spacing=args.spacing,
    )
    line = compute_raceline(track, params)
    save_raceline(line, args.out)
    print(f"wrote driving line ({len(line)} points, top speed "
          f"{line.target_speed.max():.2f} m/s) to {args.out}")
    return 0


def _make_policy(name: str, setup: RaceSetup, seed: int):
    if name.startswith("cmd:"):
        return SubprocessPolicy(name[4:])
    center = centerline_raceline(setup.track)
    return builtin_policy(name, setup.raceline, center, setup.config.vehicle, seed=seed)


def cmd_race_run(args) -> int:
    setup = _load_setup(args)
    seed = args.seed if args.seed is not None else setup.seed
    context = _parse_context(args.context) if args.context else None
    env = setup.make_env()
    policy = _make_policy(args.agent, setup, seed)

    sink = io.StringIO()
    env.set_trace(sink)
    started = time.perf_counter()
    obs, info = env.reset(seed, context)
    policy.reset(obs, info)
    steps = 0
    while not env.done:
        result = env.step(policy.act(obs, info))
        obs, info = result.obs, result.info
        steps += 1
    elapsed = time.perf_counter() - started

    if args.trace:
        with open(args.trace, "w") as f:
            f.write(sink.getvalue())
    if args.svg:
        from .plotting import parse_trace, render_episode

        render_episode(args.svg, setup.track, setup.raceline, parse_trace(sink.getvalue().splitlines()))
    print(
        f"episode finished: cause={info['cause']} steps={steps} "
        f"progress={info['max_progress']:.3f} overtakes={info['overtake_score']} "
        f"wall_time={elapsed:.3f}s"
    )
    return 0


def cmd_eval_grid(args) -> int:
    setup = _load_setup(args)
    lo, hi, step = _parse_range(args.range)
    grid = build_grid(lo, hi, step, laps=args.laps)
    env = setup.make_env()
    policy = _make_policy(args.agent, setup, args.seed)
    cells = evaluate_grid(env, policy, grid, grid_seed=args.seed, out_dir=args.out)
    write_reports(cells, args.out)
    print(format_table(cells))
    failed = [c for c in cells if c.failed]
    if failed:
        for cell in failed:
            print(f"FAILED cell {cell.context.as_list()}: {cell.diagnostic}")
        return 1
    return 0


def cmd_serve(args) -> int:
    from .server import serve

    setup = load_config(args.config)
    serve(setup, args.transport)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="racesim")
    sub = parser.add_subparsers(dest="command", required=True)

    track = sub.add_parser("track", help="generate or validate track files")
    track_sub = track.add_subparsers(dest="track_command", required=True)
    gen = track_sub.add_parser("gen", help="write a synthetic track CSV")
    gen.add_argument("--kind", required=True, choices=sorted(GENERATORS))
    gen.add_argument("--out", required=True)
    gen.add_argument("--param", action="append", metavar="NAME=VALUE",
                     help="generator parameter override (repeatable)")
    gen.set_defaults(func=cmd_track_gen)
    validate = track_sub.add_parser("validate", help="check a track CSV against the invariants")
    validate.add_argument("file")
    validate.set_defaults(func=cmd_track_validate)

    raceline = sub.add_parser("raceline", help="compute driving lines offline")
    raceline_sub = raceline.add_subparsers(dest="raceline_command", required=True)
    compute = raceline_sub.add_parser("compute", help="optimize a line and write it to CSV")
    compute.add_argument("--track", required=True)
    compute.add_argument("--out", required=True)
    compute.add_argument("--a-lat-max", type=float, default=6.0)
    compute.add_argument("--a-long-max", type=float, default=7.0)
    compute.add_argument("--v-max", type=float, default=8.0)
    compute.add_argument("--margin", type=float, default=0.25)
    compute.add_argument("--spacing", type=float, default=0.1)
    compute.set_defaults(func=cmd_raceline_compute)

    race = sub.add_parser("race", help="run scripted episodes")
    race_sub = race.add_subparsers(dest="race_command", required=True)
    run = race_sub.add_parser("run", help="one scripted episode with trace/SVG output")
    run.add_argument("--config", help="environment config file (YAML)")
    run.add_argument("--track", help="track CSV (used when no --config)")
    run.add_argument("--agent", default="centerline",
                     help="builtin agent name or cmd:<command> for an external agent")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--context", help="episode context as 'c_speed,c_steer'")
    run.add_argument("--trace", help="write the episode trace (JSONL) here")
    run.add_argument("--svg", help="write a paths/speeds figure here")
    run.set_defaults(func=cmd_race_run)

    evaluate = sub.add_parser("eval", help="context-grid evaluation")
    eval_sub = evaluate.add_subparsers(dest="eval_command", required=True)
    grid = eval_sub.add_parser("grid", help="run the full context grid and write reports")
    grid.add_argument("--agent", required=True,
                      help="builtin agent name or cmd:<command> for an external agent")
    grid.add_argument("--config", help="environment config file (YAML)")
    grid.add_argument("--track", help="track CSV (used when no --config)")
    grid.add_argument("--adversaries", type=int, default=1, choices=(0, 1, 2, 3))
    grid.add_argument("--laps", type=int, default=50)
    grid.add_argument("--range", default="-0.3:0.3:0.1", help="context lattice as lo:hi:step")
    grid.add_argument("--seed", type=int, default=0)
    grid.add_argument("--out", required=True, help="output directory for traces and reports")
    grid.set_defaults(func=cmd_eval_grid)

    serve_cmd = sub.add_parser("serve", help="serve the environment over stdio or TCP")
    serve_cmd.add_argument("--transport", default="stdio", help="stdio or tcp:<port>")
    serve_cmd.add_argument("--config", required=True)
    serve_cmd.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
