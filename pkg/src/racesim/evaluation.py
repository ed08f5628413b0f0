"""Context-grid evaluation: per-cell racing metrics and the ID/OOD report.

Metrics are always recomputed from the persisted episode trace logs, so any
report is a pure function of the traces on disk. Cells are independent:
their seeds derive from the grid seed and the cell's context value, so
enlarging the grid never changes existing cells.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from dataclasses import dataclass

from .adversary import Context
from .env import RaceEnv

TRAIN_BOUND = 0.15


@dataclass(frozen=True)
class ContextGrid:
    cells: tuple[Context, ...]
    laps: int


@dataclass
class MetricsCell:
    context: Context
    pg_mean: float
    ot_mean: float
    a2a_count: int
    n_episodes: int
    in_distribution: bool
    failed: bool = False
    diagnostic: str = ""


def build_grid(
    range_lo: float = -0.3, range_hi: float = 0.3, step: float = 0.1, laps: int = 50
) -> ContextGrid:
    """Cartesian product of a 1-D context lattice with itself."""
    from .errors import ConfigurationError

    if range_lo >= range_hi:
        raise ConfigurationError("grid range must have range_lo < range_hi")
    if step <= 0:
        raise ConfigurationError("grid step must be positive")
    count = (range_hi - range_lo) / step
    if abs(count - round(count)) > 1e-9:
        raise ConfigurationError(
            f"step {step} does not divide the range [{range_lo}, {range_hi}]"
        )
    n = int(round(count)) + 1
    values = [round(range_lo + k * step, 12) for k in range(n)]
    cells = tuple(Context(cv, ct) for cv in values for ct in values)
    return ContextGrid(cells=cells, laps=laps)


def cell_seed(grid_seed: int, ctx: Context) -> int:
    """Stable per-cell seed; keyed by context value, not grid position."""
    key = f"{grid_seed}:{ctx.speed_coeff:.6f}:{ctx.steer_coeff:.6f}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=4).digest(), "big")


# -- trace-based metrics -----------------------------------------------------


def split_trace_episodes(lines) -> list[list[dict]]:
    """Group JSONL trace lines into episodes (each starts at a header record)."""
    episodes: list[list[dict]] = []
    for line in lines:
        line = line.strip()
        if not line:
            continue
        record = json.loads(line)
        if record.get("type") == "header":
            episodes.append([record])
        else:
            if not episodes:
                raise ValueError("trace does not start with a header record")
            episodes[-1].append(record)
    return episodes


def episode_metrics(records: list[dict]) -> dict:
    """PG, OT and the final cause for a single episode's records."""
    steps = [r for r in records if r.get("type") == "step"]
    if not steps:
        return {"pg": 0.0, "ot": 0, "cause": "none", "a2a": False}
    pg = max(r["max_progress"] for r in steps)
    ot = sum(r["overtake_delta"] for r in steps)
    cause = steps[-1]["cause"]
    return {"pg": pg, "ot": ot, "cause": cause, "a2a": cause == "agent_collision"}


def metrics_from_trace(lines) -> list[dict]:
    return [episode_metrics(records) for records in split_trace_episodes(lines)]


def cell_from_episodes(ctx: Context, episodes: list[dict]) -> MetricsCell:
    n = len(episodes)
    return MetricsCell(
        context=ctx,
        pg_mean=sum(e["pg"] for e in episodes) / n if n else 0.0,
        ot_mean=sum(e["ot"] for e in episodes) / n if n else 0.0,
        a2a_count=sum(1 for e in episodes if e["a2a"]),
        n_episodes=n,
        in_distribution=ctx.in_distribution(),
    )


# -- episode and cell execution ----------------------------------------------


def run_episode(env: RaceEnv, policy, seed: int, context: Context, trace_sink) -> None:
    """One full episode, appended to the trace sink the env writes to."""
    env.set_trace(trace_sink)
    obs, info = env.reset(seed, context)
    policy.reset(obs, info)
    while not env.done:
        result = env.step(policy.act(obs, info))
        obs = result.obs
        info = dict(result.info)
        info["reward"] = result.reward
        info["done"] = result.done
    env.set_trace(None)


def run_cell(
    env: RaceEnv,
    policy,
    ctx: Context,
    laps: int,
    seed_base: int,
    trace_path: str | None = None,
) -> MetricsCell:
    """Run ``laps`` episodes at one context; metrics come from the trace."""
    sink = io.StringIO()
    try:
        for lap in range(laps):
            run_episode(env, policy, seed_base + lap, ctx, sink)
    except Exception as exc:  # agent protocol violation or similar
        cell = cell_from_episodes(ctx, [])
        cell.failed = True
        cell.diagnostic = f"{type(exc).__name__}: {exc}"
        return cell
    finally:
        if trace_path is not None:
            with open(trace_path, "w") as f:
                f.write(sink.getvalue())
    episodes = metrics_from_trace(sink.getvalue().splitlines())
    return cell_from_episodes(ctx, episodes)


def cell_trace_name(ctx: Context) -> str:
    return f"cell_{ctx.speed_coeff:+.2f}_{ctx.steer_coeff:+.2f}.jsonl"


def evaluate_grid(
    env: RaceEnv,
    policy,
    grid: ContextGrid,
    grid_seed: int = 0,
    out_dir: str | None = None,
) -> list[MetricsCell]:
    """Run every cell sequentially with one env/policy pair.

    Cells are deterministic and order-independent (seeds depend only on the
    grid seed and the cell context), so shuffled or parallel execution over
    separate env instances merges to the same result.
    """
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
    cells = []
    for ctx in grid.cells:
        trace_path = os.path.join(out_dir, cell_trace_name(ctx)) if out_dir else None
        cells.append(run_cell(env, policy, ctx, grid.laps, cell_seed(grid_seed, ctx), trace_path))
    return cells


# -- aggregation and reports ---------------------------------------------------


def aggregate(cells: list[MetricsCell]) -> dict:
    """Unweighted per-split means of the cell means (equal lap counts)."""
    splits = {
        "id": [c for c in cells if c.in_distribution],
        "ood": [c for c in cells if not c.in_distribution],
    }
    out: dict = {}
    for metric, attr in (("pg", "pg_mean"), ("ot", "ot_mean"), ("a2a", "a2a_count")):
        out[metric] = {
            split: (sum(getattr(c, attr) for c in group) / len(group)) if group else float("nan")
            for split, group in splits.items()
        }
    return out


def relative_change(id_value: float, ood_value: float) -> float:
    """Percent change from the in-distribution value to the OOD value."""
    if id_value == 0:
        raise ZeroDivisionError("relative change undefined for a zero in-distribution value")
    return (ood_value - id_value) / id_value * 100.0


def relative_report(summary: dict, metrics: tuple[str, ...] = ("pg", "a2a")) -> dict:
    """Generalization deltas; the overtake metric is excluded by default
    because context shifts change how hard overtaking is in the first place.
    A zero in-distribution value makes the delta undefined (reported as NaN).
    """
    out = {}
    for m in metrics:
        try:
            out[m] = relative_change(summary[m]["id"], summary[m]["ood"])
        except ZeroDivisionError:
            out[m] = float("nan")
    return out


def write_reports(cells: list[MetricsCell], out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "cells.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(
            ["speed_ctx", "steer_ctx", "in_distribution", "pg_mean", "ot_mean",
             "a2a_count", "n_episodes", "failed", "diagnostic"]
        )
        for c in cells:
            w.writerow(
                [c.context.speed_coeff, c.context.steer_coeff, int(c.in_distribution),
                 c.pg_mean, c.ot_mean, c.a2a_count, c.n_episodes, int(c.failed), c.diagnostic]
            )
    summary = aggregate(cells)
    with open(os.path.join(out_dir, "summary.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["split", "pg", "ot", "a2a"])
        for split in ("id", "ood"):
            w.writerow([split, summary["pg"][split], summary["ot"][split], summary["a2a"][split]])
    rel = relative_report(summary)
    with open(os.path.join(out_dir, "relative.csv"), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["metric", "percent_change"])
        for metric, value in rel.items():
            w.writerow([metric, value])
    with open(os.path.join(out_dir, "table.txt"), "w") as f:
        f.write(format_table(cells))


def format_table(cells: list[MetricsCell]) -> str:
    """Aligned text table: an in-distribution block, then the OOD block."""
    summary = aggregate(cells)
    lines = [f"{'':>18}{'PG':>10}{'OT':>10}{'A2A':>10}"]
    for split, label in (("id", "in-distribution"), ("ood", "out-of-distribution")):
        lines.append(
            f"{label:>18}"
            f"{summary['pg'][split]:>10.4f}"
            f"{summary['ot'][split]:>10.4f}"
            f"{summary['a2a'][split]:>10.4f}"
        )
    rel = relative_report(summary)
    lines.append("")
    lines.append(f"{'rel. change %':>18}{rel['pg']:>10.4f}{'':>10}{rel['a2a']:>10.4f}")
    return "\n".join(lines) + "\n"
