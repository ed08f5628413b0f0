import math

import numpy as np
import pytest

from racesim.adversary import (
    AdversaryConfig,
    Context,
    adversary_action,
    adversary_command,
    effective_lookahead,
    pure_pursuit_steer,
    simulate_pursuit,
)
from racesim.dynamics import VehicleParams, VehicleState, scale_action
from racesim.errors import ConfigurationError
from racesim.raceline import RacelineParams, raceline_from_points


def circle_raceline(radius=10.0, n=1000, speed=3.0):
    theta = np.linspace(0, 2 * math.pi, n, endpoint=False)
    pts = np.stack([radius * np.cos(theta), radius * np.sin(theta)], axis=1)
    params = RacelineParams(v_max=speed, a_lat_max=1e9, a_long_max=1e9)
    return raceline_from_points(pts, params)


class TestContext:
    def test_envelope_enforced(self):
        Context(0.3, -0.3)
        with pytest.raises(ConfigurationError):
            Context(0.31, 0.0)
        with pytest.raises(ConfigurationError):
            Context(0.0, -0.4)

    def test_in_distribution_split(self):
        assert Context(0.1, -0.15).in_distribution()
        assert not Context(0.2, 0.0).in_distribution()
        assert not Context(0.0, -0.2).in_distribution()


class TestAdversaryConfig:
    def test_rejects_bad_values(self):
        with pytest.raises(ConfigurationError):
            AdversaryConfig(base_lookahead=0.0)
        with pytest.raises(ConfigurationError):
            AdversaryConfig(speed_attenuation=0.0)
        with pytest.raises(ConfigurationError):
            AdversaryConfig(lambda_theta=4.0)


class TestPurePursuit:
    def test_aligned_goal_gives_zero_steer(self):
        p = VehicleParams()
        state = VehicleState(x=0, y=0, yaw=0)
        assert pure_pursuit_steer(state, (5.0, 0.0), p) == 0.0

    def test_circle_chord_oracle(self):
        # Geometric oracle: any goal on a circle of radius R through the
        # vehicle gives steer = atan(wheelbase / R), independent of the chord.
        p = VehicleParams()
        R = 4.0
        state = VehicleState(x=0, y=0, yaw=0)
        for phi in (0.2, 0.7, 1.4):
            goal = (R * math.sin(phi), R * (1 - math.cos(phi)))
            steer = pure_pursuit_steer(state, goal, p)
            assert steer == pytest.approx(math.atan(p.wheelbase / R), abs=1e-12)

    def test_saturation_at_steer_max(self):
        p = VehicleParams()
        state = VehicleState(x=0, y=0, yaw=0)
        # goal 90 degrees to the left at short range saturates the steering
        assert pure_pursuit_steer(state, (0.0, 0.3), p) == p.steer_max
        assert pure_pursuit_steer(state, (0.0, -0.3), p) == -p.steer_max

    def test_coincident_goal_rejected(self):
        p = VehicleParams()
        with pytest.raises(ValueError):
            pure_pursuit_steer(VehicleState(), (0.0, 0.0), p)


class TestContextScaling:
    def test_neutral_context_gives_30_percent_speed(self, oval_raceline):
        p = VehicleParams()
        cfg = AdversaryConfig()
        state = VehicleState(x=float(oval_raceline.points[10, 0]),
                             y=float(oval_raceline.points[10, 1]), yaw=0.0)
        _, speed = adversary_command(state, oval_raceline, cfg, Context(0, 0), p)
        goal, goal_speed = oval_raceline.lookahead_from(state.x, state.y, cfg.base_lookahead)
        assert speed == pytest.approx(0.3 * goal_speed, rel=1e-15)

    def test_speed_scaling_pointwise_exact(self, oval_raceline):
        # Same states, two contexts: commanded speeds differ by exactly 1.3
        # before clamping, because the goal depends only on the steer context.
        p = VehicleParams()
        cfg = AdversaryConfig(lambda_v=1.0)
        rng = np.random.default_rng(0)
        for _ in range(50):
            i = int(rng.integers(0, len(oval_raceline.points)))
            state = VehicleState(
                x=float(oval_raceline.points[i, 0] + rng.uniform(-0.2, 0.2)),
                y=float(oval_raceline.points[i, 1] + rng.uniform(-0.2, 0.2)),
                yaw=float(rng.uniform(-math.pi, math.pi)),
            )
            _, v0 = adversary_command(state, oval_raceline, cfg, Context(0.0, 0.0), p)
            _, v13 = adversary_command(state, oval_raceline, cfg, Context(0.3, 0.0), p)
            assert v13 == pytest.approx(1.3 * v0, rel=1e-12)

    def test_speed_monotone_in_context(self, oval_raceline):
        p = VehicleParams()
        cfg = AdversaryConfig()
        state = VehicleState(x=float(oval_raceline.points[40, 0]),
                             y=float(oval_raceline.points[40, 1]), yaw=1.0)
        speeds = [
            adversary_command(state, oval_raceline, cfg, Context(c, 0.0), p)[1]
            for c in (-0.3, -0.1, 0.0, 0.1, 0.3)
        ]
        assert all(a < b for a, b in zip(speeds, speeds[1:]))

    def test_lookahead_scaling(self):
        cfg = AdversaryConfig(base_lookahead=1.2, lambda_theta=1.0)
        assert effective_lookahead(cfg, Context(0, 0.3)) == pytest.approx(1.56)
        assert effective_lookahead(cfg, Context(0, -0.3)) == pytest.approx(0.84)
        las = [effective_lookahead(cfg, Context(0, c)) for c in (-0.3, 0.0, 0.3)]
        assert las[0] < las[1] < las[2]

    def test_action_components_in_range(self, oval_raceline):
        p = VehicleParams()
        cfg = AdversaryConfig()
        rng = np.random.default_rng(1)
        for _ in range(50):
            state = VehicleState(
                x=float(rng.uniform(-5, 25)), y=float(rng.uniform(-5, 15)),
                yaw=float(rng.uniform(-math.pi, math.pi)),
            )
            ctx = Context(float(rng.uniform(-0.3, 0.3)), float(rng.uniform(-0.3, 0.3)))
            a = adversary_action(state, oval_raceline, cfg, ctx, p)
            assert -1.0 <= a.speed_cmd <= 1.0
            assert -1.0 <= a.steer_cmd <= 1.0

    def test_action_roundtrips_commanded_speed(self, oval_raceline):
        p = VehicleParams()
        cfg = AdversaryConfig()
        state = VehicleState(x=float(oval_raceline.points[5, 0]),
                             y=float(oval_raceline.points[5, 1]), yaw=0.1)
        steer, speed = adversary_command(state, oval_raceline, cfg, Context(0, 0), p)
        action = adversary_action(state, oval_raceline, cfg, Context(0, 0), p)
        back_speed, back_steer = scale_action(action, p)
        assert back_speed == pytest.approx(speed, abs=1e-12)
        assert back_steer == pytest.approx(steer, abs=1e-12)


class TestClosedLoop:
    def test_steady_state_circle_steer(self):
        # Analytic oracle: following a circle of radius 10 with wheelbase
        # 0.33 settles at steer = atan(0.33 / 10) (checked within 5%).
        line = circle_raceline(radius=10.0, speed=3.0)
        p = VehicleParams()
        cfg = AdversaryConfig(speed_attenuation=1.0)
        start = VehicleState(x=10.0, y=0.0, yaw=math.pi / 2)
        states = simulate_pursuit(line, cfg, Context(0, 0), p, start, n_steps=150)
        steers = [s.steer for s in states[100:]]
        expected = math.atan(p.wheelbase / 10.0)
        assert np.mean(steers) == pytest.approx(expected, rel=0.05)
        assert max(steers) - min(steers) < 0.2 * expected

    def test_tracking_error_on_oval(self, oval_raceline):
        p = VehicleParams()
        cfg = AdversaryConfig()
        x, y = oval_raceline.points[0]
        heading = float(oval_raceline.heading[0])
        start = VehicleState(x=float(x), y=float(y), yaw=heading)
        states = simulate_pursuit(oval_raceline, cfg, Context(0, 0), p, start, n_steps=400)
        errors = [oval_raceline.cross_track_error(s.x, s.y) for s in states[50:]]
        assert max(errors) < 0.15

    def test_corner_cutting_monotone_in_steer_context(self, corner_raceline):
        # Driven-path curvature oracle: a longer lookahead cuts the tight
        # corner, so max path curvature is non-increasing in the context.
        p = VehicleParams()
        cfg = AdversaryConfig()
        x, y = corner_raceline.points[0]
        start = VehicleState(x=float(x), y=float(y), yaw=float(corner_raceline.heading[0]))
        maxima = []
        for c in (-0.3, 0.0, 0.3):
            states = simulate_pursuit(corner_raceline, cfg, Context(0, c), p, start, n_steps=700)
            maxima.append(max_path_curvature([(s.x, s.y) for s in states[30:]]))
        assert maxima[0] >= maxima[1] >= maxima[2]


def max_path_curvature(points, window=5):
    """Curvature of a driven path via heading change over arc length."""
    pts = np.asarray(points)
    # decimate to ~0.3 m spacing to suppress control-rate jitter
    keep = [0]
    for i in range(1, len(pts)):
        if np.linalg.norm(pts[i] - pts[keep[-1]]) >= 0.3:
            keep.append(i)
    pts = pts[keep]
    chords = np.diff(pts, axis=0)
    headings = np.arctan2(chords[:, 1], chords[:, 0])
    seg = np.linalg.norm(chords, axis=1)
    dh = np.diff(headings)
    dh = (dh + math.pi) % (2 * math.pi) - math.pi
    ds = 0.5 * (seg[:-1] + seg[1:])
    kappa = np.abs(dh / ds)
    # windowed mean smooths residual jitter
    kernel = np.ones(window) / window
    smooth = np.convolve(kappa, kernel, mode="valid")
    return float(smooth.max())
