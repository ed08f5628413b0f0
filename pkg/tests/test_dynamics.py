import math

import pytest
from hypothesis import given, strategies as st

from racesim.dynamics import (
    Action,
    VehicleParams,
    VehicleState,
    scale_action,
    step_physics,
    substep,
    unscale_command,
    wrap_angle,
)


@pytest.fixture
def p():
    return VehicleParams()


class TestScaleAction:
    def test_full_throttle(self, p):
        assert scale_action(Action(1.0, 0.0), p) == (8.0, 0.0)

    def test_boundary(self, p):
        assert scale_action(Action(-1.0, -1.0), p) == (0.0, -0.4)

    def test_linear_midpoint(self, p):
        speed, steer = scale_action(Action(0.0, 0.5), p)
        assert speed == pytest.approx(4.0)
        assert steer == pytest.approx(0.2)

    @given(st.floats(-3, 3), st.floats(-3, 3))
    def test_outputs_always_in_physical_range(self, speed_cmd, steer_cmd):
        p = VehicleParams()
        speed, steer = scale_action(Action(speed_cmd, steer_cmd), p)
        assert 0.0 <= speed <= p.v_max
        assert -p.steer_max <= steer <= p.steer_max

    @given(st.floats(-1, 1), st.floats(-1, 1))
    def test_unscale_inverts_scale(self, speed_cmd, steer_cmd):
        p = VehicleParams()
        speed, steer = scale_action(Action(speed_cmd, steer_cmd), p)
        back = unscale_command(speed, steer, p)
        assert back.speed_cmd == pytest.approx(speed_cmd, abs=1e-12)
        assert back.steer_cmd == pytest.approx(steer_cmd, abs=1e-12)


class TestStepPhysics:
    def test_straight_line(self, p):
        s = VehicleState(x=0, y=0, v=1.0, yaw=0, yaw_rate=0, steer=0, slip=0)
        out = step_physics(s, 1.0, 0.0, p, 0.01)
        assert out.x == pytest.approx(0.01)
        assert out.y == 0.0
        assert out.yaw == 0.0
        assert out.yaw_rate == 0.0
        assert out.steer == 0.0
        assert out.slip == 0.0

    def test_steer_rate_clamp(self, p):
        s = VehicleState(v=1.0)
        out = step_physics(s, 1.0, 0.4, p, 0.01)
        assert out.steer == pytest.approx(p.steer_rate_max * 0.01)

    def test_steady_circle_yaw_increment(self, p):
        # Closed-form kinematic single-track: holding steer delta at speed v,
        # each step turns the heading by dt * v * tan(delta) / wheelbase.
        delta, v, dt = 0.2, 2.0, 0.01
        expected = dt * v * math.tan(delta) / p.wheelbase
        s = VehicleState(v=v, steer=delta)
        out = step_physics(s, v, delta, p, dt)
        assert out.yaw == pytest.approx(expected, rel=1e-12)

    def test_rate_limits_hold_every_substep(self, p):
        s = VehicleState()
        dt = 0.01
        for _ in range(200):
            nxt = step_physics(s, 8.0, 0.4, p, dt)
            assert abs(nxt.steer - s.steer) <= p.steer_rate_max * dt + 1e-12
            assert abs(nxt.v - s.v) <= p.accel_max * dt + 1e-12
            s = nxt

    def test_determinism_bit_identical(self, p):
        s = VehicleState(x=1.2, y=-0.4, v=3.0, yaw=0.7, steer=0.1)
        a = step_physics(s, 5.0, 0.3, p, 0.01)
        b = step_physics(s, 5.0, 0.3, p, 0.01)
        assert a == b

    def test_speed_never_negative(self, p):
        s = VehicleState(v=0.01)
        for _ in range(100):
            s = step_physics(s, 0.0, 0.0, p, 0.01)
            assert s.v >= 0.0

    def test_kinematic_circle_radius(self):
        # With slip forced to ~0 (rear axle at the center of gravity) and a
        # constant steer, 10 s of driving settles onto a circle of radius
        # wheelbase / tan(steer) within 1%. Circle fit is algebraic least
        # squares, which is exact for points on a circle.
        import numpy as np

        p = VehicleParams(wheelbase=0.33, lf=0.33 - 1e-9, lr=1e-9)
        delta = 0.3
        s = VehicleState(v=2.0, steer=delta)
        pts = []
        for i in range(1000):
            s = step_physics(s, 2.0, delta, p, 0.01)
            if i >= 500:
                pts.append((s.x, s.y))
        pts = np.array(pts)
        a = np.column_stack([2 * pts[:, 0], 2 * pts[:, 1], np.ones(len(pts))])
        b = (pts**2).sum(axis=1)
        (cx, cy, c), *_ = np.linalg.lstsq(a, b, rcond=None)
        radii = np.hypot(pts[:, 0] - cx, pts[:, 1] - cy)
        expected = p.wheelbase / math.tan(delta)
        assert radii.max() == pytest.approx(expected, rel=0.01)
        assert radii.min() == pytest.approx(expected, rel=0.01)


class TestSubstep:
    def test_single_substep_equals_step(self, p):
        s = VehicleState(v=2.0, yaw=0.3)
        a = Action(0.5, 0.2)
        speed, steer = scale_action(a, p)
        assert substep(s, a, p, 1, 0.01) == step_physics(s, speed, steer, p, 0.01)

    def test_ten_substeps_advance_point_one_second(self, p):
        s = VehicleState(v=4.0)
        out = substep(s, Action(0.0, 0.0), p, 10, 0.01)
        assert out.x == pytest.approx(4.0 * 0.1, rel=1e-6)

    def test_rest_state_is_fixed_point(self, p):
        s = VehicleState.at_rest(1.0, 2.0, 0.5)
        out = substep(s, Action(-1.0, 0.0), p, 10, 0.01)
        assert out == s

    def test_composability(self, p):
        s = VehicleState(x=0.3, y=0.1, v=2.5, yaw=-0.4, steer=0.05)
        a = Action(0.7, -0.3)
        whole = substep(s, a, p, 10, 0.01)
        split = s
        for _ in range(5):
            split = substep(split, a, p, 2, 0.01)
        assert whole == split


class TestWrapAngle:
    @given(st.floats(-50, 50))
    def test_range(self, a):
        w = wrap_angle(a)
        assert -math.pi < w <= math.pi
        # same direction
        assert math.cos(w) == pytest.approx(math.cos(a), abs=1e-9)
        assert math.sin(w) == pytest.approx(math.sin(a), abs=1e-9)

    def test_negative_pi_maps_to_pi(self):
        assert wrap_angle(-math.pi) == pytest.approx(math.pi)
        assert wrap_angle(math.pi) == pytest.approx(math.pi)
