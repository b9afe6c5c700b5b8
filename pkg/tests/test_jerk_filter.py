import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jerkplan.jerk_filter import V_EPS, backward_pass, forward_pass, jerk_filter
from jerkplan.profile import LimitProfile, PathGrid
from jerkplan.scenario import reference_preset
from jerkplan.planner import obstacle_limit

seeds = st.integers(0, 2**32 - 1)


def _random_limits(rng):
    n = int(rng.integers(3, 120))
    grid = PathGrid.uniform(n, rng.uniform(0.05, 0.5))
    if rng.random() < 0.5:
        v_max = rng.uniform(0.3, 5.0, n)
    else:
        v_max = np.repeat(rng.uniform(0.3, 5.0, 4), -(-n // 4))[:n]
    a, j = rng.uniform(0.5, 2.0), rng.uniform(0.3, 2.0)
    limits = LimitProfile.broadcast(n, v_max=v_max, a_max=a, a_min=-a, j_max=j, j_min=-j)
    v0 = min(v_max[0], rng.uniform(0.0, 3.0))
    return grid, limits, v0


class TestForwardPass:
    def test_first_step_hand_trace(self):
        grid = PathGrid.uniform(3, 0.1)
        v, a = forward_pass(grid, np.full(3, 10.0), 1.0, 0.8, 0.5, 0.0)
        # dt = 0.1 / 0.5 = 0.2, a = 0.8 * 0.2, v = 0.5 + 0.16 * 0.2
        assert a[1] == pytest.approx(0.16)
        assert v[1] == pytest.approx(0.532)

    def test_already_at_limit(self):
        grid = PathGrid.uniform(20, 0.2)
        v, _ = forward_pass(grid, np.full(20, 1.5), 1.0, 0.8, 1.5, 0.0)
        np.testing.assert_array_equal(v, 1.5)

    def test_zero_jerk_builds_no_acceleration(self):
        grid = PathGrid.uniform(20, 0.2)
        v, a = forward_pass(grid, np.full(20, 5.0), 1.0, 0.0, 1.2, 0.0)
        np.testing.assert_array_equal(v, 1.2)
        np.testing.assert_array_equal(a, 0.0)

    def test_standing_start_moves(self):
        grid = PathGrid.uniform(30, 0.1)
        v, _ = forward_pass(grid, np.full(30, 5.0), 1.0, 0.8, 0.0, 0.0)
        assert v[0] == 0.0
        assert np.all(v[1:] > 0.0)

    def test_infinite_jerk_jumps_to_acceleration_limit(self):
        grid = PathGrid.uniform(5, 0.1)
        v, a = forward_pass(grid, np.full(5, 50.0), 1.0, np.inf, 1.0, 0.0)
        np.testing.assert_array_equal(a[1:], 1.0)
        assert v[1] == pytest.approx(1.0 + 1.0 * 0.1)

    @settings(max_examples=100, deadline=None)
    @given(seeds)
    def test_monotone_in_acceleration_limit(self, seed):
        rng = np.random.default_rng(seed)
        grid, limits, v0 = _random_limits(rng)
        a, j = limits.a_max[0], limits.j_max[0]
        low, _ = forward_pass(grid, limits.v_max, a, j, v0, 0.0)
        high, _ = forward_pass(grid, limits.v_max, a * rng.uniform(1.0, 2.0), j, v0, 0.0)
        assert np.all(high >= low - 1e-12)

    @pytest.mark.xfail(strict=True, reason="discrete step dt = ds / v shrinks as speed grows, "
                       "so a larger jerk limit can lower later samples; see decisions ledger")
    def test_monotone_in_jerk_limit(self):
        rng = np.random.default_rng(1)
        for _ in range(500):
            grid, limits, v0 = _random_limits(rng)
            a, j = limits.a_max[0], limits.j_max[0]
            low, _ = forward_pass(grid, limits.v_max, a, j, v0, 0.0)
            high, _ = forward_pass(grid, limits.v_max, a, j * rng.uniform(1.0, 2.0), v0, 0.0)
            assert np.all(high >= low - 1e-12)


class TestBackwardPass:
    def test_no_slowdown_is_identity(self):
        grid = PathGrid.uniform(10, 0.3)
        v_fw = np.full(10, 2.0)
        v_bw, _ = backward_pass(grid, np.full(10, 2.0), -1.0, -0.8, v_fw)
        np.testing.assert_array_equal(v_bw, v_fw)

    def test_stop_at_end_hand_trace(self):
        grid = PathGrid.uniform(5, 1.0)
        v_max = np.array([5.0, 5.0, 5.0, 5.0, 0.0])
        v_fw = np.array([3.0, 3.0, 3.0, 3.0, 0.0])
        v_bw, a_bw = backward_pass(grid, v_max, -1.0, -1.0, v_fw)
        # Reverse sweep from rest: the first step is capped at (6 ds / j)^(1/3).
        dt = 6.0 ** (1.0 / 3.0)
        v3 = min(3.0, 0.0 + 1.0 * dt)
        dt2 = min(1.0 / v3, dt)
        v2 = min(3.0, v3 + 1.0 * dt2)
        assert v_bw[4] == 0.0
        assert v_bw[3] == pytest.approx(v3)
        assert v_bw[2] == pytest.approx(v2)
        assert np.all(np.diff(v_bw[2:]) <= 0)
        assert np.all(a_bw >= -1.0)

    def test_terminal_value_preserved(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            grid, limits, v0 = _random_limits(rng)
            f = jerk_filter(grid, limits, v0, 0.0)
            assert f.v_f[-1] == f.v_forward[-1]


class TestJerkFilter:
    def test_constant_limit_at_start_speed(self):
        grid = PathGrid.uniform(40, 0.1)
        limits = LimitProfile.broadcast(40, v_max=2.0, a_max=1.0, a_min=-1.0, j_max=0.8, j_min=-0.8)
        f = jerk_filter(grid, limits, 2.0, 0.0)
        np.testing.assert_array_equal(f.v_f, 2.0)
        assert f.v_f is f.v_backward

    def test_preset_shape(self):
        """Smooth rise from the start speed, a plateau, and descents that begin before each drop."""
        sc = reference_preset()
        limits = sc.effective_limits()
        v_hat = obstacle_limit(sc.grid, limits, sc.tracks, sc.gates)
        f = jerk_filter(sc.grid, limits.replace(v_max=v_hat), 0.5, 0.0)
        assert f.v_f[0] == 0.5
        assert np.all(f.v_f <= v_hat + 1e-12)
        rise = np.diff(f.v_f[:20])
        assert np.all(rise > 0)
        drop = int(np.argmax(np.diff(v_hat) < 0)) + 1
        assert f.v_f[drop - 5] < v_hat[drop - 5]
        assert np.all(np.diff(f.v_f[drop - 10:drop + 1]) < 0)

    @settings(max_examples=300, deadline=None)
    @given(seeds)
    def test_dominance(self, seed):
        rng = np.random.default_rng(seed)
        grid, limits, v0 = _random_limits(rng)
        f = jerk_filter(grid, limits, v0, 0.0)
        assert np.all(f.v_f >= 0)
        assert np.all(f.v_f <= limits.v_max)
        assert np.all(f.v_f <= f.v_forward)

    @settings(max_examples=100, deadline=None)
    @given(seeds)
    def test_idempotent(self, seed):
        rng = np.random.default_rng(seed)
        grid, limits, v0 = _random_limits(rng)
        once = jerk_filter(grid, limits, v0, 0.0)
        twice = jerk_filter(grid, limits.replace(v_max=once.v_f), v0, 0.0)
        np.testing.assert_allclose(twice.v_f, once.v_f, rtol=0, atol=1e-9)

    def test_epsilon_floor(self):
        assert V_EPS == 1e-3
