"""Random scenario generators shared by the property and acceptance tests."""

import numpy as np

from jerkplan.obstacles import GatePolicy, ObstacleTrack, gate_distances
from jerkplan.planner import Boundary
from jerkplan.profile import CurvatureProfile, LimitProfile, PathGrid, curvature_speed_limit

POLICY = GatePolicy()


def _grid(rng, n):
    ds = rng.uniform(0.05, 0.5)
    if rng.random() < 0.3:
        steps = ds * rng.uniform(0.5, 1.5, n - 1)
        return PathGrid(np.concatenate([[0.0], np.cumsum(steps)]))
    return PathGrid.uniform(n, ds)


def _braking_distance(v, a, j):
    """Generous stopping distance from speed ``v`` with accel/jerk magnitudes ``a``, ``j``."""
    ramp = a / j
    return 2.0 * (v * v / (2.0 * a) + 2.0 * v * ramp) + 1.0


def random_scenario(rng, n_range=(10, 300), max_obstacles=3):
    """One random planning scenario whose LP is feasible by construction.

    Slow zones start beyond a generous braking distance and obstacles cut in
    ahead of anything the ego could reach by ``t_in + t_range``, with room
    left to brake behind them.
    """
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    grid = _grid(rng, n)
    s = grid.s
    v0 = rng.uniform(0.3, 3.0)
    a_max = rng.uniform(0.5, 2.0)
    a_min = -rng.uniform(0.5, 2.0)
    j_max = rng.uniform(0.3, 2.0)
    j_min = -rng.uniform(0.3, 2.0)
    cruise = rng.uniform(v0, v0 + 5.0)
    v_max = np.full(n, cruise)
    top = cruise
    free = s[0] + _braking_distance(top, -a_min, -j_min)
    for _ in range(int(rng.integers(0, 3))):
        if free >= s[-1]:
            break
        start = rng.uniform(free, s[-1])
        length = rng.uniform(0.5, 10.0)
        zone = (s >= start) & (s <= start + length)
        v_max[zone] = np.minimum(v_max[zone], rng.uniform(0.3, 1.0) * cruise)
    if rng.random() < 0.3:
        kappa = np.abs(rng.normal(0.0, 0.05, n))
        kappa[s < free] = 0.0
        curve = curvature_speed_limit(CurvatureProfile(kappa, 0.8, cruise))
        v_max = np.minimum(v_max, np.maximum(curve, 0.3))
    limits = LimitProfile.broadcast(n, v_max=v_max, a_max=a_max, a_min=a_min,
                                    j_max=j_max, j_min=j_min)
    boundary = Boundary(v0=v0, a0=0.0)
    tracks = []
    ds_max = float(grid.ds.max())
    for _ in range(int(rng.integers(0, max_obstacles + 1))):
        v_obs = rng.uniform(0.0, cruise) if rng.random() < 0.8 else 0.0
        t_in = rng.uniform(0.0, 5.0)
        gate = gate_distances(ObstacleTrack(v_obs, 0.0, 1.0, 0.0), POLICY)
        reach = s[0] + top * (t_in + gate.t_range)
        brake = _braking_distance(top, -a_min, -j_min)
        s_in = reach + brake + gate.d_beta + ds_max + rng.uniform(0.5, 10.0)
        if s_in > s[-1]:
            continue
        t_out = t_in + rng.uniform(1.0, 10.0)
        tracks.append(ObstacleTrack(v_obs=v_obs, t_in=t_in, t_out=t_out, s_in=s_in))
    return grid, limits, tracks, boundary


def toy_scenario(rng):
    """Small instance with the reference limits: ``ds = 0.1``, ``a = +-1``, ``j = +-0.8``.

    The speed limit is a plateau above ``v0`` with an optional drop later on.
    """
    n = int(rng.integers(3, 9))
    v0 = rng.uniform(0.3, 2.0)
    v_max = np.full(n, rng.uniform(v0, v0 + 2.0))
    if rng.random() < 0.5:
        k = int(rng.integers(1, n))
        v_max[k:] = rng.uniform(v0, v_max[0])
    limits = LimitProfile.broadcast(n, v_max=v_max, a_max=1.0, a_min=-1.0, j_max=0.8, j_min=-0.8)
    return PathGrid.uniform(n, 0.1), limits, Boundary(v0=v0, a0=0.0)


def coarse_toy_scenario(rng):
    """Like :func:`toy_scenario` but with spacing up to 0.5 m and an unstructured speed limit."""
    n = int(rng.integers(3, 9))
    ds = rng.uniform(0.05, 0.5)
    v0 = rng.uniform(0.3, 2.0)
    v_max = rng.uniform(v0, v0 + 2.0, n)
    v_max[0] = max(v_max[0], v0)
    limits = LimitProfile.broadcast(n, v_max=v_max, a_max=1.0, a_min=-1.0, j_max=0.8, j_min=-0.8)
    return PathGrid.uniform(n, ds), limits, Boundary(v0=v0, a0=0.0)
