"""Turn dynamic obstacles on the path into pointwise maximum-velocity limits.

Each obstacle moves along the ego path on a straight s-t line between its
cut-in and cut-out times. While the ego vehicle's nominal arrival at a grid
point comes close to the obstacle, in space and in time, the speed limit at
that point is lowered to an approach speed (outer gate) or to the
obstacle's own speed (inner gate).
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import OutOfWindowError, ScenarioError, UnreachableError
from .profile import PathGrid

FOLLOW = "after"
LEAD = "before"


@dataclass(frozen=True)
class ObstacleTrack:
    """Obstacle on the ego path: ``s(t) = v_obs (t - t_in) + s_in`` for ``t_in <= t <= t_out``.

    ``mode`` selects how the validator resolves the conflict: pass after the
    obstacle (``"after"``, follow it) or before it (``"before"``).
    """

    v_obs: float
    t_in: float
    t_out: float
    s_in: float
    mode: str = FOLLOW

    def __post_init__(self):
        if not (math.isfinite(self.t_in) and math.isfinite(self.s_in)):
            raise ScenarioError("obstacle t_in and s_in must be finite")
        if not self.t_out > self.t_in:
            raise ScenarioError(f"obstacle t_out ({self.t_out}) must exceed t_in ({self.t_in})")
        if not (self.v_obs >= 0 and math.isfinite(self.v_obs)):
            raise ScenarioError("obstacle speed must be finite and non-negative")
        if self.mode not in (FOLLOW, LEAD):
            raise ScenarioError(f"unknown obstacle mode {self.mode!r}")


@dataclass(frozen=True)
class GateParams:
    d_alpha: float
    d_beta: float
    t_range: float

    def __post_init__(self):
        if not (self.d_alpha >= self.d_beta >= 0):
            raise ScenarioError("gates must satisfy d_alpha >= d_beta >= 0")
        if not self.t_range > 0:
            raise ScenarioError("t_range must be positive")


@dataclass(frozen=True)
class GatePolicy:
    """Speed-dependent gate rule: ``d_beta = combine(v_obs t_safe, d_min) + d_margin``."""

    t_safe: float = 2.0
    d_min: float = 3.0
    d_margin: float = 2.0
    t_range: float = 1.0
    combiner: str = "min"

    def __post_init__(self):
        if min(self.t_safe, self.d_min, self.d_margin) < 0:
            raise ScenarioError("gate policy values must be non-negative")
        if not self.t_range > 0:
            raise ScenarioError("t_range must be positive")
        if self.combiner not in ("min", "max"):
            raise ScenarioError(f"gate combiner must be 'min' or 'max', got {self.combiner!r}")


def obstacle_position(track: ObstacleTrack, t: float) -> float:
    if not track.t_in <= t <= track.t_out:
        raise OutOfWindowError(f"t = {t} is outside [{track.t_in}, {track.t_out}]")
    return track.v_obs * (t - track.t_in) + track.s_in


def cut_out_point(track: ObstacleTrack) -> float:
    """Arc length where the obstacle leaves the path (``inf`` if it never leaves while moving)."""
    if track.v_obs == 0:
        return track.s_in
    return track.v_obs * (track.t_out - track.t_in) + track.s_in


def reach_time_under_vmax(grid: PathGrid, v_max, s_target: float) -> float:
    """Travel time from ``s[0]`` to ``s_target`` driving exactly at ``v_max``.

    Left-endpoint rule on each interval, with a linear fraction of the last
    partial interval.
    """
    s = grid.s
    v = np.asarray(v_max, dtype=float)
    if not s[0] <= s_target <= s[-1]:
        raise ValueError(f"s_target = {s_target} lies outside the grid")
    last = int(np.searchsorted(s, s_target, side="right")) - 1
    full = slice(0, last)
    partial = s_target - s[last]
    used = v[: last + 1] if partial > 0 else v[:last]
    if np.any(used <= 0):
        idx = int(np.argmax(used <= 0))
        raise UnreachableError(f"speed limit is zero at index {idx} before s = {s_target}")
    t = float(np.sum(grid.ds[full] / v[full]))
    if partial > 0:
        t += partial / v[last]
    return t


def follow_speed(track: ObstacleTrack, s_alpha: float, t_alpha: float) -> Optional[float]:
    """Approach speed that brings the ego to the cut-out point as the obstacle leaves.

    Returns ``None`` when the obstacle is gone before the ego arrives
    (``t_alpha >= t_out``): the gate is inactive.
    """
    if t_alpha >= track.t_out:
        return None
    if math.isinf(track.t_out):
        return track.v_obs
    return max(0.0, (cut_out_point(track) - s_alpha) / (track.t_out - t_alpha))


def gate_distances(track: ObstacleTrack, policy: GatePolicy) -> GateParams:
    """Gate distances for one obstacle. Both gates coincide."""
    combine = min if policy.combiner == "min" else max
    d_beta = combine(track.v_obs * policy.t_safe, policy.d_min) + policy.d_margin
    return GateParams(d_alpha=d_beta, d_beta=d_beta, t_range=policy.t_range)


def _time_offset(track: ObstacleTrack, s_k: float, t_k: float, d: float) -> Optional[float]:
    """Time distance from ``t_k`` to the obstacle's presence within ``d`` of ``s_k``.

    ``None`` if the obstacle never comes within ``d`` of ``s_k``.
    """
    if track.v_obs == 0:
        if abs(track.s_in - s_k) > d:
            return None
        lo, hi = track.t_in, track.t_out
    else:
        lo = max(track.t_in, track.t_in + (s_k - d - track.s_in) / track.v_obs)
        hi = min(track.t_out, track.t_in + (s_k + d - track.s_in) / track.v_obs)
        if lo > hi:
            return None
    if t_k < lo:
        return lo - t_k
    if t_k > hi:
        return t_k - hi
    return 0.0


def _filter_one(grid: PathGrid, v_max: np.ndarray, track: ObstacleTrack, gate: GateParams,
                pad: float) -> np.ndarray:
    s, ds = grid.s.tolist(), grid.ds.tolist()
    caps = v_max.tolist()
    n = len(s)
    out = list(caps)
    d_beta = gate.d_beta + pad
    d_alpha = gate.d_alpha + pad
    t = 0.0
    approach = None
    for k in range(n):
        off = _time_offset(track, s[k], t, d_beta)
        if off is not None and off <= gate.t_range:
            out[k] = min(track.v_obs, caps[k])
            approach = None
        else:
            off = _time_offset(track, s[k], t, d_alpha)
            if off is not None and off <= gate.t_range:
                if approach is None:
                    try:
                        t_alpha = reach_time_under_vmax(grid, v_max, s[k])
                        approach = follow_speed(track, s[k], t_alpha)
                    except UnreachableError:
                        approach = None
                    if approach is None:
                        approach = math.inf
                out[k] = min(approach, caps[k])
            else:
                approach = None
        if k < n - 1:
            t = t + ds[k] / out[k] if out[k] > 0 else math.inf
    return np.array(out)


def apply_velocity_limit_filter(grid: PathGrid, v_max, tracks: Sequence[ObstacleTrack],
                                gates: Sequence[GateParams], pad: Optional[float] = None
                                ) -> np.ndarray:
    """Lower ``v_max`` wherever the nominal ego arrival conflicts with an obstacle.

    For every grid point the nominal arrival time is accumulated from the
    limits already assigned upstream. If the obstacle comes within
    ``d_beta + pad`` of the point within ``t_range`` of that arrival, the
    limit becomes the obstacle speed; within ``d_alpha + pad`` it becomes the
    approach speed. ``pad`` defaults to the largest grid spacing, which keeps
    the left-endpoint time discretization from stepping into the inner gate.
    Results for several obstacles combine by pointwise minimum and never
    exceed the input.
    """
    v_max = np.asarray(v_max, dtype=float)
    if v_max.size != grid.n:
        raise ScenarioError(f"v_max has length {v_max.size}, grid has {grid.n} points")
    if len(tracks) != len(gates):
        raise ScenarioError("need exactly one gate set per obstacle")
    if pad is None:
        pad = float(grid.ds.max())
    out = v_max.copy()
    for track, gate in zip(tracks, gates):
        out = np.minimum(out, _filter_one(grid, v_max, track, gate, pad))
    return out
