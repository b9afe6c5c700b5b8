"""Check plans against the original non-convex problem, and a brute-force oracle.

The original problem keeps the true jerk ``(a[i+1] - a[i]) / ds * sqrt(b)``
and explicit passing-time windows per grid point. Neither is convex, so
this module only evaluates them: on a finished plan, or exhaustively on
tiny instances.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import InfeasibleError, ScenarioError
from .obstacles import FOLLOW, GateParams, ObstacleTrack
from .planner import Boundary
from .profile import LimitProfile, PathGrid, PlanningState, passing_times_from_velocity

log = logging.getLogger(__name__)

FAMILIES = ("velocity", "acceleration", "jerk", "dynamics", "time-window")


@dataclass(frozen=True)
class TimeWindowConstraint:
    """Per-point bounds ``T_min[i] <= t_i <= T_max[i]`` on the passing time."""

    t_min: np.ndarray
    t_max: np.ndarray

    def __post_init__(self):
        t_min = np.array(self.t_min, dtype=float).reshape(-1)
        t_max = np.array(self.t_max, dtype=float).reshape(-1)
        if t_min.size != t_max.size:
            raise ScenarioError("T_min and T_max must have the same length")
        if np.any(np.isnan(t_min)) or np.any(np.isnan(t_max)):
            raise ScenarioError("time windows contain NaN")
        bad = t_min > t_max
        if np.any(bad):
            idx = int(np.argmax(bad))
            raise ScenarioError(f"contradictory time window at index {idx}: "
                                f"T_min = {t_min[idx]} > T_max = {t_max[idx]}")
        object.__setattr__(self, "t_min", t_min)
        object.__setattr__(self, "t_max", t_max)

    @classmethod
    def unconstrained(cls, n):
        return cls(np.full(n, -np.inf), np.full(n, np.inf))

    def __len__(self):
        return self.t_min.size


@dataclass
class FeasibilityReport:
    """Worst violation per constraint family and the indices above tolerance."""

    violations: Dict[str, float]
    offending: Dict[str, np.ndarray]
    tol: float
    feasible: bool = field(init=False)

    def __post_init__(self):
        self.feasible = all(v <= self.tol for v in self.violations.values())

    def summary(self) -> str:
        parts = [f"{k}={v:.3g}" for k, v in self.violations.items()]
        return ("feasible" if self.feasible else "INFEASIBLE") + " (" + ", ".join(parts) + ")"

    def as_dict(self) -> dict:
        return {"feasible": self.feasible, "tol": self.tol,
                "violations": {k: float(v) for k, v in self.violations.items()},
                "offending": {k: [int(i) for i in v] for k, v in self.offending.items()}}


def _pass_window(track: ObstacleTrack, gate: GateParams, s: np.ndarray, t_margin: float):
    """First and last time the obstacle is within ``d_beta`` of each point (NaN if never)."""
    d = gate.d_beta
    if track.v_obs == 0:
        near = np.abs(s - track.s_in) <= d
        first = np.where(near, track.t_in, np.nan)
        last = np.where(near, track.t_out, np.nan)
        return first, last
    enter = track.t_in + (s - d - track.s_in) / track.v_obs
    leave = track.t_in + (s + d - track.s_in) / track.v_obs
    first = np.maximum(track.t_in, enter)
    last = np.minimum(track.t_out, leave)
    never = first > last
    return np.where(never, np.nan, first), np.where(never, np.nan, last)


def windows_from_tracks(tracks: Sequence[ObstacleTrack], gates: Sequence[GateParams],
                        grid: PathGrid, t_margin=None) -> TimeWindowConstraint:
    """Passing-time windows that keep the ego ``d_beta`` clear of every obstacle.

    A point is constrained when the obstacle comes within ``d_beta`` of it
    during ``[t_in, t_out]``. Following (``mode="after"``) requires passing
    at least ``t_margin`` after the obstacle last occupies that band; leading
    (``mode="before"``) requires passing ``t_margin`` before it first does.
    ``t_margin`` defaults to each gate's ``t_range``.
    """
    if len(tracks) != len(gates):
        raise ScenarioError("need exactly one gate set per obstacle")
    s = grid.s
    t_min = np.full(grid.n, -np.inf)
    t_max = np.full(grid.n, np.inf)
    for track, gate in zip(tracks, gates):
        margin = gate.t_range if t_margin is None else t_margin
        first, last = _pass_window(track, gate, s, margin)
        hit = ~np.isnan(first)
        if track.mode == FOLLOW:
            # A point exactly d_beta behind the cut-in spot is clear at t_in.
            if track.v_obs > 0:
                hit &= s > track.s_in - gate.d_beta
            t_min[hit] = np.maximum(t_min[hit], last[hit] + margin)
        else:
            t_max[hit] = np.minimum(t_max[hit], first[hit] - margin)
    return TimeWindowConstraint(t_min, t_max)


def check_original_feasibility(state: PlanningState, grid: PathGrid, limits: LimitProfile,
                               windows: TimeWindowConstraint = None,
                               tol: float = 1e-6) -> FeasibilityReport:
    """Evaluate every row of the original problem on ``state``.

    Violations are absolute: m/s for speed, m/s^2 for acceleration, m/s^3
    for jerk, m^2/s^2 for the dynamics residual and seconds for passing
    times. Never raises on an infeasible plan.
    """
    if hasattr(state, "state"):
        state = state.state
    n = grid.n
    if state.n != n or limits.n != n:
        raise ScenarioError("state, limits and grid must have the same length")
    if windows is None:
        windows = TimeWindowConstraint.unconstrained(n)
    b, a = state.b, state.a
    v = np.sqrt(np.maximum(b, 0.0))
    neg = np.maximum(-b, 0.0)
    fam = {}
    fam["velocity"] = np.maximum.reduce([v - limits.v_max, limits.v_min - v, np.sqrt(neg)])
    fam["acceleration"] = np.maximum(a - limits.a_max, limits.a_min - a)
    jerk = np.diff(a) / grid.ds * v[:-1]
    fam["jerk"] = np.maximum(jerk - limits.j_max[:-1], limits.j_min[:-1] - jerk)
    fam["dynamics"] = np.abs(np.diff(b) - 2.0 * a[:-1] * grid.ds)
    t = passing_times_from_velocity(v, grid)
    with np.errstate(invalid="ignore"):
        late = np.where(t > windows.t_max, t - windows.t_max, 0.0)
        early = np.where(windows.t_min > t, windows.t_min - t, 0.0)
    fam["time-window"] = np.maximum(late, early)
    violations, offending = {}, {}
    for name in FAMILIES:
        viol = np.nan_to_num(fam[name], nan=np.inf)
        violations[name] = float(max(viol.max(initial=0.0), 0.0))
        offending[name] = np.flatnonzero(viol > tol)
    return FeasibilityReport(violations=violations, offending=offending, tol=tol)


@dataclass
class OracleResult:
    objective: float
    state: PlanningState
    explored: int
    polished: bool


def _grid_search(grid, limits, windows, boundary, levels):
    """Breadth-first enumeration of acceleration levels with per-step pruning."""
    n = grid.n
    ds = grid.ds
    b = np.array([boundary.v0 ** 2])
    a = np.array([boundary.a0])
    t = np.array([0.0])
    cost = -b.copy()
    hist = np.zeros((1, 0))
    explored = 1
    vmin2, vmax2 = limits.v_min ** 2, limits.v_max ** 2
    for i in range(n - 1):
        b_next = b + 2.0 * a * ds[i]
        with np.errstate(divide="ignore"):
            t_next = np.where(b > 0, t + ds[i] / np.sqrt(np.maximum(b, 0.0)), np.inf)
        ok = (b_next >= vmin2[i + 1] - 1e-12) & (b_next <= vmax2[i + 1] + 1e-12)
        ok &= (t_next >= windows.t_min[i + 1]) & (t_next <= windows.t_max[i + 1])
        b, a, t, cost, hist, b_next, t_next = (arr[ok] for arr in
                                               (b, a, t, cost, hist, b_next, t_next))
        b_next = np.clip(b_next, vmin2[i + 1], vmax2[i + 1])
        rate = np.sqrt(np.maximum(b, 0.0)) / ds[i]
        if i == n - 2:
            # Last acceleration only has to exist; it never changes b.
            lo = np.full(a.size, limits.a_min[i + 1])
            hi = np.full(a.size, limits.a_max[i + 1])
            with np.errstate(divide="ignore", invalid="ignore"):
                lo_j = np.where(rate > 0, a + limits.j_min[i] / rate, -np.inf)
                hi_j = np.where(rate > 0, a + limits.j_max[i] / rate, np.inf)
            ok = np.maximum(lo, lo_j) <= np.minimum(hi, hi_j) + 1e-12
            a_last = np.clip(a, np.maximum(lo, lo_j), np.minimum(hi, hi_j))
            b, a, t, cost, hist = (arr[ok] for arr in (b, a, t, cost, hist))
            b_next, a_last = b_next[ok], a_last[ok]
            hist = np.column_stack([hist, a, a_last])
            cost = cost - b_next
            explored += a.size
            if a.size == 0:
                return None, explored
            best = int(np.argmin(cost))
            return (cost, hist, best), explored
        cand = np.linspace(limits.a_min[i + 1], limits.a_max[i + 1], levels)
        jerk = (cand[None, :] - a[:, None]) * rate[:, None]
        allowed = (jerk >= limits.j_min[i] - 1e-12) & (jerk <= limits.j_max[i] + 1e-12)
        src, lvl = np.nonzero(allowed)
        hist = np.column_stack([hist[src], a[src]])
        a = cand[lvl]
        cost = cost[src] - b_next[src]
        b = b_next[src]
        t = t_next[src]
        explored += a.size
        if a.size == 0:
            return None, explored
    raise AssertionError("unreachable")


def _state_from_accels(grid, boundary, accel):
    b = np.concatenate([[boundary.v0 ** 2],
                        boundary.v0 ** 2 + np.cumsum(2.0 * accel[:-1] * grid.ds)])
    return PlanningState(b=b, a=accel)


def _polish(grid, limits, windows, boundary, seed, margin=1e-8):
    """Local continuous refinement of a grid optimum under the exact constraints."""
    n = grid.n
    ds = grid.ds
    finite_lo = np.isfinite(windows.t_min)
    finite_hi = np.isfinite(windows.t_max)

    def unpack(z):
        return np.concatenate([[boundary.a0], z])

    def bvec(z):
        a = unpack(z)
        return np.concatenate([[boundary.v0 ** 2], boundary.v0 ** 2 + np.cumsum(2 * a[:-1] * ds)])

    def cons(z):
        a = unpack(z)
        b = bvec(z)
        v = np.sqrt(np.maximum(b, 1e-12))
        jerk = np.diff(a) / ds * v[:-1]
        t = np.concatenate([[0.0], np.cumsum(ds / v[:-1])])
        parts = [b - limits.v_min ** 2, limits.v_max ** 2 - b,
                 jerk - limits.j_min[:-1], limits.j_max[:-1] - jerk,
                 (t - windows.t_min)[finite_lo], (windows.t_max - t)[finite_hi]]
        parts = [p[np.isfinite(p)] for p in parts]
        # A small inward margin keeps the refined point strictly feasible.
        return np.concatenate(parts) - margin

    bounds = list(zip(limits.a_min[1:], limits.a_max[1:]))
    res = minimize(lambda z: -bvec(z).sum(), seed, method="SLSQP", bounds=bounds,
                   constraints=[{"type": "ineq", "fun": cons}],
                   options={"maxiter": 300, "ftol": 1e-12})
    return _state_from_accels(grid, boundary, unpack(res.x))


def brute_force_optimum(grid: PathGrid, limits: LimitProfile, windows: TimeWindowConstraint,
                        boundary: Boundary, levels: int = 11, polish: bool = True,
                        seeds: int = 5) -> OracleResult:
    """Best ``sum(-b)`` over per-step acceleration levels for tiny instances.

    Every point's acceleration (after the pinned first one) is drawn from
    ``levels`` evenly spaced values in ``[a_min, a_max]``; the last one only
    has to exist. Branches violating speed, jerk or time windows are
    discarded as they appear. Because the level grid is coarse, the best
    few grid solutions are then refined with a local continuous solver and
    kept only if they pass :func:`check_original_feasibility` exactly.
    """
    n = grid.n
    if n > 10:
        raise ScenarioError("the brute-force oracle is limited to N <= 10")
    if not 2 <= levels <= 21:
        raise ScenarioError("use between 2 and 21 acceleration levels")
    if windows is None:
        windows = TimeWindowConstraint.unconstrained(n)
    found, explored = _grid_search(grid, limits, windows, boundary, levels)
    if found is None:
        raise InfeasibleError("no acceleration sequence on the level grid is feasible",
                              group="oracle")
    cost, hist, best = found
    state = _state_from_accels(grid, boundary, hist[best])
    objective = -float(state.b.sum())
    polished = False
    if polish and n > 2:
        order = np.argsort(cost)[:seeds]
        for k in order:
            cand = _polish(grid, limits, windows, boundary, hist[k][1:])
            report = check_original_feasibility(cand, grid, limits, windows, tol=1e-9)
            value = -float(cand.b.sum())
            if report.feasible and value < objective:
                state, objective, polished = cand, value, True
    return OracleResult(objective=objective, state=state, explored=explored, polished=polished)
