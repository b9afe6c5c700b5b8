"""Jerk-constrained velocity planning as a linear program.

Pipeline: obstacle tracks become a lowered speed limit, the jerk filter
turns that limit into the surrogate profile ``v_f``, and the LP over
``x = [b; a]`` maximizes the summed squared speed under linear dynamics,
boxes and the jerk rows ``j_min ds <= (a[i+1] - a[i]) v_f[i] <= j_max ds``.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .errors import InfeasibleError, ScenarioError, SolverError
from .jerk_filter import FilteredProfile, jerk_filter
from .obstacles import (GateParams, GatePolicy, ObstacleTrack, apply_velocity_limit_filter,
                        gate_distances)
from .profile import (LimitProfile, PathGrid, PlanningState, derived_velocity,
                      jerk_from_velocity, passing_times_from_velocity)
from .solvers import INFEASIBLE, OPTIMAL, LinearProgram, SolverConfig, solve_lp

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Boundary:
    """Initial speed [m/s] and acceleration [m/s^2] pinned at the first grid point."""

    v0: float
    a0: float = 0.0

    def __post_init__(self):
        if not (self.v0 >= 0 and np.isfinite(self.v0)):
            raise ScenarioError("initial speed must be finite and non-negative")
        if not np.isfinite(self.a0):
            raise ScenarioError("initial acceleration must be finite")


@dataclass
class VelocityPlan:
    """Result of one planning run, with derived speed, jerk and passing times."""

    grid: PathGrid
    state: PlanningState
    objective: float
    status: str
    iterations: int
    wall_time: float
    method: str
    v_limit: np.ndarray
    v_limit_obstacle: np.ndarray
    v_f: Optional[np.ndarray] = None
    filter_time: float = 0.0
    optimize_time: float = 0.0
    info: dict = field(default_factory=dict)

    @property
    def velocity(self) -> np.ndarray:
        return derived_velocity(self.state)

    @property
    def acceleration(self) -> np.ndarray:
        return self.state.a

    @property
    def jerk(self) -> np.ndarray:
        return jerk_from_velocity(self.state.a, self.velocity, self.grid)

    @property
    def times(self) -> np.ndarray:
        return passing_times_from_velocity(self.velocity, self.grid)


def _check_lengths(grid, limits, *arrays):
    if limits.n != grid.n:
        raise ScenarioError(f"limits have {limits.n} points but grid has {grid.n}")
    for arr in arrays:
        if np.size(arr) != grid.n:
            raise ScenarioError(f"profile has {np.size(arr)} points but grid has {grid.n}")


def objective_weights(grid: PathGrid, weighted: bool = False) -> np.ndarray:
    """Per-point weights of ``-b`` in the cost: ones, or trapezoid interval shares."""
    if not weighted:
        return np.ones(grid.n)
    ds = grid.ds
    w = np.zeros(grid.n)
    w[:-1] += 0.5 * ds
    w[1:] += 0.5 * ds
    return w


def dynamics_rows(grid: PathGrid) -> sp.csr_matrix:
    """``b[i+1] - b[i] - 2 ds[i] a[i] = 0`` over ``x = [b; a]``."""
    n = grid.n
    m = n - 1
    rows = np.repeat(np.arange(m), 3)
    cols = np.column_stack([np.arange(1, n), np.arange(m), n + np.arange(m)]).ravel()
    vals = np.column_stack([np.ones(m), -np.ones(m), -2.0 * grid.ds]).ravel()
    return sp.csr_matrix((vals, (rows, cols)), shape=(m, 2 * n))


def _box(grid, limits, upper_speed, boundary, relax_accel=False):
    n = grid.n
    lower = np.concatenate([limits.v_min ** 2, limits.a_min])
    upper = np.concatenate([upper_speed ** 2, limits.a_max])
    if relax_accel:
        lower[n:] = -np.inf
        upper[n:] = np.inf
    lower[0] = upper[0] = boundary.v0 ** 2
    lower[n] = upper[n] = boundary.a0
    return lower, upper


def _check_boundary(limits, upper_speed, boundary):
    bad = upper_speed < limits.v_min
    if np.any(bad):
        idx = int(np.argmax(bad))
        raise InfeasibleError(
            f"filtered speed {upper_speed[idx]:.6g} is below v_min {limits.v_min[idx]:.6g} "
            f"at index {idx}", group="velocity")
    if boundary.v0 > upper_speed[0] or boundary.v0 < limits.v_min[0]:
        raise InfeasibleError(
            f"initial speed {boundary.v0} lies outside [{limits.v_min[0]}, {upper_speed[0]:.6g}]",
            group="boundary")
    if not limits.a_min[0] <= boundary.a0 <= limits.a_max[0]:
        raise InfeasibleError(
            f"initial acceleration {boundary.a0} lies outside "
            f"[{limits.a_min[0]}, {limits.a_max[0]}]", group="boundary")


def jerk_rows(grid: PathGrid, limits: LimitProfile, v_f):
    """Linearized jerk rows ``A_ub x <= b_ub``; rows with an infinite limit are dropped."""
    n = grid.n
    m = n - 1
    idx = np.arange(m)
    coef = np.asarray(v_f, dtype=float)[:-1]
    ds = grid.ds
    blocks, rhs = [], []
    for sign, lim in ((1.0, limits.j_max[:-1]), (-1.0, -limits.j_min[:-1])):
        keep = np.isfinite(lim)
        k = idx[keep]
        rows = np.repeat(np.arange(k.size), 2)
        cols = np.column_stack([n + k + 1, n + k]).ravel()
        vals = (sign * np.column_stack([coef[keep], -coef[keep]])).ravel()
        blocks.append(sp.csr_matrix((vals, (rows, cols)), shape=(k.size, 2 * n)))
        rhs.append(lim[keep] * ds[keep])
    return sp.vstack(blocks, format="csr"), np.concatenate(rhs)


def assemble_lp(grid: PathGrid, limits: LimitProfile, v_f, boundary: Boundary,
                weighted: bool = False, *, include_jerk: bool = True,
                relax_accel: bool = False) -> LinearProgram:
    """Build the LP over ``x = [b; a]`` (2N variables).

    ``N-1`` dynamics equalities, ``2(N-1)`` jerk rows scaled by ``ds``,
    boxes ``b in [v_min^2, v_f^2]`` and ``a in [a_min, a_max]``, and the
    initial speed and acceleration pinned through equal bounds.
    """
    v_f = np.asarray(v_f, dtype=float)
    _check_lengths(grid, limits, v_f)
    if not np.all(np.isfinite(v_f)):
        raise ScenarioError("the filtered speed profile must be finite")
    _check_boundary(limits, v_f, boundary)
    c = np.concatenate([-objective_weights(grid, weighted), np.zeros(grid.n)])
    lower, upper = _box(grid, limits, v_f, boundary, relax_accel)
    A_ub = b_ub = None
    if include_jerk:
        A_ub, b_ub = jerk_rows(grid, limits, v_f)
    return LinearProgram(c=c, A_eq=dynamics_rows(grid), b_eq=np.zeros(grid.n - 1),
                         A_ub=A_ub, b_ub=b_ub, lower=lower, upper=upper)


def resolve_gates(tracks: Sequence[ObstacleTrack],
                  gates: Union[GatePolicy, Sequence[GateParams], None]) -> list:
    """Return explicit gates as given, or expand a policy (default or supplied) per track."""
    if gates is None:
        gates = GatePolicy()
    if isinstance(gates, GatePolicy):
        return [gate_distances(t, gates) for t in tracks]
    gates = list(gates)
    if len(gates) != len(tracks):
        raise ScenarioError(f"{len(tracks)} obstacles but {len(gates)} gate sets")
    return gates


def obstacle_limit(grid, limits, tracks=(), gates=None) -> np.ndarray:
    tracks = list(tracks)
    if not tracks:
        return limits.v_max.copy()
    return apply_velocity_limit_filter(grid, limits.v_max, tracks, resolve_gates(tracks, gates))


def lowered_limits(limits: LimitProfile, v_hat) -> LimitProfile:
    """``limits`` with ``v_max`` replaced by the obstacle limit ``v_hat``.

    An obstacle that forces the limit under ``v_min`` makes the problem
    infeasible rather than the scenario invalid.
    """
    below = v_hat < limits.v_min
    if np.any(below):
        i = int(np.argmax(below))
        raise InfeasibleError(f"obstacle speed limit {v_hat[i]:.6g} is below v_min "
                              f"{limits.v_min[i]:.6g} at index {i}", group="velocity")
    return limits.replace(v_max=v_hat)


def diagnose_infeasibility(grid, limits, upper_speed, boundary, config, *,
                           with_jerk_rows=True, v_f=None) -> str:
    """Name the constraint family whose removal restores feasibility."""
    if with_jerk_rows:
        relaxed = assemble_lp(grid, limits, upper_speed, boundary, include_jerk=False)
        if solve_lp(relaxed, config).status == OPTIMAL:
            return "jerk"
    relaxed = assemble_lp(grid, limits, upper_speed, boundary, include_jerk=False,
                          relax_accel=True)
    if solve_lp(relaxed, config).status == OPTIMAL:
        return "acceleration"
    return "velocity"


def plan_velocity(grid: PathGrid, limits: LimitProfile, tracks: Sequence[ObstacleTrack] = (),
                  gates=None, boundary: Boundary = None, config: SolverConfig = None,
                  weighted: bool = False) -> VelocityPlan:
    """Obstacle filter, jerk filter and LP solve.

    Raises :class:`InfeasibleError` with the responsible constraint group
    or :class:`SolverError` when the solver gives up.
    """
    if boundary is None:
        raise ScenarioError("a boundary (v0, a0) is required")
    _check_lengths(grid, limits)
    if not np.all(np.isfinite(limits.v_max)):
        raise ScenarioError("v_max must be finite for the LP planner")
    t0 = time.perf_counter()
    v_hat = obstacle_limit(grid, limits, tracks, gates)
    filtered: FilteredProfile = jerk_filter(grid, lowered_limits(limits, v_hat),
                                            boundary.v0, boundary.a0)
    t1 = time.perf_counter()
    problem = assemble_lp(grid, limits, filtered.v_f, boundary, weighted)
    result = solve_lp(problem, config)
    t2 = time.perf_counter()
    if result.status == INFEASIBLE:
        group = diagnose_infeasibility(grid, limits, filtered.v_f, boundary, config)
        raise InfeasibleError(f"linear program is infeasible; {group} constraints bind",
                              group=group)
    if result.status != OPTIMAL:
        raise SolverError(f"LP solver stopped with status {result.status}", status=result.status)
    n = grid.n
    # Interior-point iterates sit strictly inside the bounds, so b >= 0 holds exactly.
    state = PlanningState(b=result.x[:n], a=result.x[n:])
    log.info("LP plan: objective %.6g, %d iterations", result.objective, result.iterations)
    return VelocityPlan(grid=grid, state=state, objective=result.objective,
                        status=result.status, iterations=result.iterations,
                        wall_time=t2 - t0, method="lp", v_limit=limits.v_max.copy(),
                        v_limit_obstacle=v_hat, v_f=filtered.v_f, filter_time=t1 - t0,
                        optimize_time=t2 - t1, info={"solver": result.info,
                                                     "filtered": filtered})
