"""Pseudo-jerk penalty QP, the comparison baseline.

Jerk is not constrained. Instead the cost adds ``w_smooth`` times the
squared spatial derivative of acceleration ``da/ds``. The QP runs on the
same obstacle-filtered speed limit as the LP planner but without the jerk
filter.
"""

import logging
import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import InfeasibleError, ScenarioError, SolverError
from .planner import (Boundary, VelocityPlan, _box, _check_boundary, _check_lengths,
                      dynamics_rows, lowered_limits, objective_weights, obstacle_limit)
from .profile import LimitProfile, PathGrid, PlanningState
from .solvers import INFEASIBLE, OPTIMAL, QuadraticProgram, SolverConfig, solve_qp

log = logging.getLogger(__name__)

# Operator splitting needs far more iterations on this problem than the
# generic default: the cost is nearly linear in b, so progress is slow.
BASELINE_SOLVER = SolverConfig(max_iterations=60000)


@dataclass(frozen=True)
class PseudoJerkConfig:
    w_smooth: float = 500.0

    def __post_init__(self):
        if not (self.w_smooth >= 0 and np.isfinite(self.w_smooth)):
            raise ScenarioError("w_smooth must be finite and non-negative")


def pseudo_jerk(state: PlanningState, grid: PathGrid) -> np.ndarray:
    """``(a[i+1] - a[i]) / ds[i]`` for each interval."""
    if state.n != grid.n:
        raise ScenarioError(f"state has {state.n} points but grid has {grid.n}")
    return np.diff(state.a) / grid.ds


def difference_operator(grid: PathGrid) -> sp.csr_matrix:
    """``D`` with ``(D a)[i] = (a[i+1] - a[i]) / ds[i]``, shape ``(N-1, N)``."""
    m = grid.n - 1
    inv = 1.0 / grid.ds
    return sp.diags([-inv, inv], [0, 1], shape=(m, grid.n), format="csr")


def assemble_pseudo_jerk_qp(grid: PathGrid, limits: LimitProfile, config: PseudoJerkConfig,
                            boundary: Boundary, weighted: bool = False) -> QuadraticProgram:
    """QP over ``x = [b; a]`` with cost ``sum(-b) + w_smooth |D a|^2``.

    The solver minimizes ``0.5 x.P.x + c.x``, so the a-block of ``P`` is
    ``2 w_smooth D^T D``. ``limits.v_max`` should already be obstacle-filtered.
    """
    _check_lengths(grid, limits)
    _check_boundary(limits, limits.v_max, boundary)
    n = grid.n
    D = difference_operator(grid)
    P = sp.block_diag([sp.csr_matrix((n, n)), 2.0 * config.w_smooth * (D.T @ D)], format="csr")
    c = np.concatenate([-objective_weights(grid, weighted), np.zeros(n)])
    lower, upper = _box(grid, limits, limits.v_max, boundary)
    return QuadraticProgram(P=P, c=c, A_eq=dynamics_rows(grid), b_eq=np.zeros(n - 1),
                            lower=lower, upper=upper)


def plan_velocity_qp(grid: PathGrid, limits: LimitProfile, tracks=(), gates=None,
                     boundary: Boundary = None, config: PseudoJerkConfig = None,
                     solver: SolverConfig = None, weighted: bool = False) -> VelocityPlan:
    """Obstacle filter followed by the pseudo-jerk QP.

    The ADMM iterate satisfies the box only up to the solver tolerance, so
    the returned ``b`` and ``a`` are projected onto their bounds.
    """
    if boundary is None:
        raise ScenarioError("a boundary (v0, a0) is required")
    config = config or PseudoJerkConfig()
    _check_lengths(grid, limits)
    t0 = time.perf_counter()
    v_hat = obstacle_limit(grid, limits, tracks, gates)
    filtered = lowered_limits(limits, v_hat)
    t1 = time.perf_counter()
    problem = assemble_pseudo_jerk_qp(grid, filtered, config, boundary, weighted)
    result = solve_qp(problem, solver or BASELINE_SOLVER)
    t2 = time.perf_counter()
    if result.status == INFEASIBLE:
        raise InfeasibleError("pseudo-jerk QP is infeasible", group="velocity")
    if result.status != OPTIMAL:
        raise SolverError(f"QP solver stopped with status {result.status}", status=result.status)
    x = np.clip(result.x, problem.lower, problem.upper)
    n = grid.n
    state = PlanningState(b=x[:n], a=x[n:])
    log.info("QP plan: objective %.6g, %d iterations", result.objective, result.iterations)
    return VelocityPlan(grid=grid, state=state, objective=float(-objective_weights(
                            grid, weighted) @ state.b), status=result.status,
                        iterations=result.iterations, wall_time=t2 - t0,
                        method="pseudo-jerk-qp", v_limit=limits.v_max.copy(),
                        v_limit_obstacle=v_hat, v_f=None, filter_time=t1 - t0,
                        optimize_time=t2 - t1,
                        info={"solver": result.info, "qp_objective": result.objective,
                              "w_smooth": config.w_smooth})
