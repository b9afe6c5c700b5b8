"""Dense/banded convex solvers sized for velocity-planning problems."""

from .admm import solve_qp
from .ipm import solve_lp
from .problems import (INFEASIBLE, ITERATION_LIMIT, OPTIMAL, TIME_LIMIT, UNBOUNDED,
                       LinearProgram, QuadraticProgram, SolveResult, SolverConfig)

__all__ = [
    "solve_lp", "solve_qp", "LinearProgram", "QuadraticProgram", "SolveResult",
    "SolverConfig", "OPTIMAL", "INFEASIBLE", "UNBOUNDED", "ITERATION_LIMIT", "TIME_LIMIT",
]
