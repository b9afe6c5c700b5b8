"""Jerk-constrained velocity planning along a fixed path.

The LP planner maximizes squared speed under velocity, acceleration and a
linearized jerk constraint. A forward-backward jerk filter supplies the
linearization point, and dynamic obstacles enter as lowered speed limits.
"""

from .baseline import PseudoJerkConfig, plan_velocity_qp
from .errors import (DomainError, InfeasibleError, JerkPlanError, OutOfWindowError,
                     ScenarioError, SolverError, UnreachableError)
from .jerk_filter import FilteredProfile, jerk_filter
from .obstacles import (GateParams, GatePolicy, ObstacleTrack, apply_velocity_limit_filter,
                        gate_distances)
from .planner import Boundary, VelocityPlan, assemble_lp, plan_velocity
from .profile import (CurvatureProfile, LimitProfile, PathGrid, PlanningState,
                      curvature_speed_limit, derived_jerk, derived_velocity, passing_times)
from .runner import RunRecord, bench, compare, run
from .scenario import Scenario, load_scenario, preset
from .validator import (FeasibilityReport, TimeWindowConstraint, brute_force_optimum,
                        check_original_feasibility, windows_from_tracks)

__version__ = "0.1.0"

__all__ = [
    "PathGrid", "LimitProfile", "PlanningState", "CurvatureProfile", "derived_velocity",
    "derived_jerk", "passing_times", "curvature_speed_limit", "ObstacleTrack", "GateParams",
    "GatePolicy", "gate_distances", "apply_velocity_limit_filter", "FilteredProfile",
    "jerk_filter", "Boundary", "VelocityPlan", "assemble_lp", "plan_velocity",
    "PseudoJerkConfig", "plan_velocity_qp", "TimeWindowConstraint", "FeasibilityReport",
    "check_original_feasibility", "windows_from_tracks", "brute_force_optimum", "Scenario",
    "load_scenario", "preset", "RunRecord", "run", "compare", "bench", "JerkPlanError",
    "DomainError", "ScenarioError", "OutOfWindowError", "UnreachableError", "InfeasibleError",
    "SolverError",
]
