"""Exception hierarchy shared across the package."""


class JerkPlanError(Exception):
    """Base class for all expected failures raised by jerkplan."""


class DomainError(JerkPlanError, ValueError):
    """An input lies outside the domain of an operation (e.g. negative b)."""


class ScenarioError(JerkPlanError, ValueError):
    """A scenario or its arrays violate a declared invariant."""


class OutOfWindowError(JerkPlanError, ValueError):
    """An obstacle was queried outside its [t_in, t_out] window."""


class UnreachableError(JerkPlanError):
    """A target arc length cannot be reached because a speed limit is zero."""


class InfeasibleError(JerkPlanError):
    """The planning problem has no feasible point.

    ``group`` names the constraint family most likely responsible
    (``"velocity"``, ``"acceleration"``, ``"jerk"``, ``"boundary"``).
    """

    def __init__(self, message, group=None):
        super().__init__(message)
        self.group = group


class SolverError(JerkPlanError):
    """The numerical solver stopped without an optimal or infeasible verdict."""

    def __init__(self, message, status=None):
        super().__init__(message)
        self.status = status
