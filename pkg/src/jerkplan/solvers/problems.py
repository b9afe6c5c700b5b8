"""Problem containers and result types for the in-repo LP/QP solvers."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp


def _as_csr(matrix, n_cols):
    if matrix is None:
        return sp.csr_matrix((0, n_cols))
    out = sp.csr_matrix(matrix, dtype=float)
    if out.shape[1] != n_cols:
        raise ValueError(f"constraint matrix has {out.shape[1]} columns, expected {n_cols}")
    return out


def _as_vec(values, n, fill):
    if values is None:
        return np.full(n, fill, dtype=float)
    out = np.array(values, dtype=float).reshape(-1)
    if out.size != n:
        raise ValueError(f"expected vector of length {n}, got {out.size}")
    return out


@dataclass(frozen=True)
class LinearProgram:
    """``min c.x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  lower <= x <= upper``.

    Matrices are stored as CSR. Infinite bounds are allowed.
    """

    c: np.ndarray
    A_eq: sp.csr_matrix = None
    b_eq: np.ndarray = None
    A_ub: sp.csr_matrix = None
    b_ub: np.ndarray = None
    lower: np.ndarray = None
    upper: np.ndarray = None

    def __post_init__(self):
        c = np.array(self.c, dtype=float).reshape(-1)
        n = c.size
        A_eq = _as_csr(self.A_eq, n)
        A_ub = _as_csr(self.A_ub, n)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A_eq", A_eq)
        object.__setattr__(self, "A_ub", A_ub)
        object.__setattr__(self, "b_eq", _as_vec(self.b_eq, A_eq.shape[0], 0.0))
        object.__setattr__(self, "b_ub", _as_vec(self.b_ub, A_ub.shape[0], 0.0))
        object.__setattr__(self, "lower", _as_vec(self.lower, n, 0.0))
        object.__setattr__(self, "upper", _as_vec(self.upper, n, np.inf))
        if np.any(self.lower > self.upper):
            bad = int(np.argmax(self.lower > self.upper))
            raise ValueError(f"lower bound exceeds upper bound at variable {bad}")

    @property
    def n_vars(self) -> int:
        return self.c.size

    def objective(self, x) -> float:
        return float(self.c @ x)


@dataclass(frozen=True)
class QuadraticProgram:
    """``min 0.5 x.P.x + c.x`` subject to the same rows and bounds as :class:`LinearProgram`.

    ``P`` must be symmetric positive semidefinite.
    """

    P: sp.csr_matrix
    c: np.ndarray
    A_eq: sp.csr_matrix = None
    b_eq: np.ndarray = None
    A_ub: sp.csr_matrix = None
    b_ub: np.ndarray = None
    lower: np.ndarray = None
    upper: np.ndarray = None

    def __post_init__(self):
        c = np.array(self.c, dtype=float).reshape(-1)
        n = c.size
        P = sp.csr_matrix(self.P, dtype=float)
        if P.shape != (n, n):
            raise ValueError(f"quadratic term has shape {P.shape}, expected {(n, n)}")
        if n and abs(P - P.T).max() > 1e-12 * max(1.0, abs(P).max()):
            raise ValueError("quadratic term is not symmetric")
        A_eq = _as_csr(self.A_eq, n)
        A_ub = _as_csr(self.A_ub, n)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A_eq", A_eq)
        object.__setattr__(self, "A_ub", A_ub)
        object.__setattr__(self, "b_eq", _as_vec(self.b_eq, A_eq.shape[0], 0.0))
        object.__setattr__(self, "b_ub", _as_vec(self.b_ub, A_ub.shape[0], 0.0))
        object.__setattr__(self, "lower", _as_vec(self.lower, n, -np.inf))
        object.__setattr__(self, "upper", _as_vec(self.upper, n, np.inf))
        if np.any(self.lower > self.upper):
            bad = int(np.argmax(self.lower > self.upper))
            raise ValueError(f"lower bound exceeds upper bound at variable {bad}")

    @property
    def n_vars(self) -> int:
        return self.c.size

    def objective(self, x) -> float:
        return float(0.5 * x @ (self.P @ x) + self.c @ x)


@dataclass(frozen=True)
class SolverConfig:
    """Termination settings. ``max_iterations=None`` picks the solver default."""

    max_iterations: Optional[int] = None
    primal_tol: float = 1e-8
    dual_tol: float = 1e-8
    gap_tol: float = 1e-8
    time_limit: float = np.inf

    def __post_init__(self):
        for name in ("primal_tol", "dual_tol", "gap_tol", "time_limit"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration-limit"
TIME_LIMIT = "time-limit"


@dataclass
class SolveResult:
    x: np.ndarray
    objective: float
    status: str
    iterations: int
    wall_time: float
    primal_residual: float = np.nan
    dual_residual: float = np.nan
    gap: float = np.nan
    dual: Optional[np.ndarray] = None
    info: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL
