"""Path grid, limit profiles and the (b, a) planning state.

The plan is parametrized by arc length: ``b = ds/dt ** 2`` and
``a = d2s/dt2`` at every grid point, linked by ``db/ds = 2a``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ScenarioError


def _frozen(values, name, n=None):
    arr = np.array(values, dtype=float).reshape(-1)
    if n is not None and arr.size != n:
        raise ScenarioError(f"{name} has length {arr.size}, expected {n}")
    if np.any(np.isnan(arr)):
        raise ScenarioError(f"{name} contains NaN at index {int(np.argmax(np.isnan(arr)))}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PathGrid:
    """Strictly increasing arc-length samples ``s`` [m], at least two of them."""

    s: np.ndarray

    def __post_init__(self):
        s = np.array(self.s, dtype=float).reshape(-1)
        if s.size < 2:
            raise ScenarioError("a path grid needs at least 2 points")
        if not np.all(np.isfinite(s)):
            raise ScenarioError("grid contains non-finite arc lengths")
        steps = np.diff(s)
        if np.any(steps <= 0):
            bad = int(np.argmax(steps <= 0))
            raise ScenarioError(f"grid is not strictly increasing at index {bad}")
        s.setflags(write=False)
        object.__setattr__(self, "s", s)

    @classmethod
    def uniform(cls, n, ds, start=0.0):
        return cls(start + ds * np.arange(n))

    @property
    def n(self) -> int:
        return self.s.size

    @property
    def ds(self) -> np.ndarray:
        """Interval lengths ``s[i+1] - s[i]`` (length N-1)."""
        return np.diff(self.s)

    def __len__(self):
        return self.n


@dataclass(frozen=True)
class LimitProfile:
    """Per-point velocity, acceleration and jerk bounds."""

    v_min: np.ndarray
    v_max: np.ndarray
    a_min: np.ndarray
    a_max: np.ndarray
    j_min: np.ndarray
    j_max: np.ndarray

    def __post_init__(self):
        n = np.size(self.v_max)
        for name in ("v_min", "v_max", "a_min", "a_max", "j_min", "j_max"):
            object.__setattr__(self, name, _frozen(getattr(self, name), name, n))
        if not np.all(np.isfinite(self.v_min)):
            raise ScenarioError("v_min must be finite")
        if np.any(self.v_min < 0):
            raise ScenarioError(f"v_min is negative at index {int(np.argmax(self.v_min < 0))}")
        for lo, hi in (("v_min", "v_max"), ("a_min", "a_max")):
            bad = getattr(self, lo) > getattr(self, hi)
            if np.any(bad):
                raise ScenarioError(f"{lo} exceeds {hi} at index {int(np.argmax(bad))}")
        if np.any(self.j_min > 0) or np.any(self.j_max < 0):
            raise ScenarioError("jerk limits must satisfy j_min <= 0 <= j_max")

    @classmethod
    def broadcast(cls, n, *, v_max, a_max, a_min, j_max, j_min, v_min=0.0):
        """Build a profile from scalars or arrays, broadcasting scalars to length ``n``."""
        def full(value):
            return np.broadcast_to(np.asarray(value, dtype=float), (n,)).copy()
        return cls(v_min=full(v_min), v_max=full(v_max), a_min=full(a_min),
                   a_max=full(a_max), j_min=full(j_min), j_max=full(j_max))

    @property
    def n(self) -> int:
        return self.v_max.size

    def replace(self, **changes) -> "LimitProfile":
        fields = {name: getattr(self, name)
                  for name in ("v_min", "v_max", "a_min", "a_max", "j_min", "j_max")}
        fields.update(changes)
        return LimitProfile(**fields)


@dataclass(frozen=True)
class PlanningState:
    """Squared speed ``b`` [m^2/s^2] and acceleration ``a`` [m/s^2] per grid point."""

    b: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        b = np.array(self.b, dtype=float).reshape(-1)
        a = np.array(self.a, dtype=float).reshape(-1)
        if b.size != a.size:
            raise ScenarioError(f"b has length {b.size} but a has length {a.size}")
        b.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "a", a)

    @property
    def n(self) -> int:
        return self.b.size

    def dynamics_residual(self, grid: PathGrid) -> np.ndarray:
        """``b[i+1] - b[i] - 2 a[i] ds[i]``; zero for a consistent state."""
        return np.diff(self.b) - 2.0 * self.a[:-1] * grid.ds


@dataclass(frozen=True)
class CurvatureProfile:
    """Unsigned path curvature per point plus the lateral-acceleration and road caps."""

    kappa: np.ndarray
    a_max_lateral: float
    v_max_road: float

    def __post_init__(self):
        kappa = _frozen(self.kappa, "kappa")
        if np.any(kappa < 0) or not np.all(np.isfinite(kappa)):
            raise ScenarioError("curvature must be finite and non-negative")
        if not self.a_max_lateral > 0:
            raise ScenarioError("a_max_lateral must be positive")
        if not self.v_max_road > 0:
            raise ScenarioError("v_max_road must be positive")
        object.__setattr__(self, "kappa", kappa)


def derived_velocity(state: PlanningState) -> np.ndarray:
    """Pointwise speed ``sqrt(b)``."""
    b = state.b
    if np.any(b < 0):
        idx = int(np.argmax(b < 0))
        raise DomainError(f"b is negative at index {idx} (b = {b[idx]!r})")
    return np.sqrt(b)


def jerk_from_velocity(a, v, grid: PathGrid) -> np.ndarray:
    return (np.diff(a) / grid.ds) * v[:-1]


def passing_times_from_velocity(v, grid: PathGrid) -> np.ndarray:
    with np.errstate(divide="ignore"):
        dt = grid.ds / v[:-1]
    return np.concatenate([[0.0], np.cumsum(dt)])


def derived_jerk(state: PlanningState, grid: PathGrid) -> np.ndarray:
    """True jerk ``(a[i+1] - a[i]) / ds[i] * sqrt(b[i])`` for each interval (length N-1)."""
    if state.n != grid.n:
        raise ScenarioError(f"state has {state.n} points but grid has {grid.n}")
    return jerk_from_velocity(state.a, derived_velocity(state), grid)


def passing_times(state: PlanningState, grid: PathGrid) -> np.ndarray:
    """Arrival time at each grid point using the left-endpoint rule ``sum ds[k] / sqrt(b[k])``.

    A zero speed at point k means the vehicle halts there: every later
    arrival time is ``+inf``.
    """
    if state.n != grid.n:
        raise ScenarioError(f"state has {state.n} points but grid has {grid.n}")
    return passing_times_from_velocity(derived_velocity(state), grid)


def curvature_speed_limit(curv: CurvatureProfile) -> np.ndarray:
    """``min(v_max_road, sqrt(a_max_lateral / kappa))``; straight segments get the road cap."""
    kappa = curv.kappa
    with np.errstate(divide="ignore", over="ignore"):
        lateral = np.where(kappa > 0, np.sqrt(curv.a_max_lateral / np.where(kappa > 0, kappa, 1.0)),
                           np.inf)
    return np.minimum(curv.v_max_road, lateral)
