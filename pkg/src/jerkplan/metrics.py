"""Summary numbers used to compare planners on one scenario."""

import numpy as np

from .profile import LimitProfile

ACTIVE_ACCEL = 1e-3
SATURATION_BAND = 0.05


def initial_acceleration(plan, horizon: float = 1.0) -> float:
    """Mean acceleration over the first ``horizon`` seconds, ``(v(horizon) - v(0)) / horizon``.

    The first grid point has its acceleration pinned, so the pointwise value
    there says nothing about how hard a planner pulls away. If the plan ends
    earlier the last reached time is used.
    """
    t = plan.times
    v = plan.velocity
    finite = np.isfinite(t)
    t, v = t[finite], v[finite]
    end = min(horizon, float(t[-1]))
    if end <= 0:
        return 0.0
    return float((np.interp(end, t, v) - v[0]) / end)


def active_intervals(plan, tol: float = ACTIVE_ACCEL) -> np.ndarray:
    """Intervals where either endpoint accelerates, i.e. not on a speed plateau."""
    a = plan.acceleration
    moving = np.abs(a) > tol
    return moving[:-1] | moving[1:]


def jerk_saturation(plan, limits: LimitProfile, band: float = SATURATION_BAND,
                    tol: float = ACTIVE_ACCEL) -> float:
    """Share of active intervals whose true jerk lies within ``band`` of a jerk limit.

    Returns 0 when no interval is active.
    """
    jerk = plan.jerk
    active = active_intervals(plan, tol)
    if not np.any(active):
        return 0.0
    j_max = limits.j_max[:-1]
    j_min = limits.j_min[:-1]
    with np.errstate(invalid="ignore"):
        near_top = np.isfinite(j_max) & (jerk >= (1.0 - band) * j_max)
        near_bottom = np.isfinite(j_min) & (jerk <= (1.0 - band) * j_min)
    saturated = (near_top & (j_max > 0)) | (near_bottom & (j_min < 0))
    return float(np.mean(saturated[active]))


def max_jerk_excess(plan, limits: LimitProfile) -> float:
    """Largest amount by which the true jerk leaves ``[j_min, j_max]`` (0 if never)."""
    jerk = plan.jerk
    excess = np.maximum(jerk - limits.j_max[:-1], limits.j_min[:-1] - jerk)
    return float(max(np.max(excess, initial=0.0), 0.0))
