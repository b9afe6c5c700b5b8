"""Forward-backward jerk filter producing the surrogate speed profile ``v_f``.

The forward pass accelerates from the initial state as hard as the
acceleration and jerk limits allow, capped by the speed limit. The backward
pass runs the same sweep over the reversed path with the deceleration
limits, so every slowdown ahead is anticipated. ``v_f`` freezes the
``sqrt(b)`` factor of the jerk constraint and makes it linear.
"""

import math
from dataclasses import dataclass

import numpy as np

from .profile import LimitProfile, PathGrid

V_EPS = 1e-3


@dataclass(frozen=True)
class FilteredProfile:
    v_f: np.ndarray
    v_forward: np.ndarray
    v_backward: np.ndarray
    a_forward: np.ndarray
    a_backward: np.ndarray


def _sweep(ds, v_cap, a_cap, j_cap, v0, a0):
    """Jerk- and acceleration-limited sweep along intervals ``ds``.

    ``j_cap`` holds one value per interval; ``v_cap`` and ``a_cap`` one per
    point. The acceleration update is used immediately in the velocity
    update. The step time ``ds / v`` uses ``v`` floored at ``V_EPS`` and is
    capped by the time a standing start at full jerk needs to cover ``ds``.
    """
    # Plain floats: this loop runs once per grid point and numpy scalar
    # arithmetic would dominate its cost.
    ds, v_cap, a_cap, j_cap = (np.asarray(x, dtype=float).tolist()
                               for x in (ds, v_cap, a_cap, j_cap))
    n = len(v_cap)
    v = [0.0] * n
    a = [0.0] * n
    v[0] = max(0.0, min(float(v0), v_cap[0]))
    a[0] = float(a0)
    for k in range(n - 1):
        vk = v[k]
        dt = ds[k] / (vk if vk > V_EPS else V_EPS)
        jk = j_cap[k]
        if 0 < jk < math.inf:
            dt = min(dt, (6.0 * ds[k] / jk) ** (1.0 / 3.0))
        a[k + 1] = min(a_cap[k + 1], a[k] + jk * dt)
        v[k + 1] = max(0.0, min(v_cap[k + 1], vk + a[k + 1] * dt))
    v = np.array(v)
    a = np.array(a)
    return v, a


def forward_pass(grid: PathGrid, v_max, a_max, j_max, v0: float, a0: float):
    """Return ``(v_forward, a_forward)``; ``j_max[k]`` applies on interval ``k``."""
    v_max = np.asarray(v_max, dtype=float)
    a_max = np.broadcast_to(np.asarray(a_max, dtype=float), v_max.shape)
    j_max = np.broadcast_to(np.asarray(j_max, dtype=float), v_max.shape)
    return _sweep(grid.ds, v_max, a_max, j_max[:-1], v0, a0)


def backward_pass(grid: PathGrid, v_max, a_min, j_min, v_forward):
    """Return ``(v_backward, a_backward)``, never above ``v_forward``.

    Implemented as the forward sweep over the reversed path with
    ``-a_min`` and ``-j_min`` as ceilings, starting from ``v_forward[-1]``
    with zero acceleration.
    """
    v_max = np.asarray(v_max, dtype=float)
    v_forward = np.asarray(v_forward, dtype=float)
    a_min = np.broadcast_to(np.asarray(a_min, dtype=float), v_max.shape)
    j_min = np.broadcast_to(np.asarray(j_min, dtype=float), v_max.shape)
    cap = np.minimum(v_max, v_forward)[::-1]
    v_rev, a_rev = _sweep(grid.ds[::-1], cap, (-a_min)[::-1], (-j_min[:-1])[::-1],
                          v_forward[-1], 0.0)
    return v_rev[::-1].copy(), -a_rev[::-1]


def jerk_filter(grid: PathGrid, limits: LimitProfile, v0: float, a0: float) -> FilteredProfile:
    """Run both passes on ``limits.v_max`` (already obstacle-filtered)."""
    v_fw, a_fw = forward_pass(grid, limits.v_max, limits.a_max, limits.j_max, v0, a0)
    v_bw, a_bw = backward_pass(grid, limits.v_max, limits.a_min, limits.j_min, v_fw)
    return FilteredProfile(v_f=v_bw, v_forward=v_fw, v_backward=v_bw,
                           a_forward=a_fw, a_backward=a_bw)
