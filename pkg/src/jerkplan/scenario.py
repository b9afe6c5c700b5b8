"""Scenario description, JSON loading (schema v1) and the built-in preset.

A scenario file looks like::

    {
      "schema": 1,
      "name": "cut-in",
      "grid": {"n": 300, "ds": 0.1},
      "limits": {"v_max": {"value": 3.0, "zones": [{"start": 15, "end": 20, "value": 1.5}]},
                 "a_max": 1.0, "a_min": -1.0, "j_max": 0.8, "j_min": -0.8},
      "obstacles": [{"v_obs": 1.0, "t_in": 2.0, "t_out": 8.0, "s_in": 16.0}],
      "boundary": {"v0": 0.5, "a0": 0.0}
    }

Scalars broadcast to the grid length. ``"inf"`` is accepted wherever an
unbounded number makes sense (``t_out``, jerk limits).
"""

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np

from .baseline import BASELINE_SOLVER
from .errors import ScenarioError
from .obstacles import FOLLOW, GateParams, GatePolicy, ObstacleTrack
from .planner import Boundary, resolve_gates
from .profile import CurvatureProfile, LimitProfile, PathGrid, curvature_speed_limit
from .solvers import SolverConfig

SCHEMA_VERSION = 1
METHODS = ("lp", "pseudo-jerk-qp")
REFERENCE_PRESET = "paper-sec4"
PRESETS = (REFERENCE_PRESET,)


@dataclass(frozen=True)
class Scenario:
    grid: PathGrid
    limits: LimitProfile
    boundary: Boundary
    tracks: Sequence[ObstacleTrack] = ()
    gates: Union[GatePolicy, Sequence[GateParams]] = field(default_factory=GatePolicy)
    curvature: Optional[CurvatureProfile] = None
    method: str = "lp"
    w_smooth: float = 500.0
    solver: Optional[SolverConfig] = None
    weighted_objective: bool = False
    name: str = "scenario"

    def __post_init__(self):
        if self.limits.n != self.grid.n:
            raise ScenarioError(f"limits have {self.limits.n} points but grid has {self.grid.n}")
        if self.curvature is not None and self.curvature.kappa.size != self.grid.n:
            raise ScenarioError(f"curvature has {self.curvature.kappa.size} points "
                                f"but grid has {self.grid.n}")
        if self.method not in METHODS:
            raise ScenarioError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if not (self.w_smooth >= 0 and math.isfinite(self.w_smooth)):
            raise ScenarioError("w_smooth must be finite and non-negative")
        object.__setattr__(self, "tracks", tuple(self.tracks))
        if not isinstance(self.gates, GatePolicy):
            object.__setattr__(self, "gates", tuple(self.gates))
        resolve_gates(self.tracks, self.gates)

    def effective_limits(self) -> LimitProfile:
        """Limits with the curvature speed cap folded into ``v_max``."""
        if self.curvature is None:
            return self.limits
        cap = curvature_speed_limit(self.curvature)
        return self.limits.replace(v_max=np.minimum(self.limits.v_max, cap))

    def resolved_gates(self) -> List[GateParams]:
        return resolve_gates(self.tracks, self.gates)

    def solver_config(self, method: str = None) -> Optional[SolverConfig]:
        method = method or self.method
        if self.solver is not None:
            return self.solver
        return BASELINE_SOLVER if method == "pseudo-jerk-qp" else None

    def with_options(self, **changes) -> "Scenario":
        return replace(self, **changes)


def reference_preset() -> Scenario:
    """Straight 29.9 m path, start at 0.5 m/s, a 1.5 m/s slow zone and one cut-in.

    The grid, the acceleration and jerk limits and the initial state are
    fixed reference values. The speed-limit profile and the obstacle are
    illustrative choices.
    """
    n, ds = 300, 0.1
    grid = PathGrid.uniform(n, ds)
    v_max = np.full(n, 3.0)
    v_max[150:200] = 1.5
    limits = LimitProfile.broadcast(n, v_max=v_max, a_max=1.0, a_min=-1.0,
                                    j_max=0.8, j_min=-0.8, v_min=0.0)
    track = ObstacleTrack(v_obs=1.0, t_in=2.0, t_out=8.0, s_in=16.0, mode=FOLLOW)
    return Scenario(grid=grid, limits=limits, boundary=Boundary(v0=0.5, a0=0.0),
                    tracks=(track,), gates=GatePolicy(), name=REFERENCE_PRESET)


def preset(name: str) -> Scenario:
    if name == REFERENCE_PRESET:
        return reference_preset()
    raise ScenarioError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")


# --- JSON loading -------------------------------------------------------------

def _number(value, where, allow_inf=False):
    if isinstance(value, str) and value.lower() in ("inf", "+inf", "infinity") and allow_inf:
        return math.inf
    if isinstance(value, str) and value.lower() in ("-inf", "-infinity") and allow_inf:
        return -math.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value) and not allow_inf:
        raise ScenarioError(f"{where}: must be finite")
    return value


def _require(obj, key, where):
    if not isinstance(obj, dict):
        raise ScenarioError(f"{where}: expected an object")
    if key not in obj:
        raise ScenarioError(f"{where}.{key}: required field is missing")
    return obj[key]


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ScenarioError(f"{where}: expected an object")
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ScenarioError(f"{where}: unknown field(s) {', '.join(unknown)}")


def _profile(value, grid, where, allow_inf=False):
    """Scalar, explicit list, or ``{"value": x, "zones": [{start, end, value}]}`` by arc length."""
    n = grid.n
    if isinstance(value, list):
        if len(value) != n:
            raise ScenarioError(f"{where}: has {len(value)} entries, expected {n}")
        return np.array([_number(v, f"{where}[{i}]", allow_inf) for i, v in enumerate(value)])
    if isinstance(value, dict):
        _check_keys(value, ("value", "zones"), where)
        out = np.full(n, _number(_require(value, "value", where), f"{where}.value", allow_inf))
        for k, zone in enumerate(value.get("zones", [])):
            zw = f"{where}.zones[{k}]"
            _check_keys(zone, ("start", "end", "value"), zw)
            start = _number(_require(zone, "start", zw), f"{zw}.start")
            end = _number(_require(zone, "end", zw), f"{zw}.end")
            if end < start:
                raise ScenarioError(f"{zw}: end must not precede start")
            inside = (grid.s >= start) & (grid.s < end)
            out[inside] = _number(_require(zone, "value", zw), f"{zw}.value", allow_inf)
        return out
    return np.full(n, _number(value, where, allow_inf))


def _grid(node):
    where = "grid"
    _check_keys(node, ("n", "ds", "s", "start"), where)
    if "s" in node:
        s = node["s"]
        if not isinstance(s, list):
            raise ScenarioError("grid.s: expected a list of arc lengths")
        if "n" in node and node["n"] != len(s):
            raise ScenarioError(f"grid.n = {node['n']} disagrees with {len(s)} entries in grid.s")
        return PathGrid([_number(v, f"grid.s[{i}]") for i, v in enumerate(s)])
    n = _require(node, "n", where)
    if isinstance(n, bool) or not isinstance(n, int) or n < 2:
        raise ScenarioError(f"grid.n: expected an integer >= 2, got {n!r}")
    ds = _number(_require(node, "ds", where), "grid.ds")
    if ds <= 0:
        raise ScenarioError("grid.ds: must be positive")
    return PathGrid.uniform(n, ds, _number(node.get("start", 0.0), "grid.start"))


def _limits(node, grid):
    where = "limits"
    keys = ("v_max", "v_min", "a_max", "a_min", "j_max", "j_min")
    _check_keys(node, keys, where)
    values = {}
    for key in keys:
        if key == "v_min":
            raw = node.get(key, 0.0)
        else:
            raw = _require(node, key, where)
        values[key] = _profile(raw, grid, f"{where}.{key}", allow_inf=key.startswith("j"))
    return LimitProfile(**values)


def _tracks(node):
    if not isinstance(node, list):
        raise ScenarioError("obstacles: expected a list")
    out = []
    for k, item in enumerate(node):
        where = f"obstacles[{k}]"
        _check_keys(item, ("v_obs", "t_in", "t_out", "s_in", "mode"), where)
        try:
            out.append(ObstacleTrack(
                v_obs=_number(_require(item, "v_obs", where), f"{where}.v_obs"),
                t_in=_number(_require(item, "t_in", where), f"{where}.t_in"),
                t_out=_number(_require(item, "t_out", where), f"{where}.t_out", allow_inf=True),
                s_in=_number(_require(item, "s_in", where), f"{where}.s_in"),
                mode=item.get("mode", FOLLOW)))
        except ScenarioError as exc:
            if str(exc).startswith(where):
                raise
            raise ScenarioError(f"{where}: {exc}") from None
    return out


def _gates(node, n_tracks):
    if isinstance(node, list):
        out = []
        for k, item in enumerate(node):
            where = f"gates[{k}]"
            _check_keys(item, ("d_alpha", "d_beta", "t_range"), where)
            try:
                out.append(GateParams(
                    d_alpha=_number(_require(item, "d_alpha", where), f"{where}.d_alpha"),
                    d_beta=_number(_require(item, "d_beta", where), f"{where}.d_beta"),
                    t_range=_number(_require(item, "t_range", where), f"{where}.t_range")))
            except ScenarioError as exc:
                raise ScenarioError(f"{where}: {exc}") from None
        if len(out) != n_tracks:
            raise ScenarioError(f"gates: {len(out)} entries for {n_tracks} obstacles")
        return out
    fields = ("t_safe", "d_min", "d_margin", "t_range", "combiner")
    _check_keys(node, fields, "gates")
    kwargs = {k: (node[k] if k == "combiner" else _number(node[k], f"gates.{k}"))
              for k in fields if k in node}
    try:
        return GatePolicy(**kwargs)
    except ScenarioError as exc:
        raise ScenarioError(f"gates: {exc}") from None


def _solver(node):
    fields = ("max_iterations", "primal_tol", "dual_tol", "gap_tol", "time_limit")
    _check_keys(node, fields, "solver")
    kwargs = {}
    for k in fields:
        if k not in node:
            continue
        if k == "max_iterations":
            if isinstance(node[k], bool) or not isinstance(node[k], int):
                raise ScenarioError("solver.max_iterations: expected an integer")
            kwargs[k] = node[k]
        else:
            kwargs[k] = _number(node[k], f"solver.{k}", allow_inf=(k == "time_limit"))
    try:
        return SolverConfig(**kwargs)
    except ValueError as exc:
        raise ScenarioError(f"solver: {exc}") from None


TOP_LEVEL = ("schema", "name", "preset", "grid", "limits", "curvature", "obstacles", "gates",
             "boundary", "method", "w_smooth", "solver", "weighted_objective")


def scenario_from_dict(doc: dict) -> Scenario:
    """Validate a parsed schema-v1 document. Errors name the offending field."""
    _check_keys(doc, TOP_LEVEL, "scenario")
    schema = _require(doc, "schema", "scenario")
    if schema != SCHEMA_VERSION:
        raise ScenarioError(f"schema: unsupported version {schema!r}, expected {SCHEMA_VERSION}")
    if "preset" in doc:
        base = preset(doc["preset"])
        extra = sorted(set(doc) - {"schema", "name", "preset", "method", "w_smooth", "solver",
                                   "gates"})
        if extra:
            raise ScenarioError(f"preset: fields {', '.join(extra)} cannot be combined "
                                "with a preset")
        changes = {}
    else:
        grid = _grid(_require(doc, "grid", "scenario"))
        limits = _limits(_require(doc, "limits", "scenario"), grid)
        bnode = _require(doc, "boundary", "scenario")
        _check_keys(bnode, ("v0", "a0"), "boundary")
        boundary = Boundary(v0=_number(_require(bnode, "v0", "boundary"), "boundary.v0"),
                            a0=_number(bnode.get("a0", 0.0), "boundary.a0"))
        curvature = None
        if "curvature" in doc:
            cs = doc["curvature"]
            _check_keys(cs, ("kappa", "a_max_lateral", "v_max_road"), "curvature")
            curvature = CurvatureProfile(
                kappa=_profile(_require(cs, "kappa", "curvature"), grid, "curvature.kappa"),
                a_max_lateral=_number(_require(cs, "a_max_lateral", "curvature"),
                                      "curvature.a_max_lateral"),
                v_max_road=_number(_require(cs, "v_max_road", "curvature"), "curvature.v_max_road"))
        tracks = _tracks(doc.get("obstacles", []))
        base = Scenario(grid=grid, limits=limits, boundary=boundary, tracks=tracks,
                        curvature=curvature)
        changes = {}
    if "gates" in doc:
        changes["gates"] = _gates(doc["gates"], len(base.tracks))
    if "method" in doc:
        changes["method"] = doc["method"]
    if "w_smooth" in doc:
        changes["w_smooth"] = _number(doc["w_smooth"], "w_smooth")
    if "solver" in doc:
        changes["solver"] = _solver(doc["solver"])
    if "weighted_objective" in doc:
        if not isinstance(doc["weighted_objective"], bool):
            raise ScenarioError("weighted_objective: expected true or false")
        changes["weighted_objective"] = doc["weighted_objective"]
    changes["name"] = str(doc.get("name", base.name if "preset" in doc else "scenario"))
    return replace(base, **changes)


def load_scenario(path) -> Scenario:
    """Read and validate a scenario JSON file.

    Raises :class:`ScenarioError` with the line and column of a syntax error,
    or the dotted field path of a validation error.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"{path}: cannot read scenario file ({exc.strerror})") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return scenario_from_dict(doc)
