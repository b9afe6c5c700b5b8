"""Run, compare and benchmark planners on a scenario."""

import csv
import io
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence

import numpy as np

from .baseline import PseudoJerkConfig, plan_velocity_qp
from .export import write_profile_csv, write_svg
from .metrics import initial_acceleration, jerk_saturation
from .planner import VelocityPlan, plan_velocity
from .scenario import METHODS, Scenario
from .validator import FeasibilityReport, check_original_feasibility, windows_from_tracks

log = logging.getLogger(__name__)


@dataclass
class RunRecord:
    """Outcome of one planner run. ``filter_time + optimize_time == wall_time``."""

    scenario: str
    method: str
    objective: float
    wall_time: float
    filter_time: float
    optimize_time: float
    iterations: int
    feasibility: dict
    outputs: Dict[str, str] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)


def execute(scenario: Scenario, method: str = None) -> VelocityPlan:
    """Plan with the chosen method and no file output."""
    method = method or scenario.method
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    limits = scenario.effective_limits()
    solver = scenario.solver_config(method)
    if method == "lp":
        return plan_velocity(scenario.grid, limits, scenario.tracks, scenario.gates,
                             scenario.boundary, solver, scenario.weighted_objective)
    return plan_velocity_qp(scenario.grid, limits, scenario.tracks, scenario.gates,
                            scenario.boundary, PseudoJerkConfig(scenario.w_smooth), solver,
                            scenario.weighted_objective)


def feasibility(scenario: Scenario, plan: VelocityPlan, tol: float = 1e-6) -> FeasibilityReport:
    """Check ``plan`` against the unrelaxed problem, obstacle time windows included."""
    windows = windows_from_tracks(scenario.tracks, scenario.resolved_gates(), scenario.grid)
    return check_original_feasibility(plan.state, scenario.grid, scenario.effective_limits(),
                                      windows, tol)


def _stem(scenario, method):
    return f"{scenario.name}_{method}".replace("/", "_")


def run(scenario: Scenario, method: str = None, out_dir=None, tol: float = 1e-6):
    """Plan, validate and optionally write ``<name>_<method>.{csv,svg,json}`` to ``out_dir``.

    Returns ``(record, plan, report)``.
    """
    method = method or scenario.method
    plan = execute(scenario, method)
    report = feasibility(scenario, plan, tol)
    if not report.feasible:
        log.warning("%s plan violates the original problem: %s", method, report.summary())
    record = RunRecord(scenario=scenario.name, method=method, objective=float(plan.objective),
                       wall_time=plan.wall_time, filter_time=plan.filter_time,
                       optimize_time=plan.optimize_time, iterations=int(plan.iterations),
                       feasibility=report.as_dict())
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = _stem(scenario, method)
        record.outputs["csv"] = str(write_profile_csv(plan, out / f"{stem}.csv"))
        record.outputs["svg"] = str(write_svg(out / f"{stem}.svg", [(method, plan)],
                                              scenario.effective_limits(),
                                              f"{scenario.name}: {method}"))
        record.outputs["json"] = str(out / f"{stem}.json")
        Path(record.outputs["json"]).write_text(json.dumps(record.as_dict(), indent=2) + "\n")
    return record, plan, report


def plan_summary(plan: VelocityPlan, limits) -> dict:
    return {"initial_acceleration": initial_acceleration(plan),
            "jerk_saturation": jerk_saturation(plan, limits),
            "objective": float(plan.objective)}


def compare(scenario: Scenario, methods: Sequence[str] = ("lp", "pseudo-jerk-qp"), out_dir=None,
            tol: float = 1e-6) -> dict:
    """Run two methods, overlay them in one SVG and report the differences (second minus first)."""
    if len(methods) != 2:
        raise ValueError("compare needs exactly two methods")
    limits = scenario.effective_limits()
    plans, summaries, reports = [], [], []
    for method in methods:
        plan = execute(scenario, method)
        plans.append(plan)
        summaries.append(plan_summary(plan, limits))
        reports.append(feasibility(scenario, plan, tol).as_dict())
    diff = {k: summaries[1][k] - summaries[0][k] for k in summaries[0]}
    result = {"scenario": scenario.name, "methods": list(methods),
              "summary": {f"{i}:{m}": s for i, (m, s) in enumerate(zip(methods, summaries))},
              "feasibility": {f"{i}:{m}": r for i, (m, r) in enumerate(zip(methods, reports))},
              "diff": diff, "outputs": {}}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        labels = [m if methods[0] != methods[1] else f"{m} #{i + 1}" for i, m in enumerate(methods)]
        svg = write_svg(out / f"{scenario.name}_compare.svg", list(zip(labels, plans)), limits,
                        f"{scenario.name}: {' vs '.join(labels)}")
        summary_path = out / f"{scenario.name}_compare.json"
        result["outputs"] = {"svg": str(svg), "json": str(summary_path)}
        summary_path.write_text(json.dumps(result, indent=2) + "\n")
    return result


BENCH_COLUMNS = ("scenario", "method", "reps", "median_ms", "p95_ms", "filter_median_ms",
                 "optimize_median_ms", "filter_share")


def bench(scenarios: Sequence[Scenario], reps: int, methods: Sequence[str] = METHODS,
          clock=time.perf_counter) -> List[dict]:
    """Time every method on every scenario ``reps`` times after one warm-up run.

    Methods run in the given order and repetitions are strictly sequential.
    ``filter_share`` is the median over repetitions of filter time / total time.
    """
    if reps < 1:
        raise ValueError("repetitions must be at least 1")
    if not scenarios:
        raise ValueError("bench needs at least one scenario")
    rows = []
    for scenario in scenarios:
        for method in methods:
            execute(scenario, method)
            total, filt, opt, share = [], [], [], []
            for _ in range(reps):
                t0 = clock()
                plan = execute(scenario, method)
                elapsed = clock() - t0
                total.append(elapsed)
                filt.append(plan.filter_time)
                opt.append(plan.optimize_time)
                share.append(plan.filter_time / plan.wall_time if plan.wall_time > 0 else 0.0)
            total = np.array(total) * 1e3
            rows.append({"scenario": scenario.name, "method": method, "reps": reps,
                         "median_ms": float(np.median(total)),
                         "p95_ms": float(np.percentile(total, 95)),
                         "filter_median_ms": float(np.median(filt) * 1e3),
                         "optimize_median_ms": float(np.median(opt) * 1e3),
                         "filter_share": float(np.median(share))})
    return rows


def bench_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=BENCH_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def bench_table(rows: Sequence[dict]) -> str:
    header = f"{'scenario':<16} {'method':<15} {'reps':>5} {'median ms':>10} {'p95 ms':>9} " \
             f"{'filter ms':>10} {'opt ms':>9} {'filter %':>9}"
    lines = [header, "-" * len(header)]
    for r in rows:
        lines.append(f"{r['scenario']:<16} {r['method']:<15} {r['reps']:>5} "
                     f"{r['median_ms']:>10.3f} {r['p95_ms']:>9.3f} {r['filter_median_ms']:>10.3f} "
                     f"{r['optimize_median_ms']:>9.3f} {100 * r['filter_share']:>8.2f}%")
    return "\n".join(lines)
