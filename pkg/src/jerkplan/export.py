"""Profile CSV and SVG plot emission.

Both writers are deterministic: floats go through ``repr`` in the CSV and a
fixed ``%.3f`` format in the SVG, so the same plan always gives the same bytes.
"""

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Tuple

import numpy as np

from .errors import ScenarioError
from .profile import LimitProfile, PathGrid, jerk_from_velocity, passing_times_from_velocity

CSV_COLUMNS = ("s", "v_limit_original", "v_limit_obstacle", "v_f", "v_opt", "a_opt",
               "jerk_opt", "t_pass")
DERIVED_COLUMNS = ("jerk_opt", "t_pass")

METHOD_COLORS = {"lp": "#1f5fbf", "pseudo-jerk-qp": "#2a9d3a"}
FALLBACK_COLORS = ("#c0392b", "#8e44ad", "#d35400", "#16a085")


def _fmt(x: float) -> str:
    return repr(float(x))


def profile_columns(plan) -> dict:
    """Column arrays for one plan. ``jerk_opt`` has N-1 values; the last row gets NaN."""
    n = plan.grid.n
    v_f = plan.v_f if plan.v_f is not None else np.full(n, np.nan)
    return {
        "s": plan.grid.s,
        "v_limit_original": plan.v_limit,
        "v_limit_obstacle": plan.v_limit_obstacle,
        "v_f": v_f,
        "v_opt": plan.velocity,
        "a_opt": plan.acceleration,
        "jerk_opt": np.append(plan.jerk, np.nan),
        "t_pass": plan.times,
    }


def profile_csv(plan) -> str:
    cols = profile_columns(plan)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for i in range(plan.grid.n):
        writer.writerow([_fmt(cols[c][i]) for c in CSV_COLUMNS])
    return buf.getvalue()


def write_profile_csv(plan, path) -> Path:
    path = Path(path)
    path.write_text(profile_csv(plan))
    return path


def read_profile_csv(path) -> dict:
    """Load a profile CSV into float arrays keyed by column name."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise ScenarioError(f"{path}: header must be {','.join(CSV_COLUMNS)}")
    body = rows[1:]
    out = {}
    for j, name in enumerate(CSV_COLUMNS):
        try:
            out[name] = np.array([float(r[j]) for r in body])
        except (ValueError, IndexError):
            raise ScenarioError(f"{path}: column {name} is malformed") from None
    return out


def recompute_derived(columns: dict) -> dict:
    """Recompute ``jerk_opt`` and ``t_pass`` from ``s``, ``v_opt`` and ``a_opt``."""
    grid = PathGrid(columns["s"])
    v, a = columns["v_opt"], columns["a_opt"]
    return {"jerk_opt": np.append(jerk_from_velocity(a, v, grid), np.nan),
            "t_pass": passing_times_from_velocity(v, grid)}


# --- SVG ---------------------------------------------------------------------

@dataclass(frozen=True)
class _Panel:
    title: str
    unit: str
    top: float


WIDTH, PANEL_H, MARGIN_L, MARGIN_R, GAP = 720.0, 200.0, 70.0, 20.0, 40.0


def _range(arrays):
    vals = np.concatenate([np.asarray(a, dtype=float)[np.isfinite(a)] for a in arrays] or [[0.0]])
    if vals.size == 0:
        return -1.0, 1.0
    lo, hi = float(vals.min()), float(vals.max())
    if hi - lo < 1e-9:
        lo, hi = lo - 1.0, hi + 1.0
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _polyline(xs, ys, x_map, y_map, color, dashed=False, width=1.5):
    pts = []
    segments = []
    for x, y in zip(xs, ys):
        if np.isfinite(x) and np.isfinite(y):
            pts.append(f"{x_map(x):.3f},{y_map(y):.3f}")
        elif pts:
            segments.append(pts)
            pts = []
    if pts:
        segments.append(pts)
    dash = ' stroke-dasharray="6,4"' if dashed else ""
    return [f'<polyline fill="none" stroke="{color}" stroke-width="{width}"{dash} '
            f'points="{" ".join(seg)}"/>' for seg in segments if len(seg) > 1]


def render_svg(plans: Sequence[Tuple[str, object]], limits: LimitProfile, title: str = "") -> str:
    """Three stacked panels (velocity, acceleration, jerk) against arc length.

    Each plan is drawn in its own color. The first plan's limit profiles are
    drawn dashed: original limit in black, obstacle limit in purple and the
    jerk-filtered profile in orange.
    """
    if not plans:
        raise ValueError("nothing to plot")
    grid = plans[0][1].grid
    s = grid.s
    x_lo, x_hi = float(s[0]), float(s[-1])
    plot_w = WIDTH - MARGIN_L - MARGIN_R
    height = 3 * PANEL_H + 4 * GAP
    x_map = lambda x: MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w
    ref = plans[0][1]
    colors = {}
    for k, (label, plan) in enumerate(plans):
        colors[label] = METHOD_COLORS.get(plan.method, FALLBACK_COLORS[k % len(FALLBACK_COLORS)])
        if label in [lab for lab, _ in plans[:k]]:
            colors[label] = FALLBACK_COLORS[k % len(FALLBACK_COLORS)]
    s_mid = s[:-1]
    panels = [
        (_Panel("velocity", "m/s", GAP),
         [(s, p.velocity) for _, p in plans],
         [(s, ref.v_limit, "#000000"), (s, ref.v_limit_obstacle, "#8e44ad")]
         + ([(s, ref.v_f, "#e67e22")] if ref.v_f is not None else [])),
        (_Panel("acceleration", "m/s^2", 2 * GAP + PANEL_H),
         [(s, p.acceleration) for _, p in plans],
         [(s, limits.a_max, "#000000"), (s, limits.a_min, "#000000")]),
        (_Panel("jerk", "m/s^3", 3 * GAP + 2 * PANEL_H),
         [(s_mid, p.jerk) for _, p in plans],
         [(s_mid, limits.j_max[:-1], "#000000"), (s_mid, limits.j_min[:-1], "#000000")]),
    ]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0f}" height="{height:.0f}" '
           f'viewBox="0 0 {WIDTH:.0f} {height:.0f}">',
           f'<rect width="{WIDTH:.0f}" height="{height:.0f}" fill="#ffffff"/>']
    if title:
        out.append(f'<text x="{WIDTH / 2:.3f}" y="20.000" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="14">{_escape(title)}</text>')
    for panel, curves, dashed in panels:
        lo, hi = _range([y for _, y in curves] + [y for _, y, _ in dashed])
        y_map = (lambda lo, hi, top: lambda y: top + PANEL_H - (y - lo) / (hi - lo) * PANEL_H)(
            lo, hi, panel.top)
        out.append(f'<rect x="{MARGIN_L:.3f}" y="{panel.top:.3f}" width="{plot_w:.3f}" '
                   f'height="{PANEL_H:.3f}" fill="none" stroke="#999999"/>')
        out.append(f'<text x="{MARGIN_L - 8:.3f}" y="{panel.top + PANEL_H / 2:.3f}" '
                   f'text-anchor="end" font-family="sans-serif" font-size="11">'
                   f'{panel.title} [{panel.unit}]</text>')
        for y_val in (lo, hi):
            out.append(f'<text x="{MARGIN_L - 4:.3f}" y="{y_map(y_val):.3f}" text-anchor="end" '
                       f'font-family="sans-serif" font-size="9">{y_val:.3f}</text>')
        for xs, ys, color in dashed:
            out.extend(_polyline(xs, ys, x_map, y_map, color, dashed=True, width=1.0))
        for (label, _), (xs, ys) in zip(plans, curves):
            out.extend(_polyline(xs, ys, x_map, y_map, colors[label]))
    bottom = 3 * GAP + 3 * PANEL_H
    out.append(f'<text x="{MARGIN_L + plot_w / 2:.3f}" y="{bottom + 28:.3f}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="11">s [m]</text>')
    for k, (label, _) in enumerate(plans):
        x = MARGIN_L + 10 + 150 * k
        out.append(f'<line x1="{x:.3f}" y1="{bottom + 14:.3f}" x2="{x + 20:.3f}" '
                   f'y2="{bottom + 14:.3f}" stroke="{colors[label]}" stroke-width="2"/>')
        out.append(f'<text x="{x + 24:.3f}" y="{bottom + 18:.3f}" font-family="sans-serif" '
                   f'font-size="11">{_escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def write_svg(path, plans, limits, title="") -> Path:
    path = Path(path)
    path.write_text(render_svg(plans, limits, title))
    return path
