"""Primal-dual interior point LP solver with Mehrotra predictor-corrector.

Inequality rows get one slack column each, fixed variables are substituted
out, and bounds are handled directly (the iterates stay strictly inside
every finite bound, so box constraints hold exactly at termination).
"""

import logging
import time

import numpy as np
import scipy.sparse as sp

from .linalg import NormalEquations
from .problems import (INFEASIBLE, ITERATION_LIMIT, OPTIMAL, TIME_LIMIT, UNBOUNDED,
                       LinearProgram, SolveResult, SolverConfig)

log = logging.getLogger(__name__)

DEFAULT_LP_ITERATIONS = 200
_STEP_FRACTION = 0.995
_DIVERGENCE = 1e11


def _max_step(v, dv):
    neg = dv < 0
    if not np.any(neg):
        return 1.0
    return min(1.0, float(np.min(-v[neg] / dv[neg])))


def _residual_report(problem, x):
    eq = problem.A_eq @ x - problem.b_eq
    ub = problem.A_ub @ x - problem.b_ub
    viol = [np.abs(eq).max(initial=0.0), np.maximum(ub, 0.0).max(initial=0.0),
            np.maximum(problem.lower - x, 0.0).max(initial=0.0),
            np.maximum(x - problem.upper, 0.0).max(initial=0.0)]
    return float(max(viol))


def _box_only(problem, cfg, start):
    """No rows survive preprocessing: each variable sits at its cheapest bound."""
    c, lo, up = problem.c, problem.lower, problem.upper
    x = np.where(c > 0, lo, np.where(c < 0, up, np.where(np.isfinite(lo), lo,
                                                             np.where(np.isfinite(up), up, 0.0))))
    status = OPTIMAL
    if not np.all(np.isfinite(x)):
        status = UNBOUNDED
    obj = float(c @ x) if status == OPTIMAL else -np.inf
    return SolveResult(x=x, objective=obj, status=status, iterations=0,
                       wall_time=time.perf_counter() - start, primal_residual=0.0,
                       dual_residual=0.0, gap=0.0)


def solve_lp(problem: LinearProgram, config: SolverConfig = None) -> SolveResult:
    """Solve ``problem`` with a Mehrotra predictor-corrector interior point method."""
    cfg = config or SolverConfig()
    max_iter = cfg.max_iterations or DEFAULT_LP_ITERATIONS
    start = time.perf_counter()
    n = problem.n_vars

    fixed = problem.lower == problem.upper
    free = ~fixed
    x_fixed = problem.lower[fixed]
    A_eq = problem.A_eq.tocsc()
    A_ub = problem.A_ub.tocsc()
    b_eq = problem.b_eq - A_eq[:, fixed] @ x_fixed
    b_ub = problem.b_ub - A_ub[:, fixed] @ x_fixed
    m_e, m_u = A_eq.shape[0], A_ub.shape[0]
    blocks = [[A_eq[:, free], sp.csc_matrix((m_e, m_u))],
              [A_ub[:, free], sp.identity(m_u, format="csc")]]
    A = sp.bmat(blocks, format="csr") if (m_e + m_u) else sp.csr_matrix((0, free.sum() + m_u))
    A.eliminate_zeros()
    rhs = np.concatenate([b_eq, b_ub])
    c = np.concatenate([problem.c[free], np.zeros(m_u)])
    lo = np.concatenate([problem.lower[free], np.zeros(m_u)])
    up = np.concatenate([problem.upper[free], np.full(m_u, np.inf)])

    def expand(xr):
        x = np.empty(n)
        x[fixed] = x_fixed
        x[free] = xr[: free.sum()]
        return x

    row_nnz = np.diff(A.indptr)
    empty = row_nnz == 0
    if np.any(empty):
        if np.any(np.abs(rhs[empty]) > cfg.primal_tol * (1.0 + np.abs(rhs).max(initial=0.0))):
            x = expand(np.clip(np.zeros(c.size), lo, up))
            return SolveResult(x=x, objective=np.nan, status=INFEASIBLE, iterations=0,
                               wall_time=time.perf_counter() - start,
                               info={"reason": "empty row with nonzero right-hand side"})
        A = A[~empty]
        rhs = rhs[~empty]

    if A.shape[0] == 0:
        sub = LinearProgram(c=c, lower=lo, upper=up)
        res = _box_only(sub, cfg, start)
        res.x = expand(res.x)
        res.objective = float(problem.c @ res.x) if res.optimal else res.objective
        return res

    # Cost normalization makes the stopping test, and so the returned x,
    # independent of a positive scaling of c.
    c_max = np.abs(c).max(initial=0.0)
    cost_scale = 1.0 / c_max if c_max > 0 else 1.0
    c = c * cost_scale

    # Row equilibration.
    row_scale = 1.0 / np.maximum(abs(A).max(axis=1).toarray().ravel(), 1e-150)
    A = sp.diags(row_scale) @ A
    A = A.tocsr()
    rhs = rhs * row_scale
    AT = A.T.tocsr()

    has_l = np.isfinite(lo)
    has_u = np.isfinite(up)
    n_comp = int(has_l.sum() + has_u.sum())
    lo_f = np.where(has_l, lo, 0.0)
    up_f = np.where(has_u, up, 0.0)

    # Starting point strictly inside the finite bounds.
    x = np.where(has_l & has_u, 0.5 * (lo_f + up_f),
                 np.where(has_l, lo_f + 1.0, np.where(has_u, up_f - 1.0, 0.0)))
    y = np.zeros(A.shape[0])
    dual_scale = max(1.0, np.abs(c).max(initial=0.0))
    zl = np.where(has_l, dual_scale, 0.0)
    zu = np.where(has_u, dual_scale, 0.0)

    ne = NormalEquations(A)
    rhs_norm = 1.0 + np.abs(rhs).max(initial=0.0)
    c_norm = 1.0 + np.abs(c).max(initial=0.0)
    status = ITERATION_LIMIT
    it = 0
    rel_p = rel_d = rel_gap = np.inf
    stalled = False

    while True:
        # Rounding can push an iterate onto a bound; keep the slacks positive.
        g = np.maximum(np.where(has_l, x - lo_f, 1.0), 1e-150)
        h = np.maximum(np.where(has_u, up_f - x, 1.0), 1e-150)
        rp = rhs - A @ x
        rd = c - AT @ y - zl + zu
        mu = (np.dot(g[has_l], zl[has_l]) + np.dot(h[has_u], zu[has_u])) / max(n_comp, 1)
        pobj = float(c @ x)
        dobj = float(rhs @ y + lo_f[has_l] @ zl[has_l] - up_f[has_u] @ zu[has_u])
        rel_p = np.abs(rp).max() / rhs_norm
        rel_d = np.abs(rd).max(initial=0.0) / c_norm
        rel_gap = abs(pobj - dobj) / (1.0 + abs(pobj))
        if rel_p <= cfg.primal_tol and rel_d <= cfg.dual_tol and rel_gap <= cfg.gap_tol:
            status = OPTIMAL
            break
        if not (np.all(np.isfinite(x)) and np.isfinite(mu)):
            status = INFEASIBLE
            break
        if mu < 1e-16 * (1.0 + abs(pobj)):
            # Complementarity is exhausted but the residuals are not met:
            # rounding now dominates, so stop rather than diverge.
            status = ITERATION_LIMIT
            stalled = True
            break
        dual_size = max(np.abs(y).max(), zl.max(initial=0.0), zu.max(initial=0.0))
        if rel_p > cfg.primal_tol and dual_size > _DIVERGENCE * c_norm:
            status = INFEASIBLE
            break
        if rel_d > cfg.dual_tol and np.abs(x).max() > _DIVERGENCE * rhs_norm:
            status = UNBOUNDED
            break
        if it >= max_iter:
            status = ITERATION_LIMIT
            break
        if time.perf_counter() - start > cfg.time_limit:
            status = TIME_LIMIT
            break
        it += 1

        d_inv = np.where(has_l, zl / g, 0.0) + np.where(has_u, zu / h, 0.0) + 1e-12
        D = 1.0 / d_inv
        ne.factor(D)

        def direction(rl, ru):
            rtil = rd - np.where(has_l, rl / g, 0.0) + np.where(has_u, ru / h, 0.0)
            dy = ne.solve(rp + A @ (D * rtil))
            dx = D * (AT @ dy - rtil)
            dzl = np.where(has_l, (rl - zl * dx) / g, 0.0)
            dzu = np.where(has_u, (ru + zu * dx) / h, 0.0)
            return dx, dy, dzl, dzu

        def steps(dx, dzl, dzu):
            ap = min(_max_step(g[has_l], dx[has_l]), _max_step(h[has_u], -dx[has_u]))
            ad = min(_max_step(zl[has_l], dzl[has_l]), _max_step(zu[has_u], dzu[has_u]))
            return ap, ad

        # Predictor (affine scaling) step.
        dx, dy, dzl, dzu = direction(np.where(has_l, -g * zl, 0.0), np.where(has_u, -h * zu, 0.0))
        ap, ad = steps(dx, dzl, dzu)
        g_a = g + ap * dx
        h_a = h - ap * dx
        mu_aff = (np.dot(g_a[has_l], (zl + ad * dzl)[has_l])
                  + np.dot(h_a[has_u], (zu + ad * dzu)[has_u])) / max(n_comp, 1)
        sigma = min(1.0, (mu_aff / mu) ** 3) if mu > 0 else 0.0

        # Corrector with second-order term.
        rl = np.where(has_l, sigma * mu - g * zl - dx * dzl, 0.0)
        ru = np.where(has_u, sigma * mu - h * zu + dx * dzu, 0.0)
        dx, dy, dzl, dzu = direction(rl, ru)
        ap, ad = steps(dx, dzl, dzu)
        ap = min(1.0, _STEP_FRACTION * ap)
        ad = min(1.0, _STEP_FRACTION * ad)
        x = x + ap * dx
        y = y + ad * dy
        zl = zl + ad * dzl
        zu = zu + ad * dzu

    x_full = expand(x)
    y_unscaled = y * row_scale / cost_scale
    info = {"dual_objective": dobj / cost_scale + float(problem.c[fixed] @ x_fixed),
            "bandwidth": ne.bandwidth, "banded": ne.banded, "fallbacks": ne.fallbacks,
            "stalled": stalled, "rel_primal": float(rel_p), "rel_dual": float(rel_d),
            "rel_gap": float(rel_gap)}
    objective = float(problem.c @ x_full)
    if status == OPTIMAL:
        log.debug("LP optimal in %d iterations (objective %.9g)", it, objective)
    else:
        log.info("LP stopped with status %s after %d iterations", status, it)
    return SolveResult(x=x_full, objective=objective, status=status, iterations=it,
                       wall_time=time.perf_counter() - start,
                       primal_residual=_residual_report(problem, x_full),
                       dual_residual=float(rel_d * c_norm / cost_scale),
                       gap=float(abs(pobj - dobj) / cost_scale),
                       dual=y_unscaled, info=info)
