"""Operator-splitting (ADMM) QP solver in the style of OSQP.

Solves ``min 0.5 x.P.x + c.x  s.t.  l <= A x <= u`` where equality rows,
inequality rows and variable bounds are all stacked into ``A``. Includes
Ruiz equilibration, adaptive step size, infeasibility certificates and an
active-set polishing step that lifts ADMM's modest accuracy to the
requested tolerance.
"""

import logging
import time

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .problems import (INFEASIBLE, ITERATION_LIMIT, OPTIMAL, TIME_LIMIT, UNBOUNDED,
                       QuadraticProgram, SolveResult, SolverConfig)

log = logging.getLogger(__name__)

DEFAULT_QP_ITERATIONS = 4000
_RHO_EQ_FACTOR = 1e3
_RHO_MIN, _RHO_MAX = 1e-6, 1e6
POLISH_GATE = 1e5


def check_psd(P, rel_tol=1e-9):
    """Raise ``ValueError`` unless ``P`` is positive semidefinite up to ``rel_tol``."""
    n = P.shape[0]
    if n == 0:
        return
    dense = P.toarray() if sp.issparse(P) else np.asarray(P, dtype=float)
    shift = rel_tol * max(1.0, np.abs(dense).max())
    try:
        np.linalg.cholesky(dense + shift * np.eye(n))
    except np.linalg.LinAlgError:
        raise ValueError("quadratic term is not positive semidefinite") from None


def _stack_rows(problem):
    n = problem.n_vars
    bounded = np.isfinite(problem.lower) | np.isfinite(problem.upper)
    eye = sp.identity(n, format="csr")[bounded]
    A = sp.vstack([problem.A_eq, problem.A_ub, eye], format="csc")
    lo = np.concatenate([problem.b_eq, np.full(problem.A_ub.shape[0], -np.inf),
                         problem.lower[bounded]])
    up = np.concatenate([problem.b_eq, problem.b_ub, problem.upper[bounded]])
    return A, lo, up


def _ruiz(P, A, c, iterations=15):
    n, m = P.shape[0], A.shape[0]
    D = np.ones(n)
    E = np.ones(m)
    Ps, As = P.copy(), A.copy()
    for _ in range(iterations):
        col_p = abs(Ps).max(axis=0).toarray().ravel() if n else np.zeros(0)
        col_a = abs(As).max(axis=0).toarray().ravel() if m else np.zeros(n)
        row_a = abs(As).max(axis=1).toarray().ravel() if m else np.zeros(0)
        dvar = 1.0 / np.sqrt(np.clip(np.maximum(col_p, col_a), 1e-4, 1e4))
        dcon = 1.0 / np.sqrt(np.clip(row_a, 1e-4, 1e4))
        dvar[np.maximum(col_p, col_a) == 0] = 1.0
        dcon[row_a == 0] = 1.0
        Dm = sp.diags(dvar)
        Em = sp.diags(dcon)
        Ps = (Dm @ Ps @ Dm).tocsc()
        As = (Em @ As @ Dm).tocsc()
        D *= dvar
        E *= dcon
    cs = D * c
    p_cols = abs(Ps).max(axis=0).toarray().ravel() if n else np.zeros(0)
    p_norm = float(p_cols.mean()) if p_cols.size else 0.0
    cost = 1.0 / np.clip(max(p_norm, np.abs(cs).max(initial=0.0)), 1e-4, 1e4)
    if max(p_norm, np.abs(cs).max(initial=0.0)) == 0:
        cost = 1.0
    return (cost * Ps).tocsc(), As, cost * cs, D, E, cost


class _Kkt:
    def __init__(self, P, A, sigma, rho):
        self.P, self.A, self.sigma = P, A, sigma
        self.update(rho)

    def update(self, rho):
        n = self.P.shape[0]
        K = sp.bmat([[self.P + self.sigma * sp.identity(n), self.A.T],
                     [self.A, -sp.diags(1.0 / rho)]], format="csc")
        self.lu = spla.splu(K)
        self.rho = rho

    def solve(self, rhs):
        return self.lu.solve(rhs)


def _polish(P, A, c, lo, up, x, y, z, delta=1e-9, refine=5, rounds=4):
    """Guess the active set from the iterate and solve the reduced KKT system.

    The guess is then refined by primal-dual active set steps: a bound is
    active when ``y + (A x - bound)`` points outward, recomputed from each
    polished point until the set repeats.
    """
    n = P.shape[0]
    eq = lo == up
    lower_act = eq | ((z - lo) < -y)
    upper_act = (~eq) & ((up - z) < y)
    for _ in range(rounds):
        act = lower_act | upper_act
        target = np.where(upper_act, up, lo)[act]
        Aa = A[act]
        k = Aa.shape[0]
        K = sp.bmat([[P, Aa.T], [Aa, None]], format="csc") if k else P.tocsc()
        reg = sp.diags(np.concatenate([np.full(n, delta), np.full(k, -delta)]))
        try:
            lu = spla.splu((K + reg).tocsc())
        except RuntimeError:
            return None
        rhs = np.concatenate([-c, target])
        sol = lu.solve(rhs)
        for _ in range(refine):
            sol = sol + lu.solve(rhs - K @ sol)
        if not np.all(np.isfinite(sol)):
            return None
        xp = sol[:n]
        yp = np.zeros(A.shape[0])
        yp[act] = sol[n:]
        Ax = A @ xp
        with np.errstate(invalid="ignore"):
            new_lower = eq | (yp + (Ax - lo) < 0)
            new_upper = (~eq) & (yp + (Ax - up) > 0)
        if np.array_equal(new_lower, lower_act) and np.array_equal(new_upper, upper_act):
            break
        used_lower, used_upper = lower_act, upper_act
        lower_act, upper_act = new_lower, new_upper
    else:
        lower_act, upper_act = used_lower, used_upper
    # Sign pattern must match the side of each active bound.
    yp[lower_act & ~eq] = np.minimum(yp[lower_act & ~eq], 0.0)
    yp[upper_act] = np.maximum(yp[upper_act], 0.0)
    zp = np.clip(A @ xp, lo, up)
    return xp, yp, zp


def solve_qp(problem: QuadraticProgram, config: SolverConfig = None, *, rho=0.1,
             sigma=1e-6, alpha=1.6, polish=True, check_every=25) -> SolveResult:
    """Solve a convex QP by ADMM with residual-based termination."""
    cfg = config or SolverConfig()
    max_iter = cfg.max_iterations or DEFAULT_QP_ITERATIONS
    start = time.perf_counter()
    check_psd(problem.P)
    n = problem.n_vars
    A0, lo0, up0 = _stack_rows(problem)
    P0 = problem.P.tocsc()
    c0 = problem.c
    m = A0.shape[0]

    P, A, c, D, E, cost = _ruiz(P0, A0, c0)
    lo = E * lo0
    up = E * up0
    Dinv, Einv = 1.0 / D, 1.0 / E

    rho_vec = np.where(lo == up, _RHO_EQ_FACTOR * rho, rho)
    kkt = _Kkt(P, A, sigma, rho_vec)
    x = np.zeros(n)
    z = np.clip(np.zeros(m), lo, up)
    y = np.zeros(m)
    status = ITERATION_LIMIT
    it = 0
    polished = False
    last_active = None
    eps_abs = cfg.primal_tol
    eps_rel = cfg.primal_tol

    def residuals(xs, ys, zs):
        Ax = Einv * (A @ xs)
        zu = Einv * zs
        Px = Dinv * (P @ xs) / cost
        ATy = Dinv * (A.T @ ys) / cost
        q = Dinv * c / cost
        r_p = np.abs(Ax - zu).max(initial=0.0)
        r_d = np.abs(Px + q + ATy).max(initial=0.0)
        e_p = eps_abs + eps_rel * max(np.abs(Ax).max(initial=0.0), np.abs(zu).max(initial=0.0))
        e_d = cfg.dual_tol + cfg.dual_tol * max(np.abs(Px).max(initial=0.0),
                                                np.abs(ATy).max(initial=0.0),
                                                np.abs(q).max(initial=0.0))
        return r_p, r_d, e_p, e_d

    def sign_ok(ys, zs):
        tol = 1e-7 * max(1.0, np.abs(ys).max(initial=0.0))
        with np.errstate(invalid="ignore"):
            above = zs > lo + 1e-7 * (1 + np.abs(lo))
            below = zs < up - 1e-7 * (1 + np.abs(up))
        return (np.all(np.abs(ys[above & below]) <= tol) and np.all(ys[above] >= -tol)
                and np.all(ys[below] <= tol))

    r_p = r_d = np.inf
    while it < max_iter:
        it += 1
        x_prev, y_prev = x, y
        rhs = np.concatenate([sigma * x - c, z - y / kkt.rho])
        sol = kkt.solve(rhs)
        x_t = sol[:n]
        z_t = z + (sol[n:] - y) / kkt.rho
        x = alpha * x_t + (1 - alpha) * x
        z_relax = alpha * z_t + (1 - alpha) * z
        z_new = np.clip(z_relax + y / kkt.rho, lo, up)
        y = y + kkt.rho * (z_relax - z_new)
        z = z_new

        if it % check_every and it != max_iter:
            continue
        r_p, r_d, e_p, e_d = residuals(x, y, z)
        if r_p <= e_p and r_d <= e_d:
            status = OPTIMAL
            break

        dy = y - y_prev
        dy_norm = np.abs(dy).max(initial=0.0)
        if dy_norm > 0:
            eps_inf = 1e-5 * dy_norm
            dyu = dy
            at_dy = np.abs(Dinv * (A.T @ dyu)).max(initial=0.0)
            support = (np.where(dyu > 0, np.where(np.isfinite(up), up, np.inf), 0.0) * dyu).sum() \
                + (np.where(dyu < 0, np.where(np.isfinite(lo), lo, -np.inf), 0.0) * dyu).sum()
            if at_dy <= eps_inf and np.isfinite(support) and support < -eps_inf:
                status = INFEASIBLE
                break
        dx = x - x_prev
        dx_norm = np.abs(dx).max(initial=0.0)
        if dx_norm > 0:
            eps_inf = 1e-5 * dx_norm
            Pdx = np.abs(P @ dx).max(initial=0.0)
            Adx = A @ dx
            cone_ok = np.all(np.where(np.isfinite(up), Adx <= eps_inf, True)
                             & np.where(np.isfinite(lo), Adx >= -eps_inf, True))
            if Pdx <= eps_inf and c @ dx < -eps_inf and cone_ok:
                status = UNBOUNDED
                break

        if polish and r_p <= POLISH_GATE * e_p and r_d <= POLISH_GATE * e_d:
            active = (tuple(np.flatnonzero((z - lo) < -y)) + (-1,)
                      + tuple(np.flatnonzero((up - z) < y)))
            if active != last_active:
                last_active = active
                out = _polish(P, A, c, lo, up, x, y, z)
                if out is not None:
                    xp, yp, zp = out
                    pr_p, pr_d, pe_p, pe_d = residuals(xp, yp, zp)
                    if pr_p <= pe_p and pr_d <= pe_d and sign_ok(yp, zp):
                        x, y, z = xp, yp, zp
                        r_p, r_d = pr_p, pr_d
                        polished = True
                        status = OPTIMAL
                        break

        if time.perf_counter() - start > cfg.time_limit:
            status = TIME_LIMIT
            break

        # Adaptive step size.
        Ax = np.abs(A @ x).max(initial=0.0)
        zn = np.abs(z).max(initial=0.0)
        Px = np.abs(P @ x).max(initial=0.0)
        ATy = np.abs(A.T @ y).max(initial=0.0)
        qn = np.abs(c).max(initial=0.0)
        sp_res = np.abs(A @ x - z).max(initial=0.0) / max(Ax, zn, 1e-12)
        sd_res = np.abs(P @ x + c + A.T @ y).max(initial=0.0) / max(Px, ATy, qn, 1e-12)
        if sd_res > 0 and sp_res > 0:
            scale = np.sqrt(sp_res / sd_res)
            if scale > 5 or scale < 0.2:
                new_rho = np.clip(kkt.rho * scale, _RHO_MIN, _RHO_MAX * _RHO_EQ_FACTOR)
                kkt.update(new_rho)

    if status != OPTIMAL and polish and status == ITERATION_LIMIT:
        out = _polish(P, A, c, lo, up, x, y, z)
        if out is not None:
            xp, yp, zp = out
            pr_p, pr_d, pe_p, pe_d = residuals(xp, yp, zp)
            if pr_p <= pe_p and pr_d <= pe_d and sign_ok(yp, zp):
                x, y, z = xp, yp, zp
                r_p, r_d = pr_p, pr_d
                polished = True
                status = OPTIMAL

    x_out = D * x
    y_out = E * y / cost
    objective = problem.objective(x_out) if status in (OPTIMAL, ITERATION_LIMIT) else np.nan
    if status != OPTIMAL:
        log.info("QP stopped with status %s after %d iterations", status, it)
    return SolveResult(x=x_out, objective=objective, status=status, iterations=it,
                       wall_time=time.perf_counter() - start, primal_residual=float(r_p),
                       dual_residual=float(r_d), dual=y_out,
                       info={"polished": polished, "cost_scale": cost,
                             "rho": float(np.median(kkt.rho)) if kkt.rho.size else rho})
