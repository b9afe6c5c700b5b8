import numpy as np
import pytest
import scipy.optimize as so
import scipy.sparse as sp
from hypothesis import example, given, settings
from hypothesis import strategies as st

from oracles import kkt_qp, simplex_lp
from jerkplan.solvers import (INFEASIBLE, ITERATION_LIMIT, OPTIMAL, UNBOUNDED, LinearProgram,
                              QuadraticProgram, SolverConfig, solve_lp, solve_qp)


def _random_lp(rng, n=None):
    n = n or int(rng.integers(2, 15))
    x0 = rng.uniform(-1.0, 1.0, n)
    lower, upper = x0 - rng.uniform(0.1, 2.0, n), x0 + rng.uniform(0.1, 2.0, n)
    A_eq = rng.normal(size=(int(rng.integers(0, n // 2 + 1)), n))
    A_ub = rng.normal(size=(int(rng.integers(1, n + 1)), n))
    b_ub = A_ub @ x0 + rng.uniform(0.0, 1.0, A_ub.shape[0])
    return rng.normal(size=n), A_eq, A_eq @ x0, A_ub, b_ub, lower, upper


def _lp(c, A_eq, b_eq, A_ub, b_ub, lower, upper):
    return LinearProgram(c=c, A_eq=sp.csr_matrix(A_eq), b_eq=b_eq, A_ub=sp.csr_matrix(A_ub),
                         b_ub=b_ub, lower=lower, upper=upper)


class TestLinearPrograms:
    def test_box_only(self):
        res = solve_lp(LinearProgram(c=[-1.0, -1.0], lower=[0, 0], upper=[1, 1]))
        assert res.status == OPTIMAL
        assert res.objective == pytest.approx(-2.0, abs=1e-8)
        np.testing.assert_allclose(res.x, [1.0, 1.0], atol=1e-7)

    def test_single_row(self):
        res = solve_lp(LinearProgram(c=[-1.0, 0.0], A_ub=[[1.0, 1.0]], b_ub=[1.0]))
        assert res.status == OPTIMAL
        assert res.objective == pytest.approx(-1.0, abs=1e-8)

    def test_equality_and_fixed_variable(self):
        res = solve_lp(LinearProgram(c=[1.0, 2.0, 0.0], A_eq=[[1.0, 1.0, 1.0]], b_eq=[3.0],
                                     lower=[0, 0, 0.5], upper=[5, 5, 0.5]))
        assert res.status == OPTIMAL
        np.testing.assert_allclose(res.x, [2.5, 0.0, 0.5], atol=1e-7)

    def test_infeasible(self):
        res = solve_lp(LinearProgram(c=[1.0], A_ub=[[1.0]], b_ub=[-1.0], lower=[0.0]))
        assert res.status == INFEASIBLE

    def test_unbounded(self):
        res = solve_lp(LinearProgram(c=[-1.0, 0.0], A_ub=[[0.0, 1.0]], b_ub=[1.0]))
        assert res.status == UNBOUNDED

    def test_iteration_cap(self):
        rng = np.random.default_rng(0)
        res = solve_lp(_lp(*_random_lp(rng, 12)), SolverConfig(max_iterations=1))
        assert res.status == ITERATION_LIMIT

    def test_rejects_crossed_bounds(self):
        with pytest.raises(ValueError):
            LinearProgram(c=[1.0], lower=[1.0], upper=[0.0])

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.01, 100.0))
    def test_cost_scaling(self, seed, k):
        data = _random_lp(np.random.default_rng(seed))
        base = solve_lp(_lp(*data))
        scaled = solve_lp(_lp(data[0] * k, *data[1:]))
        assert base.status == scaled.status == OPTIMAL
        assert scaled.objective == pytest.approx(k * base.objective, rel=1e-7, abs=1e-7)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.01, 100.0))
    @example(seed=1057, k=0.015625)
    def test_argmin_unchanged_by_cost_scaling(self, seed, k):
        data = _random_lp(np.random.default_rng(seed))
        base = solve_lp(_lp(*data))
        scaled = solve_lp(_lp(data[0] * k, *data[1:]))
        np.testing.assert_allclose(scaled.x, base.x, atol=1e-6)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_primal_equals_dual_objective(self, seed):
        data = _random_lp(np.random.default_rng(seed))
        res = solve_lp(_lp(*data))
        assert res.status == OPTIMAL
        tol = 10 * SolverConfig().gap_tol * (1.0 + abs(res.objective))
        assert abs(res.objective - res.info["dual_objective"]) <= tol

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_solution_feasible_and_matches_scipy(self, seed):
        c, A_eq, b_eq, A_ub, b_ub, lower, upper = _random_lp(np.random.default_rng(seed))
        res = solve_lp(_lp(c, A_eq, b_eq, A_ub, b_ub, lower, upper))
        assert res.status == OPTIMAL
        x = res.x
        assert np.all(A_ub @ x <= b_ub + 1e-7)
        np.testing.assert_allclose(A_eq @ x, b_eq, atol=1e-7)
        assert np.all(x >= lower - 1e-9) and np.all(x <= upper + 1e-9)
        ref = so.linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq if A_eq.size else None,
                         b_eq=b_eq if A_eq.size else None, bounds=list(zip(lower, upper)),
                         method="highs")
        assert res.objective == pytest.approx(ref.fun, rel=1e-7, abs=1e-7)


class TestQuadraticPrograms:
    def test_unconstrained_parabola(self):
        res = solve_qp(QuadraticProgram(P=[[2.0]], c=[-2.0]))
        assert res.status == OPTIMAL
        assert res.x[0] == pytest.approx(1.0, abs=1e-6)

    def test_interior_minimum_in_box(self):
        res = solve_qp(QuadraticProgram(P=[[1.0]], c=[-3.0], lower=[0.0], upper=[5.0]))
        assert res.x[0] == pytest.approx(3.0, abs=1e-6)
        assert res.objective == pytest.approx(-4.5, abs=1e-6)

    def test_active_bound(self):
        res = solve_qp(QuadraticProgram(P=[[1.0]], c=[-3.0], lower=[0.0], upper=[2.0]))
        assert res.x[0] == pytest.approx(2.0, abs=1e-6)

    def test_rejects_indefinite(self):
        with pytest.raises(ValueError, match="positive semidefinite"):
            solve_qp(QuadraticProgram(P=[[1.0, 0.0], [0.0, -1.0]], c=[0.0, 0.0]))

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError, match="symmetric"):
            QuadraticProgram(P=[[1.0, 1.0], [0.0, 1.0]], c=[0.0, 0.0])

    def test_infeasible(self):
        res = solve_qp(QuadraticProgram(P=[[1.0, 0.0], [0.0, 1.0]], c=[0.0, 0.0],
                                        A_eq=[[1.0, 1.0]], b_eq=[5.0], lower=[0, 0],
                                        upper=[1, 1]))
        assert res.status == INFEASIBLE

    def test_zero_hessian_is_an_lp(self):
        res = solve_qp(QuadraticProgram(P=sp.csr_matrix((2, 2)), c=[-1.0, -1.0], lower=[0, 0],
                                        upper=[1, 1]))
        assert res.objective == pytest.approx(-2.0, abs=1e-6)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_matches_active_set_enumeration(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 6))
        M = rng.normal(size=(n, int(rng.integers(1, n + 1))))
        P = M @ M.T
        c = rng.normal(size=n)
        x0 = rng.uniform(-1.0, 1.0, n)
        lower, upper = x0 - rng.uniform(0.1, 1.0, n), x0 + rng.uniform(0.1, 1.0, n)
        _, ref = kkt_qp(P, c, np.zeros((0, n)), np.zeros(0), lower, upper)
        res = solve_qp(QuadraticProgram(P=P, c=c, lower=lower, upper=upper))
        assert res.status == OPTIMAL
        assert res.objective == pytest.approx(ref, rel=1e-6, abs=1e-6)


class TestOracles:
    """The test oracles themselves, checked against scipy on small problems."""

    @pytest.mark.parametrize("seed", range(20))
    def test_simplex_matches_highs(self, seed):
        c, A_eq, b_eq, A_ub, b_ub, lower, upper = _random_lp(np.random.default_rng(seed))
        status, _, value = simplex_lp(c, A_eq, b_eq, A_ub, b_ub, lower, upper)
        ref = so.linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq if A_eq.size else None,
                         b_eq=b_eq if A_eq.size else None, bounds=list(zip(lower, upper)),
                         method="highs")
        assert status == "optimal"
        assert value == pytest.approx(ref.fun, rel=1e-9, abs=1e-9)

    @pytest.mark.parametrize("seed", range(20))
    def test_enumeration_matches_slsqp(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 5))
        M = rng.normal(size=(n, n))
        P = M @ M.T + 0.1 * np.eye(n)
        c = rng.normal(size=n)
        lower, upper = -np.ones(n), np.ones(n)
        _, value = kkt_qp(P, c, np.zeros((0, n)), np.zeros(0), lower, upper)
        ref = so.minimize(lambda x: 0.5 * x @ P @ x + c @ x, np.zeros(n),
                          jac=lambda x: P @ x + c, bounds=list(zip(lower, upper)),
                          method="L-BFGS-B", options={"ftol": 1e-14, "gtol": 1e-12})
        assert value == pytest.approx(ref.fun, abs=1e-7)
