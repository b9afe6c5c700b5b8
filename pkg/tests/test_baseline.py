import numpy as np
import pytest

from jerkplan.baseline import (PseudoJerkConfig, assemble_pseudo_jerk_qp, difference_operator,
                               plan_velocity_qp, pseudo_jerk)
from jerkplan.errors import ScenarioError
from jerkplan.planner import Boundary
from jerkplan.profile import LimitProfile, PathGrid, PlanningState, derived_jerk
from jerkplan.solvers import LinearProgram, solve_lp, solve_qp


def _limits(n, v_max=2.0):
    return LimitProfile.broadcast(n, v_max=v_max, a_max=1.0, a_min=-1.0, j_max=0.8, j_min=-0.8)


def _drop(n=40):
    v_max = np.full(n, 2.0)
    v_max[n // 2:] = 1.0
    return PathGrid.uniform(n, 0.2), _limits(n, v_max)


class TestPseudoJerk:
    def test_direct_evaluation(self):
        state = PlanningState(b=[1.0, 1.0], a=[0.0, 0.5])
        np.testing.assert_allclose(pseudo_jerk(state, PathGrid.uniform(2, 0.1)), [5.0])

    def test_times_speed_is_true_jerk(self):
        rng = np.random.default_rng(0)
        grid = PathGrid(np.cumsum(rng.uniform(0.1, 1.0, 20)))
        state = PlanningState(b=rng.uniform(0.0, 9.0, 20), a=rng.uniform(-1.0, 1.0, 20))
        np.testing.assert_allclose(pseudo_jerk(state, grid) * np.sqrt(state.b[:-1]),
                                   derived_jerk(state, grid), rtol=1e-12)

    def test_operator(self):
        D = difference_operator(PathGrid([0.0, 0.5, 2.5])).toarray()
        np.testing.assert_allclose(D, [[-2.0, 2.0, 0.0], [0.0, -0.5, 0.5]])

    def test_rejects_negative_weight(self):
        with pytest.raises(ScenarioError):
            PseudoJerkConfig(w_smooth=-1.0)


class TestAssembly:
    def test_hessian_rank(self):
        grid = PathGrid.uniform(3, 0.1)
        qp = assemble_pseudo_jerk_qp(grid, _limits(3), PseudoJerkConfig(10.0), Boundary(1.0))
        P = qp.P.toarray()
        assert np.linalg.matrix_rank(P) == 2
        assert np.all(P[:3] == 0.0)

    def test_zero_weight_matches_lp_without_jerk(self):
        grid, limits = _drop(20)
        qp = assemble_pseudo_jerk_qp(grid, limits, PseudoJerkConfig(0.0), Boundary(1.0))
        lp = LinearProgram(c=qp.c, A_eq=qp.A_eq, b_eq=qp.b_eq, lower=qp.lower, upper=qp.upper)
        assert solve_qp(qp).objective == pytest.approx(solve_lp(lp).objective, abs=1e-5)


class TestPlan:
    def test_requires_boundary(self):
        with pytest.raises(ScenarioError):
            plan_velocity_qp(PathGrid.uniform(3, 0.1), _limits(3))

    def test_plan_fields(self):
        grid, limits = _drop()
        plan = plan_velocity_qp(grid, limits, boundary=Boundary(1.0))
        assert plan.method == "pseudo-jerk-qp"
        assert plan.v_f is None
        assert np.all(plan.velocity <= limits.v_max + 1e-12)
        assert np.all(plan.acceleration <= 1.0) and np.all(plan.acceleration >= -1.0)
        assert plan.objective == pytest.approx(-plan.state.b.sum())

    def test_heavier_weight_is_smoother_and_slower(self):
        grid, limits = _drop()
        rough, smooth = [], []
        objectives = []
        for w in (1.0, 10.0, 100.0, 1000.0):
            plan = plan_velocity_qp(grid, limits, boundary=Boundary(1.0),
                                    config=PseudoJerkConfig(w))
            rough.append(float(np.sum(pseudo_jerk(plan.state, grid) ** 2)))
            objectives.append(plan.objective)
        assert all(b <= a * (1 + 1e-4) + 1e-6 for a, b in zip(rough, rough[1:]))
        assert all(b >= a - 1e-5 for a, b in zip(objectives, objectives[1:]))


def test_admm_residual_trend_on_corpus(capsys):
    """Residual after 10k iterations is below the residual after k on most corpus QPs."""
    from corpus import POLICY, random_scenario
    from jerkplan.planner import obstacle_limit
    from jerkplan.solvers import SolverConfig

    rng = np.random.default_rng(3)
    better = total = 0
    for _ in range(20):
        grid, limits, tracks, boundary = random_scenario(rng, n_range=(10, 80))
        v_hat = obstacle_limit(grid, limits, tracks, POLICY)
        qp = assemble_pseudo_jerk_qp(grid, limits.replace(v_max=v_hat), PseudoJerkConfig(),
                                     boundary)
        for k in (50, 200):
            short = solve_qp(qp, SolverConfig(max_iterations=k))
            long = solve_qp(qp, SolverConfig(max_iterations=10 * k))
            total += 1
            better += (np.hypot(long.primal_residual, long.dual_residual)
                       <= np.hypot(short.primal_residual, short.dual_residual))
    with capsys.disabled():
        print(f"\nADMM residual decreased from k to 10k iterations in {better}/{total} cases")
    assert better >= 0.9 * total
