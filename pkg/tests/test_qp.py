import numpy as np
import pytest

from cfmanip.errors import InfeasibleError, InvalidArgumentError, NonConvergenceError
from cfmanip.solvers.qp import kkt_residuals, lcp_oracle, solve_qp


# ==================== QP ====================

def test_unconstrained_minimizer():
    solution = solve_qp(np.eye(2), np.array([-1.0, -1.0]))
    np.testing.assert_allclose(solution.x, [1.0, 1.0])
    assert solution.active_set == ()


def test_single_budget_constraint():
    solution = solve_qp(np.eye(2), np.array([-1.0, -1.0]), np.array([[-1.0, -1.0]]), np.array([-1.0]))
    np.testing.assert_allclose(solution.x, [0.5, 0.5], atol=1e-12)
    np.testing.assert_allclose(solution.multipliers, [0.5], atol=1e-12)
    assert max(solution.residuals.values()) < 1e-12


def test_lower_bound_active():
    solution = solve_qp(np.array([[2.0]]), np.zeros(1), np.array([[1.0]]), np.array([2.0]))
    assert solution.x[0] == pytest.approx(2.0)
    assert solution.multipliers[0] == pytest.approx(4.0)


def test_inactive_constraint_has_zero_multiplier():
    solution = solve_qp(np.eye(2), np.array([-1.0, 0.0]), np.array([[0.0, 1.0]]), np.array([-5.0]))
    np.testing.assert_allclose(solution.x, [1.0, 0.0])
    np.testing.assert_allclose(solution.multipliers, [0.0])


def test_random_problems_satisfy_kkt(rng):
    for _ in range(30):
        n, m = 6, 8
        g = rng.normal(size=(n, n))
        hessian = g @ g.T + np.eye(n)
        a_mat = rng.normal(size=(m, n))
        # x0 strictement admissible : les instances sont toujours faisables
        x0 = rng.normal(size=n)
        lb = a_mat @ x0 - rng.uniform(0.0, 1.0, size=m)
        gradient = rng.normal(size=n)
        solution = solve_qp(hessian, gradient, a_mat, lb)
        res = kkt_residuals(hessian, gradient, a_mat, lb, solution.x, solution.multipliers)
        assert max(res.values()) < 1e-8
        assert np.all(solution.multipliers >= 0)
        assert np.all(a_mat @ solution.x >= lb - 1e-9)


def test_random_contradictory_half_spaces_raise_infeasible(rng):
    for _ in range(5):
        row = rng.normal(size=(1, 6))
        a_mat = np.vstack([row, -row])
        with pytest.raises(InfeasibleError):
            solve_qp(np.eye(6), rng.normal(size=6), a_mat, np.array([1.0, 0.0]))


def test_iteration_cap_raises_non_convergence():
    with pytest.raises(NonConvergenceError) as info:
        solve_qp(np.eye(2), np.zeros(2), np.eye(2), np.array([1.0, 1.0]), max_iter=1)
    assert 'primal' in info.value.residuals


def test_incompatible_constraints_raise_infeasible():
    with pytest.raises(InfeasibleError):
        solve_qp(np.eye(1), np.zeros(1), np.array([[1.0], [-1.0]]), np.array([1.0, 0.0]))


def test_non_positive_hessian_raises_linalg_error():
    with pytest.raises(np.linalg.LinAlgError):
        solve_qp(np.diag([1.0, -1.0]), np.zeros(2))


def test_dimension_mismatch_rejected():
    with pytest.raises(InvalidArgumentError):
        solve_qp(np.eye(2), np.zeros(2), np.eye(2), np.zeros(3))


# ==================== LCP ====================

def test_lcp_interior_solution():
    z = lcp_oracle([[2.0, 1.0], [1.0, 2.0]], [-1.0, -1.0])
    np.testing.assert_allclose(z, [1 / 3, 1 / 3])


def test_lcp_zero_solution():
    np.testing.assert_allclose(lcp_oracle([[2.0, 1.0], [1.0, 2.0]], [1.0, 1.0]), [0.0, 0.0])


def test_lcp_scalar():
    np.testing.assert_allclose(lcp_oracle([[1.0]], [-2.0]), [2.0])


def test_lcp_mixed_support():
    z = lcp_oracle([[1.0, 0.0], [0.0, 1.0]], [-1.0, 3.0])
    np.testing.assert_allclose(z, [1.0, 0.0])


def test_lcp_dimension_cap():
    with pytest.raises(InvalidArgumentError):
        lcp_oracle(np.eye(21), np.zeros(21))


def test_lcp_matches_dual_qp(rng):
    for _ in range(10):
        g = rng.normal(size=(5, 5))
        m_mat = g @ g.T + 0.5 * np.eye(5)
        q_vec = rng.normal(size=5)
        z = lcp_oracle(m_mat, q_vec)
        x = solve_qp(m_mat, q_vec, np.eye(5), np.zeros(5)).x
        np.testing.assert_allclose(z, x, atol=1e-8)
