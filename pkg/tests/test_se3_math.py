import numpy as np
import pytest

from cfmanip.core.layout import SystemLayout
from cfmanip.core.se3_math import (Pose, SpdSolver, integrate_displacement, integrate_pose, quat_angle,
                                   quat_error, quat_exp, quat_exp_jacobian, quat_from_axis_angle,
                                   quat_from_rpy, quat_mul, quat_to_matrix, softplus, softplus_grad)
from cfmanip.errors import InvalidArgumentError

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])
QUARTER_Z = np.array([np.sqrt(0.5), 0.0, 0.0, np.sqrt(0.5)])


# ==================== ERREURS D'ORIENTATION ====================

def test_quat_error_identical_is_zero():
    assert quat_error(IDENTITY, IDENTITY) == 0.0


def test_quat_error_double_cover():
    assert quat_error(QUARTER_Z, -QUARTER_Z) == 0.0


def test_quat_error_quarter_turn():
    assert quat_error(IDENTITY, QUARTER_Z) == pytest.approx(0.5, abs=1e-12)


def test_quat_angle_examples():
    assert quat_angle(IDENTITY, IDENTITY) == 0.0
    assert quat_angle(IDENTITY, QUARTER_Z) == pytest.approx(np.pi / 2, abs=1e-9)
    assert quat_angle(QUARTER_Z, -QUARTER_Z) == 0.0


def test_non_unit_quaternion_rejected():
    with pytest.raises(InvalidArgumentError):
        quat_error(IDENTITY, np.array([1.0, 0.0, 0.0, 1e-2]))
    with pytest.raises(InvalidArgumentError):
        quat_angle(np.array([2.0, 0.0, 0.0, 0.0]), IDENTITY)


def test_quat_error_sign_invariant(rng):
    for _ in range(20):
        q1 = rng.normal(size=4)
        q2 = rng.normal(size=4)
        q1 /= np.linalg.norm(q1)
        q2 /= np.linalg.norm(q2)
        value = quat_error(q1, q2)
        assert 0.0 <= value <= 1.0
        assert quat_error(-q1, q2) == pytest.approx(value, abs=1e-15)
        assert quat_error(q1, -q2) == pytest.approx(value, abs=1e-15)


# ==================== INTÉGRATION ====================

def test_integrate_zero_velocity_is_fixed_point():
    q = np.concatenate([[0.1, -0.2, 0.3], QUARTER_Z])
    np.testing.assert_allclose(integrate_pose(q, np.zeros(6), 0.01), q, atol=1e-15)


def test_integrate_linear_velocity():
    q = np.concatenate([np.zeros(3), IDENTITY])
    q_next = integrate_pose(q, np.array([1.0, 0, 0, 0, 0, 0]), 0.1)
    np.testing.assert_allclose(q_next[:3], [0.1, 0.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(q_next[3:], IDENTITY, atol=1e-15)


def test_integrate_angular_velocity_quarter_turn():
    q = np.concatenate([np.zeros(3), IDENTITY])
    q_next = integrate_pose(q, np.array([0, 0, 0, 0, 0, np.pi]), 0.5)
    np.testing.assert_allclose(q_next[3:], QUARTER_Z, atol=1e-12)


def test_integrate_robot_coordinates_additive():
    q = np.concatenate([np.zeros(3), IDENTITY, [0.5, -0.5]])
    v = np.concatenate([np.zeros(6), [1.0, 2.0]])
    q_next = integrate_pose(q, v, 0.1)
    np.testing.assert_allclose(q_next[7:], [0.6, -0.3])


def test_integrate_rejects_non_positive_step():
    with pytest.raises(InvalidArgumentError):
        integrate_pose(np.concatenate([np.zeros(3), IDENTITY]), np.zeros(6), 0.0)


def test_integrate_displacement_world_frame_rotation():
    layout = SystemLayout.single_object(0)
    q = np.concatenate([np.zeros(3), QUARTER_Z])
    q_next = integrate_displacement(q, np.array([0, 0, 0, 0.2, 0, 0]), layout)
    expected = quat_mul(quat_exp([0.2, 0, 0]), QUARTER_Z)
    np.testing.assert_allclose(q_next[3:], expected / np.linalg.norm(expected), atol=1e-14)


# ==================== CONVERSIONS ====================

def test_quat_exp_jacobian_matches_finite_differences(rng):
    for rotvec in (rng.normal(size=3), 1e-6 * rng.normal(size=3), np.zeros(3)):
        jac = quat_exp_jacobian(rotvec)
        fd = np.zeros((4, 3))
        for k in range(3):
            step = np.zeros(3)
            step[k] = 1e-6
            fd[:, k] = (quat_exp(rotvec + step) - quat_exp(rotvec - step)) / 2e-6
        np.testing.assert_allclose(jac, fd, atol=1e-8)


def test_rpy_yaw_only_matches_axis_angle():
    np.testing.assert_allclose(quat_from_rpy(0.0, 0.0, np.pi / 2), QUARTER_Z, atol=1e-12)
    np.testing.assert_allclose(quat_from_axis_angle((0, 0, 2.0), np.pi / 2), QUARTER_Z, atol=1e-12)


def test_rotation_matrix_orthonormal(rng):
    q = rng.normal(size=4)
    rot = quat_to_matrix(q / np.linalg.norm(q))
    np.testing.assert_allclose(rot @ rot.T, np.eye(3), atol=1e-12)
    assert np.linalg.det(rot) == pytest.approx(1.0)


def test_pose_compose_and_to_local():
    outer = Pose((1.0, 0.0, 0.0), QUARTER_Z)
    inner = Pose((1.0, 0.0, 0.0))
    composed = outer.compose(inner)
    np.testing.assert_allclose(composed.position, [1.0, 1.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(outer.to_local(outer.transform_point([0.3, -0.2, 0.1])), [0.3, -0.2, 0.1])


def test_pose_rejects_non_unit_orientation():
    with pytest.raises(InvalidArgumentError):
        Pose((0, 0, 0), (1.0, 1.0, 0.0, 0.0))


# ==================== SOFTPLUS ====================

def test_softplus_examples():
    assert softplus(0.0, 100) == pytest.approx(np.log(2.0) / 100, abs=1e-12)
    assert softplus(1.0, 100) == pytest.approx(1.0, abs=1e-9)
    assert softplus(-1.0, 100) == pytest.approx(0.0, abs=1e-9)


def test_softplus_no_overflow_and_bounds():
    x = np.linspace(-50.0, 50.0, 2001)
    value = softplus(x, 1e4)
    assert np.all(np.isfinite(value))
    assert np.all(value >= np.maximum(x, 0.0))
    assert np.all(value <= np.maximum(x, 0.0) + np.log(2.0) / 1e4 + 1e-15)
    assert np.all(np.diff(value) >= 0.0)


def test_softplus_keeps_precision_far_from_the_kink():
    x = np.linspace(0.5, 50.0, 100)
    np.testing.assert_array_equal(softplus(x, 1e4), x)
    assert softplus(0.1, 100) >= 0.1
    assert softplus(-0.01, 1e4) == pytest.approx(np.exp(-100.0) / 1e4, rel=1e-12)


def test_softplus_gradient_is_sigmoid():
    assert softplus_grad(0.0, 100) == pytest.approx(0.5)
    x = np.array([-0.01, 0.003, 0.02])
    fd = (softplus(x + 1e-7, 100) - softplus(x - 1e-7, 100)) / 2e-7
    np.testing.assert_allclose(softplus_grad(x, 100), fd, rtol=1e-6)


def test_softplus_rejects_non_positive_gamma():
    with pytest.raises(InvalidArgumentError):
        softplus(0.0, 0.0)


# ==================== SOLVEUR SPD ====================

def test_spd_solver_diagonal_and_dense(rng):
    diag = SpdSolver(np.diag([2.0, 4.0]))
    assert diag.is_diagonal
    np.testing.assert_allclose(diag.solve(np.array([2.0, 2.0])), [1.0, 0.5])

    g = rng.normal(size=(5, 5))
    matrix = g @ g.T + 5 * np.eye(5)
    dense = SpdSolver(matrix)
    rhs = rng.normal(size=5)
    assert not dense.is_diagonal
    np.testing.assert_allclose(matrix @ dense.solve(rhs), rhs, atol=1e-12)


def test_spd_solver_rejects_non_positive_diagonal():
    with pytest.raises(np.linalg.LinAlgError):
        SpdSolver(np.diag([1.0, 0.0]))
