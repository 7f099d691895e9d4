import numpy as np
import pytest

from cfmanip.config import Config
from cfmanip.core.contact_assembly import ContactJacobianBlock, LinearizedSystem, stack_contact_system
from cfmanip.errors import InvalidArgumentError
from cfmanip.solvers import steppers
from cfmanip.solvers.steppers import (HARD_MAX, SOFTPLUS, CfParams, DualOracleConfig, cf_step, cf_step_extended,
                                      decompose_contact_forces, dual_complementarity_residual, dual_operator,
                                      qp_step, regularized_dual_solve)


def no_contact(n_v=1):
    return stack_contact_system([], [], [], n_v=n_v)


def single_row(phi=0.0):
    return stack_contact_system([ContactJacobianBlock(np.array([1.0]), np.zeros((1, 1)))], [phi], [0.5])


# ==================== PAS FERMÉ ====================

def test_cf_free_fall_without_contact(vertical_system):
    result = cf_step(vertical_system, no_contact(), CfParams())
    np.testing.assert_allclose(result.v_plus, [-0.01962])
    assert result.beta_plus.size == 0
    assert result.forces == ()


def test_cf_resting_contact(vertical_system, ground_contact):
    result = cf_step(vertical_system, ground_contact(), CfParams(k_diag=1.0))
    np.testing.assert_allclose(result.beta_plus / vertical_system.h, 0.001962)
    np.testing.assert_allclose(result.v_plus, [-0.0180504])
    normal, friction = result.forces[0]
    np.testing.assert_allclose(normal, [0, 0, 4 * 0.0001962])
    np.testing.assert_allclose(friction, 0.0, atol=1e-18)


def test_cf_distant_contact_is_inactive(vertical_system, ground_contact):
    result = cf_step(vertical_system, ground_contact(phi=1.0), CfParams())
    np.testing.assert_allclose(result.beta_plus, 0.0)
    np.testing.assert_allclose(result.v_plus, [-0.01962])


def test_cf_softplus_bounds_hard_max(vertical_system, ground_contact):
    cs = ground_contact()
    hard = cf_step(vertical_system, cs, CfParams())
    for gamma in (100.0, 1000.0, 1e5):
        soft = cf_step(vertical_system, cs, CfParams(gamma=gamma, mode=SOFTPLUS))
        gap = (soft.beta_plus - hard.beta_plus) / vertical_system.h
        assert np.all(gap >= 0.0)
        assert np.all(gap <= np.log(2.0) / gamma + 1e-15)


def test_cf_stiffness_vector(vertical_system, ground_contact):
    k = np.array([1.0, 2.0, 0.5, 1.0])
    result = cf_step(vertical_system, ground_contact(), CfParams(k_diag=k))
    np.testing.assert_allclose(result.beta_plus / vertical_system.h, 0.001962 * k)


def test_cf_rejects_column_mismatch(vertical_system):
    with pytest.raises(InvalidArgumentError):
        cf_step(vertical_system, no_contact(n_v=2), CfParams())


# ==================== EXTENSION AMORTIE ====================

def test_extended_without_damping_is_identical(vertical_system, ground_contact):
    cs = ground_contact()
    base = cf_step(vertical_system, cs, CfParams())
    extended = cf_step_extended(vertical_system, cs, CfParams(), 0.0)
    np.testing.assert_array_equal(extended.beta_plus, base.beta_plus)
    np.testing.assert_array_equal(extended.v_plus, base.v_plus)


def test_extended_damping_resists_approach(vertical_system, ground_contact):
    cs = ground_contact()
    base = cf_step(vertical_system, cs, CfParams())
    damped = cf_step_extended(vertical_system, cs, CfParams(), 0.5)
    assert np.all(damped.beta_plus > base.beta_plus)
    assert damped.v_plus[0] > base.v_plus[0]


def test_extended_rejects_negative_damping(vertical_system, ground_contact):
    with pytest.raises(InvalidArgumentError):
        cf_step_extended(vertical_system, ground_contact(), CfParams(), -1.0)


# ==================== QP ====================

def test_qp_stops_penetration(vertical_system, ground_contact):
    result = qp_step(vertical_system, ground_contact())
    assert result.v_plus[0] == pytest.approx(0.0, abs=1e-12)
    assert result.beta_plus.sum() == pytest.approx(0.00981, rel=1e-9)
    assert max(result.info['residuals'].values()) < 1e-10


def test_qp_free_fall_without_contact(vertical_system):
    result = qp_step(vertical_system, no_contact())
    np.testing.assert_allclose(result.v_plus, [-0.01962])


def test_qp_recovers_from_penetration(vertical_system, ground_contact):
    result = qp_step(vertical_system, ground_contact(phi=-0.001))
    assert result.v_plus[0] == pytest.approx(0.01, abs=1e-12)


# ==================== DÉCOMPOSITION ====================

def test_decompose_forces():
    normals = np.array([[0.0, 0.0, 1.0]])
    tangents = np.array([[[1.0, 0, 0], [0, 1.0, 0], [-1.0, 0, 0], [0, -1.0, 0]]])
    ((normal, friction),) = decompose_contact_forces([0.1, 0.2, 0.3, 0.4], normals, tangents, [0.5])
    np.testing.assert_allclose(normal, [0, 0, 1.0])
    np.testing.assert_allclose(friction, [-0.1, -0.1, 0.0])


def test_decompose_single_direction_is_exact():
    normals = np.array([[0.0, 0.0, 1.0]])
    tangents = np.array([[[1.0, 0, 0], [0, 1.0, 0], [-1.0, 0, 0], [0, -1.0, 0]]])
    ((normal, friction),) = decompose_contact_forces([1.0, 0.0, 0.0, 0.0], normals, tangents, [0.5])
    np.testing.assert_array_equal(normal, [0.0, 0.0, 1.0])
    np.testing.assert_array_equal(friction, [0.5, 0.0, 0.0])


def test_decompose_equal_beta_cancels_friction():
    normals = np.array([[0.0, 0.0, 1.0]])
    tangents = np.array([[[1.0, 0, 0], [0, 1.0, 0], [-1.0, 0, 0], [0, -1.0, 0]]])
    ((_, friction),) = decompose_contact_forces(np.full(4, 0.25), normals, tangents, [0.8])
    np.testing.assert_allclose(friction, 0.0, atol=1e-15)


def test_decompose_rejects_negative_beta():
    with pytest.raises(InvalidArgumentError):
        decompose_contact_forces([-0.1, 0.1], [[0, 0, 1]], [[[1, 0, 0], [-1, 0, 0]]], [0.5])


def test_decompose_empty():
    assert decompose_contact_forces(np.zeros(0), np.zeros((0, 3)), np.zeros((0, 4, 3)), []) == ()


# ==================== ORACLE DUAL ====================

def test_dual_operator_scalar(vertical_system):
    a_mat, c_vec = dual_operator(vertical_system, single_row())
    np.testing.assert_allclose(a_mat, [[0.02]])
    np.testing.assert_allclose(c_vec, [-0.001962])


def test_regularized_dual_matches_closed_form(vertical_system):
    cs = single_row()
    beta_dual = regularized_dual_solve(vertical_system, cs, DualOracleConfig(r_diag=1e-6))
    beta_cf = cf_step(vertical_system, cs, CfParams(k_diag=1.0 / (0.02 + 1e-6))).beta_plus
    np.testing.assert_allclose(beta_dual, 0.1 * 0.001962 / 0.020001, rtol=1e-10)
    np.testing.assert_allclose(beta_cf, beta_dual, rtol=1e-10)


def test_regularized_dual_complementarity(vertical_system, ground_contact):
    cs = ground_contact(phi=-0.0005)
    cfg = DualOracleConfig()
    beta = regularized_dual_solve(vertical_system, cs, cfg)
    product, violation = dual_complementarity_residual(vertical_system, cs, beta, cfg.r_rows(cs.n_rows))
    assert product < 1e-12
    assert violation < 1e-10


def test_regularized_dual_inactive_contact(vertical_system):
    np.testing.assert_allclose(regularized_dual_solve(vertical_system, single_row(phi=1.0)), 0.0)


def test_dual_config_default_follows_config():
    assert DualOracleConfig().r_diag == Config.DUAL_REGULARIZATION


def test_qp_step_retries_with_jitter(monkeypatch, vertical_system, ground_contact):
    hessians = []
    original = steppers.solve_qp

    def flaky(hessian, *args):
        hessians.append(np.array(hessian))
        if len(hessians) == 1:
            raise np.linalg.LinAlgError('hessienne singulière')
        return original(hessian, *args)

    monkeypatch.setattr(steppers, 'solve_qp', flaky)
    qp_step(vertical_system, ground_contact(phi=-0.0005), jitter=0.25)
    np.testing.assert_allclose(hessians[1] - hessians[0], [[0.25]])


def test_dual_config_rejects_bad_regularization():
    with pytest.raises(InvalidArgumentError):
        DualOracleConfig(r_diag=0.0).r_rows(2)
    with pytest.raises(InvalidArgumentError):
        DualOracleConfig(r_diag=np.ones(3)).r_rows(2)


# ==================== PARAMÈTRES ====================

def test_cf_params_validation():
    assert CfParams().mode == HARD_MAX
    with pytest.raises(InvalidArgumentError):
        CfParams(mode='relu')
    with pytest.raises(InvalidArgumentError):
        CfParams(gamma=0.0)
    with pytest.raises(InvalidArgumentError):
        CfParams(k_diag=-1.0)
    with pytest.raises(InvalidArgumentError):
        CfParams(k_diag=np.ones(3)).k_rows(4)


def test_spd_coupled_system(rng):
    g = rng.normal(size=(3, 3))
    system = LinearizedSystem(g @ g.T + 3 * np.eye(3), rng.normal(size=3), 0.05)
    cs = stack_contact_system([ContactJacobianBlock(rng.normal(size=3), rng.normal(size=(2, 3)))], [0.0], [0.3])
    result = cf_step(system, cs, CfParams(k_diag=2.0))
    lhs = system.q_mat @ (system.h * result.v_plus)
    rhs = system.b_vec + cs.j_tilde.T @ result.beta_plus / system.h
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)
