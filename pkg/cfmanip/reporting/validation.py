"""
✅ SUITES DE VALIDATION
Propriétés vérifiées sur des instances aléatoires à graine fixe : exactitude
de la forme fermée, complémentarité modifiée, cône de Coulomb, accord QP/LCP,
oracle dual régularisé, convergence du softplus et gradient du MPC.

Les steppers sont appelés via le module `steppers` afin qu'une version
substituée (test de sensibilité) soit effectivement exercée.
"""

import logging
from dataclasses import dataclass

import numpy as np

from ..control import mpc
from ..control.costs import CostConfig
from ..core.collision import tangent_basis
from ..core.contact_assembly import ContactJacobianBlock, LinearizedSystem, stack_contact_system
from ..scenarios.scenes import build_scene
from ..scenarios.tasks import sample_task
from ..solvers import qp as qp_solvers
from ..solvers import steppers

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SuiteResult:
    name: str
    worst: float
    tolerance: float
    instances: int

    @property
    def passed(self):
        return bool(np.isfinite(self.worst) and self.worst <= self.tolerance)

    def line(self):
        status = 'OK   ' if self.passed else 'ÉCHEC'
        return (f"{status} {self.name:<26} résidu max {self.worst:.3e} "
                f"(tolérance {self.tolerance:.0e}, {self.instances} instances)")


# ==================== INSTANCES ALÉATOIRES ====================

def random_spd(rng, n, shift=None):
    g = rng.normal(size=(n, n))
    return g @ g.T + (n if shift is None else shift) * np.eye(n)


def random_contact_system(rng, n_v, n_c, n_d, scale=1.0, with_geometry=True):
    """J̃, φ̃ aléatoires ; normales et bases tangentielles cohérentes si demandé"""
    blocks, normals, tangents = [], [], []
    for _ in range(n_c):
        blocks.append(ContactJacobianBlock(scale * rng.normal(size=n_v), scale * rng.normal(size=(n_d, n_v))))
        normal = rng.normal(size=3)
        normal /= np.linalg.norm(normal)
        normals.append(normal)
        if with_geometry:
            tangents.append(tangent_basis(normal, n_d))
    gaps = rng.uniform(-0.01, 0.01, size=n_c)
    mu = rng.uniform(0.1, 1.0, size=n_c)
    if not with_geometry:
        return stack_contact_system(blocks, gaps, mu, n_v=n_v)
    return stack_contact_system(blocks, gaps, mu, n_v=n_v, normals=np.array(normals), tangents=np.array(tangents))


def random_instance(rng, n_v=12, n_c=None, n_d=4, h=0.1, shift=None, scale=1.0):
    """(LinearizedSystem, ContactSystem) aléatoires ; n_c·n_d ≤ n_v par défaut"""
    n_c = n_c if n_c is not None else int(rng.integers(1, max(n_v // n_d, 1) + 1))
    system = LinearizedSystem(random_spd(rng, n_v, shift), rng.normal(size=n_v), h)
    return system, random_contact_system(rng, n_v, n_c, n_d, scale)


# ==================== SUITES ====================

def closed_form_exactness(rng, count):
    """Un contact, une direction, K = (J̃Q⁻¹J̃ᵀ + R)⁻¹ : forme fermée = oracle dual"""
    worst = 0.0
    oracle = steppers.DualOracleConfig()
    for _ in range(count):
        n_v = int(rng.integers(2, 8))
        system = LinearizedSystem(random_spd(rng, n_v), rng.normal(size=n_v), rng.uniform(0.001, 0.1))
        cs = random_contact_system(rng, n_v, 1, 1, with_geometry=False)
        a_mat, _ = steppers.dual_operator(system, cs)
        k = 1.0 / (a_mat[0, 0] + oracle.r_diag)
        beta_cf = steppers.cf_step(system, cs, steppers.CfParams(k_diag=k)).beta_plus
        beta_dual = steppers.regularized_dual_solve(system, cs, oracle)
        worst = max(worst, float(np.max(np.abs(beta_cf - beta_dual)) / (1.0 + np.max(np.abs(beta_dual)))))
    return SuiteResult('closed_form_exactness', worst, 1e-8, count)


def modified_complementarity(rng, count):
    """0 ≤ β ⊥ (hK)⁻¹β + J̃Q⁻¹b + φ̃ ≥ 0 pour le stepper hard-max"""
    worst = 0.0
    for _ in range(count):
        system, cs = random_instance(rng, n_v=int(rng.integers(3, 13)), n_c=int(rng.integers(1, 5)))
        k = rng.uniform(0.1, 10.0, size=cs.n_rows)
        beta = steppers.cf_step(system, cs, steppers.CfParams(k_diag=k)).beta_plus
        _, c_vec = steppers.dual_operator(system, cs)
        slack = beta / (system.h * k) + c_vec
        worst = max(worst, float(np.max(np.abs(beta * slack))), float(np.max(-slack)), float(np.max(-beta)))
    return SuiteResult('modified_complementarity', worst, 1e-12, count)


def primal_dual_consistency(rng, count):
    """Q(hv⁺) = b + J̃ᵀβ⁺/h pour le stepper fermé"""
    worst = 0.0
    for _ in range(count):
        system, cs = random_instance(rng)
        result = steppers.cf_step(system, cs, steppers.CfParams())
        lhs = system.q_mat @ (system.h * result.v_plus)
        rhs = system.b_vec + cs.j_tilde.T @ result.beta_plus / system.h
        worst = max(worst, float(np.max(np.abs(lhs - rhs)) / (1.0 + np.max(np.abs(rhs)))))
    return SuiteResult('primal_dual_consistency', worst, 1e-10, count)


def coulomb_cone(rng, count):
    """μ‖fⁿ‖ ≥ ‖fᵈ‖ pour chaque contact des trois steppers"""
    worst = 0.0
    for _ in range(count):
        system, cs = random_instance(rng)
        results = (steppers.cf_step(system, cs, steppers.CfParams()),
                   steppers.cf_step_extended(system, cs, steppers.CfParams(), 0.3),
                   steppers.qp_step(system, cs))
        for result in results:
            for (normal, friction), mu in zip(result.forces, cs.mu):
                worst = max(worst, float(np.linalg.norm(friction) - mu * np.linalg.norm(normal)))
    return SuiteResult('coulomb_cone', worst, 1e-12, count)


def qp_vs_lcp(rng, count):
    """Vitesses de qp_step = vitesses de l'oracle LCP ; résidus KKT du QP"""
    worst_v = worst_kkt = 0.0
    for _ in range(count):
        system, cs = random_instance(rng, n_v=12)
        result = steppers.qp_step(system, cs)
        a_mat, c_vec = steppers.dual_operator(system, cs)
        z = qp_solvers.lcp_oracle(a_mat, c_vec)
        v_lcp = system.solve(system.b_vec + cs.j_tilde.T @ z) / system.h
        worst_v = max(worst_v, float(np.max(np.abs(result.v_plus - v_lcp)) / (1.0 + np.max(np.abs(v_lcp)))))
        worst_kkt = max(worst_kkt, max(result.info['residuals'].values()))
    return [SuiteResult('qp_vs_lcp', worst_v, 1e-6, count),
            SuiteResult('qp_kkt_residuals', worst_kkt, 1e-8, count)]


def dual_oracle_agreement(rng, count):
    """L'oracle dual régularisé vérifie sa complémentarité"""
    worst = 0.0
    cfg = steppers.DualOracleConfig()
    for _ in range(count):
        system, cs = random_instance(rng)
        beta = steppers.regularized_dual_solve(system, cs, cfg)
        product, violation = steppers.dual_complementarity_residual(system, cs, beta, cfg.r_rows(cs.n_rows))
        worst = max(worst, product, violation)
    return SuiteResult('dual_oracle_agreement', worst, 1e-8, count)


def softplus_convergence(rng, count):
    """
    Écart softplus / hard-max quand γ double de 100 à 12800 : décroissance
    composante par composante de l'écart sur λ, borne ln2/γ et écart final en v⁺.
    """
    gammas = 100.0 * 2.0 ** np.arange(8)
    worst = 0.0
    for _ in range(count):
        system, cs = random_instance(rng, shift=50.0)
        hard = steppers.cf_step(system, cs, steppers.CfParams())
        previous = None
        for gamma in gammas:
            soft = steppers.cf_step(system, cs, steppers.CfParams(gamma=gamma, mode=steppers.SOFTPLUS))
            gap = (soft.beta_plus - hard.beta_plus) / system.h
            worst = max(worst, float(np.max(-gap)), float(np.max(gap)) - np.log(2.0) / gamma)
            if previous is not None:
                worst = max(worst, float(np.max(gap - previous)) - 1e-15)
            previous = gap
        worst = max(worst, float(np.linalg.norm(soft.v_plus - hard.v_plus)) - 1e-4)
    # toutes les grandeurs ci-dessus sont des violations : 0 au mieux
    return SuiteResult('softplus_convergence', max(worst, 0.0), 1e-12, count)


def random_fingertip_problem(rng, seed):
    """Problème MPC à bouts de doigts avec contacts proches et commandes aléatoires"""
    scene = build_scene('fingertips_box', seed=seed)
    initial, task = sample_task('rotation', seed)
    q, _ = scene.initial_state(initial)
    for block in scene.layout.blocks:
        if block.actuated:
            q[block.q_slice] += rng.normal(0.0, 0.004, size=block.nq)
    cfg = mpc.MpcConfig(horizon=3)
    prob = mpc.build_problem(q, scene, task, cfg, CostConfig())
    lb, ub = cfg.bounds(prob.n_u)
    return prob, rng.uniform(lb, ub)


def gradient_check(rng, count, eps=1e-6):
    """Gradient exact du coût MPC contre différences finies centrées"""
    worst = 0.0
    for i in range(count):
        prob, u_seq = random_fingertip_problem(rng, seed=i)
        grad = mpc.objective_gradient(prob, u_seq)
        fd = np.zeros_like(u_seq)
        for idx in np.ndindex(u_seq.shape):
            up, down = u_seq.copy(), u_seq.copy()
            up[idx] += eps
            down[idx] -= eps
            fd[idx] = (mpc.rollout(prob, up)[1] - mpc.rollout(prob, down)[1]) / (2.0 * eps)
        worst = max(worst, float(np.linalg.norm(grad - fd) / max(np.linalg.norm(fd), 1e-8)))
    return SuiteResult('gradient_check', worst, 1e-4, count)


# ==================== ENSEMBLE ====================

FULL_COUNTS = {
    'closed_form_exactness': 1000,
    'modified_complementarity': 10000,
    'primal_dual_consistency': 1000,
    'coulomb_cone': 10000,
    'qp_vs_lcp': 100,
    'dual_oracle_agreement': 200,
    'softplus_convergence': 100,
    'gradient_check': 100,
}

QUICK_COUNTS = {
    'closed_form_exactness': 100,
    'modified_complementarity': 500,
    'primal_dual_consistency': 100,
    'coulomb_cone': 300,
    'qp_vs_lcp': 10,
    'dual_oracle_agreement': 20,
    'softplus_convergence': 20,
    'gradient_check': 5,
}

SUITES = {
    'closed_form_exactness': closed_form_exactness,
    'modified_complementarity': modified_complementarity,
    'primal_dual_consistency': primal_dual_consistency,
    'coulomb_cone': coulomb_cone,
    'qp_vs_lcp': qp_vs_lcp,
    'dual_oracle_agreement': dual_oracle_agreement,
    'softplus_convergence': softplus_convergence,
    'gradient_check': gradient_check,
}


def run_validation(quick=False, seed=0, only=None):
    """
    Exécute les suites (graine fixe par suite).

    Returns:
        liste de SuiteResult, une par propriété vérifiée
    """
    counts = QUICK_COUNTS if quick else FULL_COUNTS
    results = []
    for index, (name, suite) in enumerate(SUITES.items()):
        if only and name not in only:
            continue
        rng = np.random.default_rng(seed + index)
        outcome = suite(rng, counts[name])
        for result in (outcome if isinstance(outcome, list) else [outcome]):
            logger.info(result.line())
            results.append(result)
    return results
