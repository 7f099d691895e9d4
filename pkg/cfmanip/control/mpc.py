"""
🎯 MPC IMPLICITE EN CONTACT SANS COMPLÉMENTARITÉ
Prédiction à géométrie de contact figée, gradients par accumulation inverse,
descente de gradient projetée et politique à horizon glissant.
"""

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from ..core.collision import detect_contacts
from ..core.contact_assembly import assemble_quasi_dynamic, build_contact_system
from ..core.se3_math import (integrate_displacement, quat_exp, quat_exp_jacobian, quat_left_matrix,
                             quat_mul, quat_right_matrix, softplus_grad)
from ..core.layout import FREE
from ..errors import InvalidArgumentError, UnsupportedModeError
from ..solvers.steppers import SOFTPLUS, CfParams
from .costs import CostConfig, CostGeometry, TaskSpec, final_cost, final_cost_grad, path_cost, path_cost_grad

logger = logging.getLogger(__name__)

ARMIJO = 1e-4
MAX_HALVINGS = 30

__all__ = ['MpcConfig', 'MpcProblem', 'TaskSpec', 'OptimizeResult', 'PolicyResult', 'build_problem',
           'rollout', 'objective_gradient', 'optimize_controls', 'projected_gradient',
           'mpc_policy_step', 'shift_warm_start', 'success_check', 'SuccessTracker']


# ==================== CONFIGURATION ====================

@dataclass(frozen=True)
class MpcConfig:
    horizon: int = 4
    u_lb: object = -0.005
    u_ub: object = 0.005
    max_iter: int = 50
    tolerance: float = 1e-6
    rollout_cap: int = 2000
    success_window: int = 20
    initial_step: float = 1e-3

    def __post_init__(self):
        if self.horizon < 0:
            raise InvalidArgumentError(f"horizon négatif: {self.horizon}")
        if np.any(np.asarray(self.u_lb) >= np.asarray(self.u_ub)):
            raise InvalidArgumentError("bornes de commande vides")
        if self.success_window < 1:
            raise InvalidArgumentError("fenêtre de réussite < 1")

    @classmethod
    def from_config(cls, cfg, **overrides):
        values = dict(horizon=cfg.MPC_HORIZON, u_lb=-cfg.MPC_U_BOUND, u_ub=cfg.MPC_U_BOUND,
                      max_iter=cfg.MPC_MAX_ITER, tolerance=cfg.MPC_TOLERANCE,
                      rollout_cap=cfg.MPC_ROLLOUT_CAP, success_window=cfg.MPC_SUCCESS_WINDOW)
        values.update(overrides)
        return cls(**values)

    def bounds(self, n_u):
        """Bornes diffusées en tableaux (T, n_u)"""
        shape = (self.horizon, n_u)
        return (np.broadcast_to(np.asarray(self.u_lb, dtype=float), shape),
                np.broadcast_to(np.asarray(self.u_ub, dtype=float), shape))


@dataclass
class MpcProblem:
    """Problème d'une étape de politique : contacts figés en q₀, b(u) recalculé"""
    q0: np.ndarray
    contacts: object
    system: object
    params: object
    layout: object
    geometry: CostGeometry
    costs: CostConfig
    config: MpcConfig
    task: TaskSpec
    cf: CfParams = field(default_factory=lambda: CfParams(mode=SOFTPLUS))

    def __post_init__(self):
        self._k = self.cf.k_rows(self.contacts.n_rows)

    @property
    def n_u(self):
        return self.params.k_r.size

    def b_of(self, u):
        b_vec = self.system.b_vec.copy()
        b_vec[self.layout.robot_v_slice] += self.params.k_r * u
        return b_vec


def build_problem(q, scene, task, cfg, costs=None, cf=None):
    """Détection des contacts en q et gel de (J̃, φ̃)"""
    contacts = detect_contacts(scene.snapshot(q), scene.geometry)
    cs = build_contact_system(contacts, q, scene.layout)
    params = scene.quasi_params
    system = assemble_quasi_dynamic(q, np.zeros(params.k_r.size), params)
    cf = cf or CfParams(k_diag=scene.stiffness, gamma=scene.gamma, mode=SOFTPLUS)
    return MpcProblem(np.array(q, dtype=float), cs, system, params, scene.layout,
                      CostGeometry(scene.layout), costs or CostConfig(), cfg, task, cf)


# ==================== PRÉDICTION ====================

def _predict_step(prob, q, u):
    """Un pas fermé à contacts figés ; retourne (q⁺, déplacement h·v⁺, σ' des lignes)"""
    qinv_b = prob.system.solve(prob.b_of(u))
    cs = prob.contacts
    if cs.is_empty:
        return integrate_displacement(q, qinv_b, prob.layout), qinv_b, np.zeros(0)
    arg = -prob._k * (cs.j_tilde @ qinv_b + cs.phi_tilde)
    lam = prob.cf.activation(arg)
    d = qinv_b + prob.system.solve(cs.j_tilde.T @ lam)
    slope = softplus_grad(arg, prob.cf.gamma) if prob.cf.mode == SOFTPLUS else None
    return integrate_displacement(q, d, prob.layout), d, slope


def _forward(prob, u_seq):
    states = [prob.q0]
    steps = []
    total = 0.0
    for u in u_seq:
        total += path_cost(states[-1], u, prob.geometry, prob.costs)
        q_next, d, slope = _predict_step(prob, states[-1], u)
        steps.append((d, slope))
        states.append(q_next)
    total += final_cost(states[-1], prob.task, prob.geometry, prob.costs)
    return np.array(states), total, steps


def rollout(prob, u_seq):
    """
    Prédiction sur T pas.

    Returns:
        (états (T+1, n_q), coût total Σ coûts de trajet + coût final)
    """
    u_seq = np.asarray(u_seq, dtype=float).reshape(-1, prob.n_u)
    states, total, _ = _forward(prob, u_seq)
    return states, total


def _integration_vjp(q, d, g_next, layout):
    """Produit vecteur-jacobienne de q⁺ = q ⊕ d : (∂/∂q, ∂/∂d)"""
    g_q = np.array(g_next, dtype=float, copy=True)
    g_d = np.zeros(layout.nv)
    for block in layout.blocks:
        vs = block.v_slice
        if block.kind != FREE:
            g_d[vs] = g_next[block.q_slice]
            continue
        s = block.q_slice.start
        g_d[vs.start:vs.start + 3] = g_next[s:s + 3]
        rotvec = d[vs.start + 3:vs.stop]
        quat = q[s + 3:s + 7]
        exp_q = quat_exp(rotvec)
        raw = quat_mul(exp_q, quat)
        raw_norm = np.linalg.norm(raw)
        unit = raw / raw_norm
        g_unit = g_next[s + 3:s + 7]
        g_raw = (g_unit - unit * (unit @ g_unit)) / raw_norm
        g_q[s + 3:s + 7] = quat_left_matrix(exp_q).T @ g_raw
        g_d[vs.start + 3:vs.stop] = quat_exp_jacobian(rotvec).T @ (quat_right_matrix(quat).T @ g_raw)
    return g_q, g_d


def _value_and_grad(prob, u_seq):
    if prob.cf.mode != SOFTPLUS:
        raise UnsupportedModeError("gradient indisponible en mode hard-max")
    states, total, steps = _forward(prob, u_seq)
    cs = prob.contacts
    grad_u = np.zeros_like(u_seq)
    g_q = final_cost_grad(states[-1], prob.task, prob.geometry, prob.costs)
    for t in range(len(u_seq) - 1, -1, -1):
        d, slope = steps[t]
        g_q_prev, g_d = _integration_vjp(states[t], d, g_q, prob.layout)
        y = prob.system.solve(g_d)
        if not cs.is_empty:
            y = y - prob.system.solve(cs.j_tilde.T @ (prob._k * slope * (cs.j_tilde @ y)))
        gq_path, gu_path = path_cost_grad(states[t], u_seq[t], prob.geometry, prob.costs)
        grad_u[t] = gu_path + prob.params.k_r * y[prob.layout.robot_v_slice]
        g_q = g_q_prev + gq_path
    return total, grad_u


def objective_gradient(prob, u_seq):
    """Gradient exact du coût de rollout par rapport aux T commandes"""
    u_seq = np.asarray(u_seq, dtype=float).reshape(-1, prob.n_u)
    return _value_and_grad(prob, u_seq)[1]


# ==================== OPTIMISATION ====================

@dataclass(frozen=True)
class OptimizeResult:
    u_seq: np.ndarray
    history: tuple
    iterations: int
    stalled: bool
    converged: bool
    grad_norm: float


def projected_gradient(value_and_grad, value, u0, lb, ub, max_iter=50, tolerance=1e-6,
                       initial_step=1e-3):
    """
    Descente de gradient projetée sur la boîte [lb, ub] avec recherche
    linéaire par rebroussement (Armijo, pas de Barzilai-Borwein en essai).

    Returns:
        OptimizeResult ; stalled = True si 30 divisions par deux n'ont pas suffi
    """
    u = np.clip(u0, lb, ub)
    f, g = value_and_grad(u)
    history = [f]
    step = initial_step
    stalled = converged = False
    pg_norm = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        pg_norm = float(np.max(np.abs(u - np.clip(u - g, lb, ub)), initial=0.0))
        if pg_norm <= tolerance:
            converged = True
            it -= 1
            break
        trial = step
        for _ in range(MAX_HALVINGS + 1):
            u_new = np.clip(u - trial * g, lb, ub)
            f_new = value(u_new)
            if f_new <= f - ARMIJO * float(np.sum(g * (u - u_new))):
                break
            trial *= 0.5
        else:
            stalled = True
            logger.debug(f"recherche linéaire bloquée à l'itération {it}")
            break
        f_new, g_new = value_and_grad(u_new)
        s = (u_new - u).ravel()
        y = (g_new - g).ravel()
        sy = float(s @ y)
        step = float(s @ s) / sy if sy > 0.0 else 2.0 * trial
        u, f, g = u_new, f_new, g_new
        history.append(f)
    else:
        pg_norm = float(np.max(np.abs(u - np.clip(u - g, lb, ub)), initial=0.0))
        converged = pg_norm <= tolerance
    return OptimizeResult(u, tuple(history), it, stalled, converged, pg_norm)


def optimize_controls(prob, warm_start):
    """Optimise la séquence de commandes du problème MPC depuis un départ à chaud"""
    lb, ub = prob.config.bounds(prob.n_u)
    warm = np.asarray(warm_start, dtype=float).reshape(lb.shape)
    return projected_gradient(lambda u: _value_and_grad(prob, u),
                              lambda u: _forward(prob, u)[1],
                              warm, lb, ub, prob.config.max_iter, prob.config.tolerance,
                              prob.config.initial_step)


# ==================== POLITIQUE ====================

@dataclass(frozen=True)
class PolicyResult:
    control: np.ndarray
    solution: np.ndarray
    stalled: bool
    iterations: int
    solve_time: float
    n_contacts: int


def shift_warm_start(previous, horizon, n_u):
    """(u₀, …, u_{T−1}) -> (u₁, …, u_{T−1}, u_{T−1}) ; zéros au premier appel"""
    if previous is None or horizon == 0:
        return np.zeros((horizon, n_u))
    previous = np.asarray(previous, dtype=float).reshape(horizon, n_u)
    return np.vstack([previous[1:], previous[-1:]])


def mpc_policy_step(q_real, scene, task, cfg, previous=None, costs=None, cf=None):
    """
    Une étape de la politique : contacts en q_real, gel, optimisation, u₀*.

    Args:
        q_real: état mesuré
        scene: scène fournissant snapshot(q), geometry, layout, quasi_params
        task: TaskSpec
        cfg: MpcConfig
        previous: solution précédente (T, n_u) ou None
    """
    start = time.perf_counter()
    prob = build_problem(q_real, scene, task, cfg, costs, cf)
    warm = shift_warm_start(previous, cfg.horizon, prob.n_u)
    if cfg.horizon == 0:
        solution = OptimizeResult(warm, (rollout(prob, warm)[1],), 0, False, True, 0.0)
    else:
        solution = optimize_controls(prob, warm)
    lb, ub = cfg.bounds(prob.n_u)
    control = np.clip(solution.u_seq[0], lb[0], ub[0]) if cfg.horizon else np.zeros(prob.n_u)
    elapsed = time.perf_counter() - start
    if solution.stalled:
        logger.debug("optimiseur bloqué, meilleure commande retournée")
    return PolicyResult(control, solution.u_seq, solution.stalled, solution.iterations,
                        elapsed, prob.contacts.n_contacts)


# ==================== RÉUSSITE ====================

class SuccessTracker:
    """Compte les pas consécutifs sous les seuils"""

    def __init__(self, task, window):
        if window < 1:
            raise InvalidArgumentError("fenêtre de réussite < 1")
        self.task = task
        self.window = window
        self.run = 0
        self.step = 0
        self.success_step = None

    def update(self, position, orientation):
        """Ajoute un pas ; retourne l'indice de réussite une fois atteint"""
        if self.success_step is None:
            self.run = self.run + 1 if self.task.satisfied(position, orientation) else 0
            if self.run >= self.window:
                self.success_step = self.step
        self.step += 1
        return self.success_step


def success_check(positions, orientations, task, window):
    """Premier pas terminant `window` pas consécutifs sous les deux seuils, sinon None"""
    tracker = SuccessTracker(task, window)
    for position, orientation in zip(positions, orientations):
        if tracker.update(position, orientation) is not None:
            break
    return tracker.success_step
