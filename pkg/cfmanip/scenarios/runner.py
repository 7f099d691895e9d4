"""
🚀 EXÉCUTION DES SCÈNES
Simulation en boucle ouverte avec un stepper choisi et essais MPC en boucle
fermée (le stepper hard-max tient lieu d'environnement).
"""

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from ..control.costs import CostConfig, CostGeometry, path_cost_terms
from ..control.mpc import SuccessTracker, mpc_policy_step
from ..core.collision import detect_contacts
from ..core.contact_assembly import build_contact_system
from ..core.se3_math import Pose, integrate_pose, quat_angle
from ..errors import CfmError, InvalidArgumentError, SimulationError
from ..solvers.steppers import HARD_MAX, CfParams, cf_step, cf_step_extended, qp_step

logger = logging.getLogger(__name__)

CF = 'cf'
CF_EXTENDED = 'cf_extended'
QP = 'qp'
STEPPERS = (CF, CF_EXTENDED, QP)


# ==================== UN PAS ====================

def prepare_step(scene, q, v, u=None):
    """Détection, empilement des contacts et linéarisation (Q, b) en q"""
    contacts = detect_contacts(scene.snapshot(q), scene.geometry)
    cs = build_contact_system(contacts, q, scene.layout)
    return scene.linearize(q, v, u), cs


def solve_step(scene, system, cs, stepper):
    """Appelle le stepper demandé sur un problème déjà assemblé"""
    if stepper == CF:
        return cf_step(system, cs, CfParams(scene.stiffness, scene.gamma, HARD_MAX))
    if stepper == CF_EXTENDED:
        dynamic = scene.dynamic_params
        damping = dynamic.d_diag(cs.n_rows) if dynamic is not None else scene.damping
        return cf_step_extended(system, cs, CfParams(scene.stiffness, scene.gamma, HARD_MAX), damping)
    if stepper == QP:
        return qp_step(system, cs, scene.qp_jitter)
    raise InvalidArgumentError(f"stepper inconnu: {stepper} (disponibles: {', '.join(STEPPERS)})")


def advance(scene, q, v, u, stepper):
    """
    Un pas complet.

    Returns:
        (q⁺, v⁺, StepResult, nombre de contacts, durée de résolution [s])
    """
    system, cs = prepare_step(scene, q, v, u)
    start = time.perf_counter()
    result = solve_step(scene, system, cs, stepper)
    elapsed = time.perf_counter() - start
    q_next = integrate_pose(q, result.v_plus, scene.h, scene.layout)
    return q_next, result.v_plus, result, cs.n_contacts, elapsed


# ==================== SIMULATION ====================

@dataclass
class SimulationTrace:
    """État au début de chaque pas, commande appliquée et temps de résolution"""
    scene_name: str
    stepper: str
    layout: object
    h: float
    states: np.ndarray
    velocities: np.ndarray
    controls: np.ndarray
    solve_times: np.ndarray
    contact_counts: np.ndarray
    final_state: np.ndarray
    final_velocity: np.ndarray

    @property
    def n_steps(self):
        return len(self.solve_times)

    @property
    def times(self):
        return self.h * np.arange(self.n_steps)

    def positions(self, body):
        """Trajectoire (n_steps + 1, 3) du point de référence d'un corps"""
        block = self.layout.block(body)
        states = np.vstack([self.states.reshape(-1, self.layout.nq), self.final_state])
        return np.array([block.position(q) for q in states])

    def body_velocities(self, body):
        block = self.layout.block(body)
        return np.vstack([self.velocities.reshape(-1, self.layout.nv), self.final_velocity])[:, block.v_slice]


def run_simulation(scene, stepper, steps):
    """
    Avance la scène de `steps` pas avec le stepper choisi.

    La commande constante de la scène est appliquée à chaque pas.

    Raises:
        SimulationError: échec du stepper, avec l'indice du pas
    """
    if stepper not in STEPPERS:
        raise InvalidArgumentError(f"stepper inconnu: {stepper} (disponibles: {', '.join(STEPPERS)})")
    if steps < 0:
        raise InvalidArgumentError(f"nombre de pas négatif: {steps}")
    q, v = scene.initial_state()
    u = scene.control
    states, velocities, controls, times, counts = [], [], [], [], []
    for k in range(steps):
        try:
            q_next, v_next, _, n_contacts, elapsed = advance(scene, q, v, u, stepper)
        except (CfmError, np.linalg.LinAlgError) as e:
            logger.error(f"échec du stepper {stepper} au pas {k}: {e}")
            raise SimulationError(k, e) from e
        states.append(q)
        velocities.append(v)
        controls.append(u)
        times.append(elapsed)
        counts.append(n_contacts)
        q, v = q_next, v_next
    logger.info(f"simulation {scene.name}/{stepper}: {steps} pas, "
                f"{np.mean(counts) if counts else 0:.1f} contacts en moyenne")
    layout = scene.layout
    return SimulationTrace(scene.name, stepper, layout, scene.h,
                           np.array(states).reshape(steps, layout.nq),
                           np.array(velocities).reshape(steps, layout.nv),
                           np.array(controls).reshape(steps, layout.n_robot),
                           np.array(times), np.array(counts, dtype=int), q, v)


# ==================== ESSAIS MPC ====================

@dataclass
class TrialRecord:
    """Résultat d'un essai MPC en boucle fermée"""
    seed: int
    task_kind: str
    initial_pose: object
    target_pose: object
    layout: object
    h: float
    states: np.ndarray
    controls: np.ndarray
    solve_times: np.ndarray
    success_step: int = None
    final_position_error: float = float('nan')
    final_quaternion_error: float = float('nan')
    final_angle_error: float = float('nan')
    stalls: int = 0
    degenerate_grasps: int = 0
    info: dict = field(default_factory=dict)

    @property
    def success(self):
        return self.success_step is not None

    @property
    def n_steps(self):
        return len(self.solve_times)


def run_mpc_trial(scene, task, cfg, seed, initial_pose=None, costs=None, task_kind=None):
    """
    Boucle fermée mpc_policy_step -> pas hard-max jusqu'à la réussite ou H pas.

    Args:
        scene: scène à bouts de doigts actionnés
        task: TaskSpec
        cfg: MpcConfig (horizon, bornes, H, fenêtre de réussite)
        seed: graine de l'essai, recopiée dans l'enregistrement
        initial_pose: pose initiale de l'objet (celle de la scène sinon)
    """
    geom = CostGeometry(scene.layout)
    if not geom.fingertips:
        raise InvalidArgumentError(f"la scène {scene.name} n'a pas de bouts de doigts actionnés")
    costs = costs or CostConfig()
    q, v = scene.initial_state(initial_pose)
    obj = geom.object
    start_pose = Pose(obj.position(q), obj.orientation(q))
    tracker = SuccessTracker(task, cfg.success_window)
    states, controls, times = [], [], []
    previous = None
    stalls = degenerate = 0

    for k in range(cfg.rollout_cap):
        policy = mpc_policy_step(q, scene, task, cfg, previous, costs)
        previous = policy.solution
        stalls += int(policy.stalled)
        degenerate += path_cost_terms(q, policy.control, geom, costs).degenerate_grasp
        states.append(q)
        controls.append(policy.control)
        times.append(policy.solve_time)
        q, v, _, _, _ = advance(scene, q, v, policy.control, CF)
        if tracker.update(obj.position(q), obj.orientation(q)) is not None:
            break

    position_error, quaternion_error = task.errors(obj.position(q), obj.orientation(q))
    angle_error = quat_angle(task.target.orientation, obj.orientation(q) / np.linalg.norm(obj.orientation(q)))
    if stalls:
        logger.warning(f"essai {seed}: {stalls} recherche(s) linéaire(s) bloquée(s)")
    outcome = 'échec' if tracker.success_step is None else f"réussi au pas {tracker.success_step}"
    logger.info(f"essai {seed}: {outcome}, erreur position {position_error:.4f} m, "
                f"angle {np.degrees(angle_error):.2f}°")
    layout = scene.layout
    return TrialRecord(seed, task_kind, start_pose, task.target, layout, scene.h,
                       np.array(states).reshape(-1, layout.nq),
                       np.array(controls).reshape(-1, layout.n_robot),
                       np.array(times), tracker.success_step, position_error, quaternion_error,
                       angle_error, stalls, degenerate, {'final_state': q})
