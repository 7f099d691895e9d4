"""
Coûts de manipulation à bouts de doigts : coût de trajet (contact, saisie,
effort) et coût final (distance à la cible), avec leurs gradients.
"""

import logging
from dataclasses import dataclass

import numpy as np

from ..core.layout import FREE
from ..core.se3_math import Pose, check_unit, quat_error
from ..errors import InvalidArgumentError

logger = logging.getLogger(__name__)

DEGENERATE_NORM = 1e-12


@dataclass(frozen=True)
class CostConfig:
    w_contact: float = 1.0
    w_grasp: float = 0.05
    w_control: float = 50.0
    w_position: float = 5000.0
    w_orientation: float = 50.0

    def __post_init__(self):
        for name in ('w_contact', 'w_grasp', 'w_control', 'w_position', 'w_orientation'):
            if getattr(self, name) < 0:
                raise InvalidArgumentError(f"poids {name} négatif")

    @classmethod
    def from_config(cls, cfg):
        return cls(cfg.W_CONTACT, cfg.W_GRASP, cfg.W_CONTROL, cfg.W_POSITION, cfg.W_ORIENTATION)


@dataclass(frozen=True)
class TaskSpec:
    """Pose cible et seuils de réussite (position [m], erreur de quaternion)"""
    target: Pose
    position_threshold: float = 0.02
    quat_threshold: float = 0.015

    def __post_init__(self):
        check_unit(self.target.orientation, "orientation cible")
        if not (self.position_threshold > 0 and self.quat_threshold > 0):
            raise InvalidArgumentError("seuils de réussite non positifs")

    def errors(self, position, orientation):
        """(erreur de position, erreur de quaternion)"""
        return (float(np.linalg.norm(np.asarray(position) - self.target.position)),
                quat_error(self.target.orientation, orientation / np.linalg.norm(orientation)))

    def satisfied(self, position, orientation):
        pos_err, quat_err = self.errors(position, orientation)
        return pos_err <= self.position_threshold and quat_err <= self.quat_threshold


@dataclass(frozen=True)
class CostBreakdown:
    contact: float
    grasp: float
    control: float
    degenerate_grasp: int

    @property
    def total(self):
        return self.contact + self.grasp + self.control


class CostGeometry:
    """Repère l'objet (premier corps libre) et les bouts de doigts (corps actionnés) dans q"""

    def __init__(self, layout):
        free = [b for b in layout.blocks if b.kind == FREE and not b.actuated]
        if not free:
            raise InvalidArgumentError("aucun objet libre dans la disposition")
        self.layout = layout
        self.object = free[0]
        self.fingertips = tuple(b for b in layout.blocks if b.actuated and b.axes is not None)

    def object_position(self, q):
        return self.object.position(q)

    def object_orientation(self, q):
        return self.object.orientation(q)

    def fingertip_positions(self, q):
        return [b.position(q) for b in self.fingertips]


# ==================== COÛT DE TRAJET ====================

def _grasp_directions(p_obj, tips):
    units, norms, degenerate = [], [], 0
    for p_tip in tips:
        delta = p_tip - p_obj
        norm = np.linalg.norm(delta)
        if norm < DEGENERATE_NORM:
            degenerate += 1
            units.append(np.zeros(3))
        else:
            units.append(delta / norm)
        norms.append(norm)
    return units, norms, degenerate


def path_cost_terms(q, u, geom, w):
    """
    Décomposition du coût de trajet.

    Le terme de saisie ‖Σᵢ p̃ᵢ‖² utilise les directions objet->doigt ; la norme
    est la même en repère objet et en repère monde.
    """
    p_obj = geom.object_position(q)
    tips = geom.fingertip_positions(q)
    contact = w.w_contact * sum(float(np.sum((p_obj - p) ** 2)) for p in tips)
    units, _, degenerate = _grasp_directions(p_obj, tips)
    total_dir = np.sum(units, axis=0) if units else np.zeros(3)
    grasp = w.w_grasp * float(total_dir @ total_dir)
    control = w.w_control * float(np.dot(u, u))
    if degenerate:
        logger.debug(f"saisie dégénérée: {degenerate} doigt(s) au centre de l'objet")
    return CostBreakdown(contact, grasp, control, degenerate)


def path_cost(q, u, geom, w):
    return path_cost_terms(q, u, geom, w).total


def path_cost_grad(q, u, geom, w):
    """Gradients (∂c/∂q, ∂c/∂u)"""
    grad_q = np.zeros(geom.layout.nq)
    p_obj = geom.object_position(q)
    tips = geom.fingertip_positions(q)
    units, norms, _ = _grasp_directions(p_obj, tips)
    total_dir = np.sum(units, axis=0) if units else np.zeros(3)
    g_sum = 2.0 * w.w_grasp * total_dir
    g_obj = np.zeros(3)
    for block, p_tip, unit, norm in zip(geom.fingertips, tips, units, norms):
        g_tip = -2.0 * w.w_contact * (p_obj - p_tip)
        g_obj -= g_tip
        if norm >= DEGENERATE_NORM:
            g_delta = (g_sum - unit * (unit @ g_sum)) / norm
            g_tip = g_tip + g_delta
            g_obj -= g_delta
        grad_q[block.q_slice] += block.axes.T @ g_tip
    s = geom.object.q_slice.start
    grad_q[s:s + 3] += g_obj
    return grad_q, 2.0 * w.w_control * np.asarray(u, dtype=float)


# ==================== COÛT FINAL ====================

def final_cost(q, task, geom, w):
    """w_p‖p_obj − p_cible‖² + w_q(1 − (q_cibleᵀq_obj)²)"""
    delta = geom.object_position(q) - task.target.position
    dot = float(task.target.orientation @ geom.object_orientation(q))
    return w.w_position * float(delta @ delta) + w.w_orientation * (1.0 - dot * dot)


def final_cost_grad(q, task, geom, w):
    grad_q = np.zeros(geom.layout.nq)
    s = geom.object.q_slice.start
    q_target = task.target.orientation
    dot = float(q_target @ geom.object_orientation(q))
    grad_q[s:s + 3] = 2.0 * w.w_position * (geom.object_position(q) - task.target.position)
    grad_q[s + 3:s + 7] = -2.0 * w.w_orientation * dot * q_target
    return grad_q
