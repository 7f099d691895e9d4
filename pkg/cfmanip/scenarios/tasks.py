"""
Tirage des tâches de manipulation : pose initiale de l'objet et cible.
"""

import logging

import numpy as np

from ..control.costs import TaskSpec
from ..core.se3_math import Pose, quat_from_axis_angle, quat_from_rpy
from ..errors import ConfigError

logger = logging.getLogger(__name__)

ROTATION = 'rotation'
FLIPPING = 'flipping'
IN_AIR = 'in_air'
TRIFINGER_LIKE = 'trifinger_like'

TASK_KINDS = (ROTATION, FLIPPING, IN_AIR, TRIFINGER_LIKE)

# Surcharges de seuils et de poids par type de tâche
TASK_THRESHOLDS = {TRIFINGER_LIKE: {'position_threshold': 0.02, 'quat_threshold': 0.04}}
TASK_WEIGHTS = {TRIFINGER_LIKE: {'w_control': 10.0}}


def _initial_pose(rng, rest_height, xy_bound, yaw_bound):
    x, y = rng.uniform(-xy_bound, xy_bound, size=2)
    yaw = rng.uniform(-yaw_bound, yaw_bound)
    return Pose((x, y, rest_height), quat_from_rpy(0.0, 0.0, yaw))


def sample_task(kind, seed, rest_height=0.03):
    """
    Tire (pose initiale, TaskSpec) de façon déterministe en seed.

    Args:
        kind: 'rotation', 'flipping', 'in_air' ou 'trifinger_like'
        seed: graine du générateur
        rest_height: hauteur du centre de l'objet posé au sol

    Raises:
        ConfigError: type de tâche inconnu
    """
    if kind not in TASK_KINDS:
        raise ConfigError(f"tâche inconnue: {kind} (disponibles: {', '.join(TASK_KINDS)})", key='task.kind')
    rng = np.random.default_rng(seed)

    if kind == TRIFINGER_LIKE:
        initial = _initial_pose(rng, rest_height, 0.05, np.pi / 2)
        x, y = rng.uniform(-0.05, 0.05, size=2)
        yaw = rng.uniform(-np.pi / 2, np.pi / 2)
        target = Pose((x, y, rest_height), quat_from_rpy(0.0, 0.0, yaw))
        return initial, TaskSpec(target, **TASK_THRESHOLDS[kind])

    initial = _initial_pose(rng, rest_height, 0.025, np.pi)
    x, y = rng.uniform(-0.1, 0.1, size=2)
    if kind == ROTATION:
        target = Pose((x, y, rest_height), quat_from_rpy(0.0, 0.0, rng.uniform(-np.pi, np.pi)))
    elif kind == FLIPPING:
        yaw = rng.uniform(-np.pi, np.pi)
        pitch = rng.uniform(-np.pi / 2, np.pi / 2)
        roll = rng.uniform(-np.pi / 2, np.pi / 2)
        target = Pose((x, y, rest_height), quat_from_rpy(roll, pitch, yaw))
    else:
        z = rng.uniform(0.03, 0.08)
        axis = rng.normal((0.0, 1.0, 1.0), np.sqrt(0.1))
        angle = rng.uniform(-np.pi, np.pi)
        target = Pose((x, y, z), quat_from_axis_angle(axis, angle))
    logger.debug(f"tâche {kind} (seed={seed}): cible {np.round(target.position, 4)}")
    return initial, TaskSpec(target)


def task_weights(kind):
    """Surcharges des poids de coût propres au type de tâche"""
    return dict(TASK_WEIGHTS.get(kind, {}))
