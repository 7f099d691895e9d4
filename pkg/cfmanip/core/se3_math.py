"""
🧭 ARITHMÉTIQUE DES QUATERNIONS ET DES POSES
Quaternions unitaires (w, x, y, z), intégration pose-vitesse (opérateur ⊕),
lissage softplus et petite algèbre linéaire dense.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import expit

from ..errors import InvalidArgumentError
from .layout import FREE, SystemLayout

logger = logging.getLogger(__name__)

UNIT_TOLERANCE = 1e-6
IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])


# ==================== QUATERNIONS ====================

def check_unit(q, name="q"):
    """Vérifie qu'un quaternion est unitaire (écart de norme ≤ 1e-6)"""
    q = np.asarray(q, dtype=float)
    if q.shape != (4,):
        raise InvalidArgumentError(f"{name} doit être un 4-vecteur, reçu {q.shape}")
    deviation = abs(np.linalg.norm(q) - 1.0)
    if not deviation <= UNIT_TOLERANCE:
        raise InvalidArgumentError(f"{name} n'est pas unitaire (écart de norme {deviation:.3e})")
    return q


def quat_normalize(q):
    q = np.asarray(q, dtype=float)
    norm = np.linalg.norm(q)
    if norm == 0.0:
        raise InvalidArgumentError("quaternion nul")
    return q / norm


def quat_mul(p, q):
    """Produit de Hamilton p ⊗ q"""
    pw, px, py, pz = p
    qw, qx, qy, qz = q
    return np.array([
        pw * qw - px * qx - py * qy - pz * qz,
        pw * qx + px * qw + py * qz - pz * qy,
        pw * qy - px * qz + py * qw + pz * qx,
        pw * qz + px * qy - py * qx + pz * qw,
    ])


def quat_left_matrix(p):
    """L(p) tel que p ⊗ q = L(p) q"""
    w, x, y, z = p
    return np.array([
        [w, -x, -y, -z],
        [x, w, -z, y],
        [y, z, w, -x],
        [z, -y, x, w],
    ])


def quat_right_matrix(q):
    """R(q) tel que p ⊗ q = R(q) p"""
    w, x, y, z = q
    return np.array([
        [w, -x, -y, -z],
        [x, w, z, -y],
        [y, -z, w, x],
        [z, y, -x, w],
    ])


def quat_to_matrix(q):
    """Matrice de rotation 3×3 d'un quaternion unitaire"""
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_exp(rotvec):
    """Application exponentielle : vecteur rotation θ -> quaternion unitaire"""
    rotvec = np.asarray(rotvec, dtype=float)
    angle = np.linalg.norm(rotvec)
    # sin(a/2)/a = sinc(a/2π)/2, défini en a = 0
    scale = 0.5 * np.sinc(angle / (2.0 * np.pi))
    return np.concatenate(([np.cos(0.5 * angle)], scale * rotvec))


def quat_exp_jacobian(rotvec):
    """Jacobienne 4×3 de quat_exp par rapport au vecteur rotation"""
    rotvec = np.asarray(rotvec, dtype=float)
    angle = np.linalg.norm(rotvec)
    s = 0.5 * np.sinc(angle / (2.0 * np.pi))
    if angle < 1e-4:
        ds_over_a = -1.0 / 24.0 + angle * angle / 960.0
    else:
        ds_over_a = (0.5 * angle * np.cos(0.5 * angle) - np.sin(0.5 * angle)) / angle ** 3
    jac = np.empty((4, 3))
    jac[0] = -0.5 * s * rotvec
    jac[1:] = s * np.eye(3) + ds_over_a * np.outer(rotvec, rotvec)
    return jac


def quat_from_axis_angle(axis, angle):
    axis = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(axis)
    if norm == 0.0:
        raise InvalidArgumentError("axe de rotation nul")
    return quat_exp(axis / norm * angle)


def quat_from_rpy(roll, pitch, yaw):
    """Convention ZYX : q = qz(yaw) ⊗ qy(pitch) ⊗ qx(roll)"""
    qx = quat_from_axis_angle((1.0, 0.0, 0.0), roll)
    qy = quat_from_axis_angle((0.0, 1.0, 0.0), pitch)
    qz = quat_from_axis_angle((0.0, 0.0, 1.0), yaw)
    return quat_normalize(quat_mul(qz, quat_mul(qy, qx)))


def _same_rotation(q1, q2):
    return np.array_equal(q1, q2) or np.array_equal(q1, -q2)


def quat_error(q1, q2):
    """
    Erreur d'orientation 1 − (q1·q2)², invariante au signe de chaque argument.

    Returns:
        float dans [0, 1]
    """
    q1 = check_unit(q1, "q1")
    q2 = check_unit(q2, "q2")
    if _same_rotation(q1, q2):
        return 0.0
    dot = float(np.dot(q1, q2))
    return min(max(1.0 - dot * dot, 0.0), 1.0)


def quat_angle(q1, q2):
    """Angle entre deux orientations, arccos(2(q1·q2)² − 1), en radians"""
    q1 = check_unit(q1, "q1")
    q2 = check_unit(q2, "q2")
    if _same_rotation(q1, q2):
        return 0.0
    dot = float(np.dot(q1, q2))
    return float(np.arccos(np.clip(2.0 * dot * dot - 1.0, -1.0, 1.0)))


# ==================== POSES ====================

@dataclass(frozen=True)
class Pose:
    """Position [m] et orientation (quaternion unitaire wxyz)"""
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    orientation: np.ndarray = field(default_factory=lambda: IDENTITY_QUAT.copy())

    def __post_init__(self):
        object.__setattr__(self, 'position', np.asarray(self.position, dtype=float).reshape(3))
        object.__setattr__(self, 'orientation', check_unit(self.orientation, "orientation"))

    @property
    def rotation(self):
        return quat_to_matrix(self.orientation)

    def compose(self, other):
        """self ∘ other (other exprimée dans le repère de self)"""
        return Pose(self.position + self.rotation @ other.position,
                    quat_normalize(quat_mul(self.orientation, other.orientation)))

    def transform_point(self, point):
        return self.position + self.rotation @ np.asarray(point, dtype=float)

    def to_local(self, point):
        return self.rotation.T @ (np.asarray(point, dtype=float) - self.position)


# ==================== INTÉGRATION ====================

def integrate_displacement(q, d, layout):
    """
    Applique un déplacement généralisé d (= h·v) : q ⊕ d.

    Les positions avancent additivement, les quaternions par
    q⁺ = exp(d_ang) ⊗ q puis renormalisation.
    """
    q_next = np.array(q, dtype=float, copy=True)
    for block in layout.blocks:
        dq = d[block.v_slice]
        if block.kind == FREE:
            s = block.q_slice.start
            q_next[s:s + 3] += dq[:3]
            quat = quat_mul(quat_exp(dq[3:6]), q_next[s + 3:s + 7])
            q_next[s + 3:s + 7] = quat / np.linalg.norm(quat)
        else:
            q_next[block.q_slice] += dq
    return q_next


def integrate_pose(q, v, h, layout=None):
    """
    q⁺ = q ⊕ h·v.

    Args:
        q: position généralisée (vecteur plat)
        v: vitesse généralisée (vitesses angulaires en repère monde)
        h: pas de temps [s], > 0
        layout: SystemLayout ; par défaut un objet libre suivi des coordonnées robot
    """
    if not h > 0:
        raise InvalidArgumentError(f"pas de temps non positif: {h}")
    q = np.asarray(q, dtype=float)
    if layout is None:
        layout = SystemLayout.single_object(q.size - 7)
    return integrate_displacement(q, h * np.asarray(v, dtype=float), layout)


# ==================== LISSAGE ====================

def softplus(x, gamma):
    """ln(1 + e^(γx))/γ, sans débordement pour γx grand"""
    if not gamma > 0:
        raise InvalidArgumentError(f"gamma doit être positif, reçu {gamma}")
    x = np.asarray(x, dtype=float)
    # x + ln(1 + e^(−γx))/γ pour γx > 0, ln(1 + e^(γx))/γ sinon
    return np.maximum(x, 0.0) + np.log1p(np.exp(-gamma * np.abs(x))) / gamma


def softplus_grad(x, gamma):
    """Dérivée de softplus : sigmoïde(γx)"""
    return expit(gamma * np.asarray(x, dtype=float))


# ==================== ALGÈBRE LINÉAIRE ====================

class SpdSolver:
    """Résolution Q x = r pour Q symétrique définie positive (Cholesky, ou diagonale)"""

    def __init__(self, matrix, jitter=0.0):
        matrix = np.asarray(matrix, dtype=float)
        n = matrix.shape[0]
        diag = np.diag(matrix)
        if not np.any(matrix - np.diag(diag)) and jitter == 0.0:
            if np.any(diag <= 0.0):
                raise np.linalg.LinAlgError("matrice diagonale non définie positive")
            self._inv_diag = 1.0 / diag
            self._factor = None
        else:
            self._inv_diag = None
            self._factor = cho_factor(matrix + jitter * np.eye(n), lower=True, check_finite=False)
        self.n = n

    @property
    def is_diagonal(self):
        return self._inv_diag is not None

    def solve(self, rhs):
        rhs = np.asarray(rhs, dtype=float)
        if self._inv_diag is not None:
            return rhs * self._inv_diag if rhs.ndim == 1 else rhs * self._inv_diag[:, None]
        return cho_solve(self._factor, rhs, check_finite=False)
