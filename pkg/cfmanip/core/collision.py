"""
💥 DÉTECTION DE COLLISION ENTRE PRIMITIVES
Plans (demi-espaces), sphères et boîtes : points de contact, distances
signées φ, normales et bases tangentielles polyédriques.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidArgumentError, UnsupportedGeometryError
from .se3_math import Pose

logger = logging.getLogger(__name__)

PLANE = 'plane'
SPHERE = 'sphere'
BOX = 'box'

# Signes des 8 sommets et des 6 centres de face d'une boîte, ordre fixe
_VERTEX_SIGNS = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)], dtype=float)
_FACE_SIGNS = np.vstack([np.eye(3), -np.eye(3)])


# ==================== TYPES ====================

@dataclass(frozen=True)
class Shape:
    """Primitive géométrique attachée à un corps"""
    kind: str
    radius: float = 0.0
    half_extents: tuple = (0.0, 0.0, 0.0)
    local_pose: Pose = field(default_factory=Pose)

    def __post_init__(self):
        if self.kind == SPHERE and not self.radius > 0:
            raise InvalidArgumentError(f"rayon de sphère non positif: {self.radius}")
        if self.kind == BOX and not np.all(np.asarray(self.half_extents, dtype=float) > 0):
            raise InvalidArgumentError(f"demi-dimensions de boîte non positives: {self.half_extents}")
        if self.kind not in (PLANE, SPHERE, BOX):
            raise InvalidArgumentError(f"forme inconnue: {self.kind}")

    @classmethod
    def plane(cls, local_pose=None):
        return cls(PLANE, local_pose=local_pose or Pose())

    @classmethod
    def sphere(cls, radius, local_pose=None):
        return cls(SPHERE, radius=float(radius), local_pose=local_pose or Pose())

    @classmethod
    def box(cls, half_extents, local_pose=None):
        return cls(BOX, half_extents=tuple(float(h) for h in half_extents), local_pose=local_pose or Pose())


@dataclass(frozen=True)
class SceneBody:
    """Corps d'un instantané de scène : forme et pose monde du corps"""
    name: str
    shape: Shape
    pose: Pose
    static: bool = False

    @property
    def shape_pose(self):
        return self.pose.compose(self.shape.local_pose)


@dataclass(frozen=True)
class SceneSnapshot:
    """Instantané immuable transmis à la détection"""
    bodies: tuple
    default_mu: float = 0.5
    friction: dict = field(default_factory=dict)
    excluded_pairs: frozenset = frozenset()

    def mu(self, name_a, name_b):
        key = frozenset((name_a, name_b))
        return float(self.friction.get(key, self.default_mu))

    def excluded(self, name_a, name_b):
        return frozenset((name_a, name_b)) in self.excluded_pairs


@dataclass(frozen=True)
class GeometryConfig:
    n_d: int = 4
    contact_margin: float = 0.01
    max_contacts_per_pair: int = 4

    def __post_init__(self):
        if self.n_d <= 0 or self.n_d % 2:
            raise InvalidArgumentError(f"n_d doit être pair et positif, reçu {self.n_d}")
        if not self.contact_margin > 0:
            raise InvalidArgumentError(f"marge de contact non positive: {self.contact_margin}")
        if self.max_contacts_per_pair < 1:
            raise InvalidArgumentError("max_contacts_per_pair doit être ≥ 1")


@dataclass(frozen=True)
class ContactPoint:
    """Contact entre body_a et body_b ; la normale pointe de b vers a"""
    body_a: str
    body_b: str
    witness_point: np.ndarray
    normal: np.ndarray
    phi: float
    tangent_dirs: np.ndarray
    friction_mu: float


# ==================== BASE TANGENTIELLE ====================

def tangent_basis(normal, n_d):
    """
    n_d directions unitaires symétriques dans le plan tangent.

    Première tangente = normalize(n × e), e étant l'axe canonique de plus
    petite composante |n·e| (égalité : plus petit indice) ; les suivantes par
    rotations de 2π/n_d ; la seconde moitié est l'opposée de la première.
    """
    normal = np.asarray(normal, dtype=float)
    if n_d <= 0 or n_d % 2:
        raise InvalidArgumentError(f"n_d doit être pair et positif, reçu {n_d}")
    axis = int(np.argmin(np.abs(normal)))
    e = np.zeros(3)
    e[axis] = 1.0
    t1 = np.cross(normal, e)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(normal, t1)
    half = n_d // 2
    angles = 2.0 * np.pi * np.arange(half) / n_d
    first = np.cos(angles)[:, None] * t1 + np.sin(angles)[:, None] * t2
    return np.vstack([first, -first])


# ==================== FONCTIONS DE DISTANCE ====================

def box_sdf(point_local, half_extents):
    """Distance signée d'un point (repère boîte) et gradient unitaire"""
    h = np.asarray(half_extents, dtype=float)
    q = np.abs(point_local) - h
    outside = np.maximum(q, 0.0)
    out_norm = np.linalg.norm(outside)
    q_max = float(np.max(q))
    sign = np.where(point_local < 0.0, -1.0, 1.0)
    if q_max > 0.0:
        return out_norm, sign * outside / out_norm
    axis = int(np.argmax(q))
    grad = np.zeros(3)
    grad[axis] = sign[axis]
    return q_max, grad


def _box_samples(pose, half_extents):
    """8 sommets puis 6 centres de face, en repère monde"""
    h = np.asarray(half_extents, dtype=float)
    local = np.vstack([_VERTEX_SIGNS * h, _FACE_SIGNS * h])
    return pose.position + local @ pose.rotation.T


def _plane_frame(pose):
    return pose.rotation[:, 2], pose.position


# Chaque routine retourne une liste (témoin, normale, φ) pour la paire (a, b),
# normale orientée de b vers a.

def _sphere_plane(shape_a, pose_a, shape_b, pose_b):
    n, origin = _plane_frame(pose_b)
    center = pose_a.position
    phi = float(n @ (center - origin)) - shape_a.radius
    return [(center - shape_a.radius * n, n, phi)]


def _sphere_sphere(shape_a, pose_a, shape_b, pose_b):
    diff = pose_a.position - pose_b.position
    dist = np.linalg.norm(diff)
    n = diff / dist if dist > 0.0 else np.array([0.0, 0.0, 1.0])
    phi = float(dist) - shape_a.radius - shape_b.radius
    return [(pose_a.position - shape_a.radius * n, n, phi)]


def _sphere_box(shape_a, pose_a, shape_b, pose_b):
    center_local = pose_b.to_local(pose_a.position)
    dist, grad = box_sdf(center_local, shape_b.half_extents)
    n = pose_b.rotation @ grad
    return [(pose_a.position - shape_a.radius * n, n, dist - shape_a.radius)]


def _box_plane(shape_a, pose_a, shape_b, pose_b):
    n, origin = _plane_frame(pose_b)
    vertices = _box_samples(pose_a, shape_a.half_extents)[:8]
    phis = (vertices - origin) @ n
    return [(vertex, n, float(phi)) for vertex, phi in zip(vertices, phis)]


def _box_box(shape_a, pose_a, shape_b, pose_b):
    results = []
    for point in _box_samples(pose_a, shape_a.half_extents):
        dist, grad = box_sdf(pose_b.to_local(point), shape_b.half_extents)
        results.append((point, pose_b.rotation @ grad, dist))
    for point in _box_samples(pose_b, shape_b.half_extents):
        dist, grad = box_sdf(pose_a.to_local(point), shape_a.half_extents)
        results.append((point, -(pose_a.rotation @ grad), dist))
    return results


_PAIR_ROUTINES = {
    (SPHERE, PLANE): _sphere_plane,
    (SPHERE, SPHERE): _sphere_sphere,
    (SPHERE, BOX): _sphere_box,
    (BOX, PLANE): _box_plane,
    (BOX, BOX): _box_box,
}


def _raw_pair(body_a, body_b):
    kind_a, kind_b = body_a.shape.kind, body_b.shape.kind
    pose_a, pose_b = body_a.shape_pose, body_b.shape_pose
    routine = _PAIR_ROUTINES.get((kind_a, kind_b))
    if routine is not None:
        return routine(body_a.shape, pose_a, body_b.shape, pose_b)
    routine = _PAIR_ROUTINES.get((kind_b, kind_a))
    if routine is not None:
        swapped = routine(body_b.shape, pose_b, body_a.shape, pose_a)
        return [(point, -normal, phi) for point, normal, phi in swapped]
    raise UnsupportedGeometryError(kind_a, kind_b)


def collide_pair(body_a, body_b, cfg, mu):
    """
    Contacts d'une paire ordonnée (a, b).

    Garde les points avec φ ≤ marge, au plus max_contacts_per_pair parmi les
    plus profonds, restitués dans l'ordre fixe d'échantillonnage.
    """
    raw = _raw_pair(body_a, body_b)
    phis = np.array([phi for _, _, phi in raw])
    order = np.lexsort((np.arange(len(raw)), phis))
    kept = [i for i in order if phis[i] <= cfg.contact_margin][:cfg.max_contacts_per_pair]
    contacts = []
    for i in sorted(kept):
        point, normal, phi = raw[i]
        normal = normal / np.linalg.norm(normal)
        contacts.append(ContactPoint(body_a.name, body_b.name, np.array(point, dtype=float), normal,
                                     float(phi), tangent_basis(normal, cfg.n_d), float(mu)))
    return contacts


def _ordered_pair(body_i, body_j):
    # Le plan est toujours le corps b, de sorte que la normale sorte du plan
    if body_i.shape.kind == PLANE and body_j.shape.kind != PLANE:
        return body_j, body_i
    return body_i, body_j


def detect_contacts(snapshot, cfg=None):
    """
    Détection exhaustive sur toutes les paires de l'instantané.

    Args:
        snapshot: SceneSnapshot
        cfg: GeometryConfig (défauts si None)

    Returns:
        list[ContactPoint] ordonnée par paire d'indices de corps
    """
    cfg = cfg or GeometryConfig()
    bodies = snapshot.bodies
    contacts = []
    for i in range(len(bodies)):
        for j in range(i + 1, len(bodies)):
            body_i, body_j = bodies[i], bodies[j]
            if body_i.static and body_j.static:
                continue
            if snapshot.excluded(body_i.name, body_j.name):
                continue
            body_a, body_b = _ordered_pair(body_i, body_j)
            contacts.extend(collide_pair(body_a, body_b, cfg, snapshot.mu(body_a.name, body_b.name)))
    logger.debug(f"{len(contacts)} contacts détectés sur {len(bodies)} corps")
    return contacts
