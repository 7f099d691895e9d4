"""
🏗️ SCÈNES CANONIQUES
Poussée de cubes, sphère entre deux plans, cube glissant, cube en chute
libre et manipulation à trois bouts de doigts.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from ..config import get_config
from ..core.collision import GeometryConfig, SceneBody, SceneSnapshot, Shape
from ..core.contact_assembly import (DynamicParams, QuasiDynamicParams, assemble_full_dynamic,
                                     assemble_quasi_dynamic)
from ..core.layout import FREE, LINEAR, SystemLayout
from ..core.se3_math import Pose, quat_from_axis_angle, quat_normalize
from ..errors import ConfigError, InvalidArgumentError

logger = logging.getLogger(__name__)

STATIC = 'static'
QUASI = 'quasi'
DYNAMIC = 'dynamic'

CUBE_MASS = 0.01
CUBE_INERTIA = 6e-6
CUBE_HALF = 0.03
FINGERTIP_RADIUS = 0.01
FINGERTIP_OBJECT_Q_DIAG = (50.0, 50.0, 50.0, 0.05, 0.05, 0.05)
FINGERTIP_STIFFNESS = 100.0

# Formes d'objet pour la manipulation : (forme, hauteur au repos)
FINGERTIP_OBJECTS = {
    'cube': (lambda: Shape.box((CUBE_HALF,) * 3), CUBE_HALF),
    'box': (lambda: Shape.box((0.05, 0.03, 0.025)), 0.025),
    'sphere': (lambda: Shape.sphere(0.04), 0.04),
}


@dataclass
class BodySpec:
    """
    Corps d'une scène.

    kind: 'static', 'free' ou 'linear' ; un corps linéaire se déplace le long
    des colonnes de axes depuis origin, coords0 donnant ses coordonnées initiales.
    """
    name: str
    shape: Shape
    kind: str = FREE
    actuated: bool = False
    pose: Pose = field(default_factory=Pose)
    axes: np.ndarray = None
    origin: np.ndarray = field(default_factory=lambda: np.zeros(3))
    coords0: np.ndarray = None
    velocity0: np.ndarray = None
    mass: float = CUBE_MASS
    inertia: np.ndarray = None
    q_diag: np.ndarray = None
    k_r: np.ndarray = None
    external: np.ndarray = None


class Scene:
    """Scène simulable : corps, disposition, paramètres de modèle et de contact"""

    def __init__(self, name, bodies, h, model, stiffness=1.0, damping=0.0, gamma=100.0,
                 mu=0.5, friction=None, excluded_pairs=(), geometry=None, gravity=9.81,
                 control=None, params=None, seed=0):
        if not bodies:
            raise InvalidArgumentError("une scène doit contenir au moins un corps")
        if mu < 0 or any(value < 0 for value in (friction or {}).values()):
            raise InvalidArgumentError("coefficient de frottement négatif")
        self.name = name
        self.bodies = list(bodies)
        self.h = float(h)
        self.model = model
        self.stiffness = stiffness
        self.damping = float(damping)
        self.qp_jitter = get_config().QP_JITTER
        self.gamma = float(gamma)
        self.mu = float(mu)
        self.friction = dict(friction or {})
        self.excluded_pairs = frozenset(frozenset(p) for p in excluded_pairs)
        self.geometry = geometry or GeometryConfig()
        self.gravity = np.array([0.0, 0.0, -float(gravity)])
        self.params = dict(params or {})
        self.seed = seed
        self._specs = {b.name: b for b in self.bodies}
        self.layout = SystemLayout(
            [{'name': b.name, 'kind': b.kind, 'actuated': b.actuated, 'axes': b.axes, 'origin': b.origin}
             for b in self.bodies if b.kind != STATIC],
            static=[b.name for b in self.bodies if b.kind == STATIC])
        n_r = self.layout.n_robot
        self.control = np.zeros(n_r) if control is None else np.broadcast_to(
            np.asarray(control, dtype=float), (n_r,)).copy()
        self.quasi_params = self._quasi_params() if model == QUASI else None
        self.dynamic_params = self._dynamic_params() if model == DYNAMIC else None
        self._external = self._external_wrench()

    # ---------- paramètres ----------

    def _block_specs(self):
        return [(block, self._specs[block.name]) for block in self.layout.blocks]

    def _gravity_wrench(self, block, spec):
        if block.kind == FREE:
            return np.concatenate([spec.mass * self.gravity, np.zeros(3)])
        return spec.mass * block.axes.T @ self.gravity

    def _quasi_params(self):
        q_diag, k_r, tau_o, tau_r = [], [], [], []
        for block, spec in self._block_specs():
            if block.actuated:
                k_r.append(np.broadcast_to(np.asarray(spec.k_r, dtype=float), (block.nv,)))
                tau_r.append(np.zeros(block.nv))
            else:
                q_diag.append(np.asarray(spec.q_diag, dtype=float))
                tau_o.append(self._gravity_wrench(block, spec))
        cat = lambda parts: np.concatenate(parts) if parts else np.zeros(0)
        return QuasiDynamicParams(cat(q_diag), cat(k_r), self.h, cat(tau_o), cat(tau_r))

    def _dynamic_params(self):
        masses, inertias = [], []
        for block, spec in self._block_specs():
            masses.append(spec.mass)
            inertias.append(spec.inertia if block.kind == FREE else None)
        return DynamicParams(tuple(masses), tuple(inertias), self.h, self.damping, self.gravity)

    def _external_wrench(self):
        wrench = np.zeros(self.layout.nv)
        for block, spec in self._block_specs():
            if spec.external is not None:
                wrench[block.v_slice] += spec.external
        return wrench

    @property
    def n_u(self):
        return self.layout.n_robot

    # ---------- états ----------

    def initial_state(self, object_pose=None):
        """(q₀, v₀) ; object_pose remplace la pose du premier objet libre"""
        q = np.zeros(self.layout.nq)
        v = np.zeros(self.layout.nv)
        for block, spec in self._block_specs():
            if block.kind == FREE:
                pose = spec.pose
                q[block.q_slice] = np.concatenate([pose.position, pose.orientation])
            else:
                q[block.q_slice] = spec.coords0
            if spec.velocity0 is not None:
                v[block.v_slice] = spec.velocity0
        if object_pose is not None:
            q = self.place_object(q, object_pose)
        return q, v

    def place_object(self, q, pose):
        """Pose de l'objet imposée ; les bouts de doigts sont replacés autour"""
        q = np.array(q, dtype=float, copy=True)
        obj = next(b for b in self.layout.blocks if b.kind == FREE and not b.actuated)
        q[obj.q_slice] = np.concatenate([pose.position, pose.orientation])
        fingertips = [b for b in self.layout.blocks if b.actuated and b.axes is not None]
        radius = self.params.get('fingertip_distance')
        if fingertips and radius:
            for k, block in enumerate(fingertips):
                angle = 2.0 * np.pi * k / len(fingertips)
                target = pose.position + radius * np.array([np.cos(angle), np.sin(angle), 0.0])
                q[block.q_slice] = np.linalg.lstsq(block.axes, target - block.origin, rcond=None)[0]
        return q

    def body_pose(self, spec, q):
        if spec.kind == STATIC:
            return spec.pose
        block = self.layout.block(spec.name)
        if block.kind == FREE:
            return Pose(q[block.q_slice][:3], quat_normalize(q[block.q_slice][3:7]))
        return Pose(block.position(q))

    def snapshot(self, q):
        bodies = tuple(SceneBody(spec.name, spec.shape, self.body_pose(spec, q), spec.kind == STATIC)
                       for spec in self.bodies)
        return SceneSnapshot(bodies, self.mu, self.friction, self.excluded_pairs)

    def linearize(self, q, v, u=None):
        """(Q, b) du modèle de la scène"""
        if self.model == QUASI:
            return assemble_quasi_dynamic(q, self.control if u is None else u, self.quasi_params)
        return assemble_full_dynamic(q, v, self.dynamic_params, self.layout, self._external)


# ==================== CONSTRUCTEURS ====================

def _ground():
    return BodySpec('ground', Shape.plane(), kind=STATIC)


def _geometry(params, cfg):
    return GeometryConfig(int(params.get('n_d', cfg.N_D)),
                          float(params.get('contact_margin', cfg.CONTACT_MARGIN)),
                          int(params.get('max_contacts_per_pair', cfg.MAX_CONTACTS_PER_PAIR)))


def _cube(name, pose, velocity0=None, mass=CUBE_MASS, q_diag=None):
    return BodySpec(name, Shape.box((CUBE_HALF,) * 3), FREE, pose=pose, velocity0=velocity0,
                    mass=mass, inertia=CUBE_INERTIA * np.eye(3), q_diag=q_diag)


def _push_boxes(params, seed, cfg):
    """Barre à une liaison glissière poussant n cubes (quasi-dynamique)"""
    n_cube = int(params.get('n_cube', 10))
    if n_cube < 1:
        raise InvalidArgumentError("n_cube doit être ≥ 1")
    h = 0.02
    epsilon = 40.0
    rng = np.random.default_rng(seed)
    q_diag = epsilon * np.array([CUBE_MASS] * 3 + [CUBE_INERTIA] * 3) / h ** 2
    bodies = [_ground()]
    bodies.append(BodySpec('bar', Shape.box((0.01, 0.25, 0.03)), LINEAR, actuated=True,
                           axes=np.array([[1.0], [0.0], [0.0]]), origin=np.array([0.0, 0.0, 0.03]),
                           coords0=np.zeros(1), k_r=np.array([500.0])))
    for k in range(n_cube):
        row, column = divmod(k, 2)
        position = np.array([-0.05 - 0.09 * row + rng.uniform(-0.005, 0.005),
                             (0.06 if column else -0.06) + rng.uniform(-0.01, 0.01),
                             CUBE_HALF])
        yaw = rng.uniform(-0.2, 0.2)
        bodies.append(_cube(f"cube{k}", Pose(position, quat_from_axis_angle((0, 0, 1), yaw)),
                            q_diag=q_diag))
    # La barre glisse au ras du sol : ses contacts avec lui rendraient le QP infaisable
    return Scene('push_boxes', bodies, h, QUASI,
                 stiffness=params.get('stiffness', cfg.STIFFNESS), damping=params.get('damping', cfg.DAMPING),
                 gamma=params.get('gamma', cfg.SOFTPLUS_GAMMA), mu=params.get('mu', 0.5),
                 excluded_pairs=[('bar', 'ground')], geometry=_geometry(params, cfg), gravity=cfg.GRAVITY,
                 control=params.get('control', -0.001), params={'n_cube': n_cube}, seed=seed)


def _sphere_two_planes(params, seed, cfg):
    """Sphère en translation pure entre deux plans, poussée en x"""
    radius = 0.05
    gap = 0.002
    drive = float(params.get('drive', 1.0))
    top = Pose((0.0, 0.0, 2.0 * radius + gap), (0.0, 1.0, 0.0, 0.0))
    bodies = [
        _ground(),
        BodySpec('top', Shape.plane(), kind=STATIC, pose=top),
        BodySpec('sphere', Shape.sphere(radius), LINEAR, axes=np.eye(3), coords0=np.array([0.0, 0.0, radius]),
                 velocity0=np.zeros(3), mass=0.2, external=np.array([drive, 0.0, 0.0])),
    ]
    return Scene('sphere_two_planes', bodies, 0.01, DYNAMIC,
                 stiffness=params.get('stiffness', 20.0), damping=params.get('damping', 6.0),
                 gamma=params.get('gamma', cfg.SOFTPLUS_GAMMA), mu=params.get('mu', 0.3),
                 geometry=_geometry(params, cfg), gravity=cfg.GRAVITY, params={'drive': drive}, seed=seed)


def _sliding_cube(params, seed, cfg):
    """Cube non actionné lancé à 2 m/s sur un sol frottant"""
    v0 = float(params.get('v0', 2.0))
    cube = _cube('cube', Pose((0.0, 0.0, CUBE_HALF)), velocity0=np.array([v0, 0, 0, 0, 0, 0], dtype=float))
    return Scene('sliding_cube', [_ground(), cube], 0.002, DYNAMIC,
                 stiffness=params.get('stiffness', cfg.CUBE_STIFFNESS), damping=params.get('damping', cfg.CUBE_DAMPING),
                 gamma=params.get('gamma', cfg.SOFTPLUS_GAMMA), mu=params.get('mu', 0.5),
                 geometry=_geometry(params, cfg), gravity=cfg.GRAVITY, params={'v0': v0}, seed=seed)


def _falling_cube(params, seed, cfg):
    """Cube en chute libre, qui roule puis glisse"""
    pose = Pose((0.1, 0.0, 0.2), quat_normalize((0.577, 0.577, 0.577, 0.0)))
    cube = _cube('cube', pose, velocity0=np.array([1.0, 0, 0, 20.0, 0, 0]))
    return Scene('falling_cube', [_ground(), cube], 0.002, DYNAMIC,
                 stiffness=params.get('stiffness', cfg.CUBE_STIFFNESS), damping=params.get('damping', cfg.CUBE_DAMPING),
                 gamma=params.get('gamma', cfg.SOFTPLUS_GAMMA), mu=params.get('mu', 0.5),
                 geometry=_geometry(params, cfg), gravity=cfg.GRAVITY, seed=seed)


def _fingertips_box(params, seed, cfg):
    """Trois bouts de doigts sphériques en translation autour d'un objet posé"""
    object_name = params.get('object', 'cube')
    if object_name not in FINGERTIP_OBJECTS:
        raise ConfigError(f"objet inconnu: {object_name} (disponibles: {', '.join(FINGERTIP_OBJECTS)})",
                          key='scene.object')
    make_shape, rest_height = FINGERTIP_OBJECTS[object_name]
    shape = make_shape()
    extent = shape.radius if shape.kind == 'sphere' else float(np.linalg.norm(shape.half_extents[:2]))
    distance = extent + FINGERTIP_RADIUS + 0.005
    obj = BodySpec('object', shape, FREE, pose=Pose((0.0, 0.0, rest_height)), mass=CUBE_MASS,
                   inertia=CUBE_INERTIA * np.eye(3), q_diag=np.array(FINGERTIP_OBJECT_Q_DIAG))
    bodies = [_ground(), obj]
    names = []
    for k in range(3):
        angle = 2.0 * np.pi * k / 3
        name = f"fingertip{k}"
        names.append(name)
        bodies.append(BodySpec(name, Shape.sphere(FINGERTIP_RADIUS), LINEAR, actuated=True, axes=np.eye(3),
                               coords0=np.array([distance * np.cos(angle), distance * np.sin(angle), rest_height]),
                               k_r=np.full(3, FINGERTIP_STIFFNESS)))
    excluded = [(a, b) for i, a in enumerate(names) for b in names[i + 1:]]
    return Scene('fingertips_box', bodies, 0.1, QUASI,
                 stiffness=params.get('stiffness', cfg.STIFFNESS), damping=params.get('damping', cfg.DAMPING),
                 gamma=params.get('gamma', cfg.SOFTPLUS_GAMMA), mu=params.get('mu', 0.5), excluded_pairs=excluded,
                 geometry=_geometry(params, cfg), gravity=cfg.GRAVITY,
                 params={'object': object_name, 'rest_height': rest_height, 'fingertip_distance': distance},
                 seed=seed)


SCENES = {
    'push_boxes': _push_boxes,
    'sphere_two_planes': _sphere_two_planes,
    'sliding_cube': _sliding_cube,
    'falling_cube': _falling_cube,
    'fingertips_box': _fingertips_box,
}


def build_scene(name, params=None, seed=0, cfg=None):
    """
    Construit une scène nommée, déterministe en (name, params, seed).

    Raises:
        ConfigError: nom de scène inconnu
    """
    builder = SCENES.get(name)
    if builder is None:
        raise ConfigError(f"scène inconnue: {name} (disponibles: {', '.join(sorted(SCENES))})", key='scene.name')
    cfg = cfg or get_config()
    scene = builder(dict(params or {}), seed, cfg)
    scene.qp_jitter = float((params or {}).get('qp_jitter', cfg.QP_JITTER))
    logger.debug(f"scène {name} construite: {len(scene.bodies)} corps, n_v={scene.layout.nv}")
    return scene
