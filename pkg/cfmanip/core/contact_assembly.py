"""
🔧 ASSEMBLAGE DES SYSTÈMES DE CONTACT
Jacobiennes de contact, système empilé (J̃, φ̃) et linéarisation (Q, b)
quasi-dynamique ou dynamique complète.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidArgumentError, SingularMassMatrixError
from .layout import FREE
from .se3_math import SpdSolver, quat_to_matrix

logger = logging.getLogger(__name__)


# ==================== TYPES ====================

@dataclass(frozen=True)
class ContactJacobianBlock:
    """jn : ligne normale (n,) ; jd : n_d × n lignes tangentielles"""
    jn: np.ndarray
    jd: np.ndarray


@dataclass(frozen=True)
class ContactSystem:
    """
    Système empilé, ordre contact puis direction tangentielle.

    La ligne (i, j) de j_tilde vaut Jⁿᵢ − μᵢ Jᵈᵢⱼ ; phi_tilde répète φᵢ n_d fois.
    normals / tangents servent à la décomposition des forces.
    """
    j_tilde: np.ndarray
    phi_tilde: np.ndarray
    row_contact: np.ndarray
    mu: np.ndarray
    n_d: int
    normals: np.ndarray = None
    tangents: np.ndarray = None

    @property
    def n_rows(self):
        return self.j_tilde.shape[0]

    @property
    def n_contacts(self):
        return self.mu.size

    @property
    def n_v(self):
        return self.j_tilde.shape[1]

    @property
    def is_empty(self):
        return self.n_rows == 0


@dataclass
class LinearizedSystem:
    """Paire (Q, b) d'un pas de temps : Q symétrique définie positive"""
    q_mat: np.ndarray
    b_vec: np.ndarray
    h: float
    _solver: SpdSolver = field(default=None, repr=False)

    def __post_init__(self):
        self.q_mat = np.asarray(self.q_mat, dtype=float)
        self.b_vec = np.asarray(self.b_vec, dtype=float)
        if self.q_mat.shape != (self.b_vec.size, self.b_vec.size):
            raise InvalidArgumentError(f"dimensions incohérentes: Q {self.q_mat.shape}, b {self.b_vec.shape}")
        if not self.h > 0:
            raise InvalidArgumentError(f"pas de temps non positif: {self.h}")

    @property
    def solver(self):
        if self._solver is None:
            self._solver = SpdSolver(self.q_mat)
        return self._solver

    def solve(self, rhs):
        """Q⁻¹ rhs"""
        return self.solver.solve(rhs)

    def with_b(self, b_vec):
        """Même Q (et même factorisation), autre b"""
        return LinearizedSystem(self.q_mat, b_vec, self.h, self.solver)


@dataclass(frozen=True)
class QuasiDynamicParams:
    """Diagonales εM_o/h² (objets) et K_r (robot), efforts non-contact"""
    object_q_diag: np.ndarray
    k_r: np.ndarray
    h: float
    tau_o: np.ndarray
    tau_r: np.ndarray

    def __post_init__(self):
        for name in ('object_q_diag', 'k_r', 'tau_o', 'tau_r'):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))
        if np.any(self.object_q_diag <= 0) or np.any(self.k_r <= 0):
            raise InvalidArgumentError("diagonales quasi-dynamiques non positives")
        if not self.h > 0:
            raise InvalidArgumentError(f"pas de temps non positif: {self.h}")
        if self.tau_o.size != self.object_q_diag.size or self.tau_r.size != self.k_r.size:
            raise InvalidArgumentError("dimensions des efforts incohérentes")


@dataclass(frozen=True)
class DynamicParams:
    """
    Masses et inerties par corps mobile (dans l'ordre de la disposition).

    Args:
        masses: une masse par bloc
        inertias: inertie 3×3 en repère corps par bloc libre (None pour un bloc linéaire)
        damping: coefficient diagonal de D, appliqué à chaque ligne empilée
        gravity: 3-vecteur
    """
    masses: tuple
    inertias: tuple
    h: float
    damping: float = 0.0
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -9.81]))

    def __post_init__(self):
        if not self.h > 0:
            raise InvalidArgumentError(f"pas de temps non positif: {self.h}")
        if any(not m > 0 for m in self.masses):
            raise InvalidArgumentError("masse non positive")
        if self.damping < 0:
            raise InvalidArgumentError("amortissement négatif")

    def d_diag(self, n_rows):
        return np.full(n_rows, float(self.damping))


# ==================== JACOBIENNES ====================

def contact_jacobian(contact, q, layout):
    """
    Bloc jacobien d'un contact : vitesse relative du point témoin projetée.

    Corps libre : colonnes (n, r × n) avec r = témoin − position du corps ;
    corps linéaire : colonnes nᵀA. Le corps b contribue avec le signe opposé.
    """
    jn = np.zeros(layout.nv)
    jd = np.zeros((contact.tangent_dirs.shape[0], layout.nv))
    directions = contact.tangent_dirs
    for name, sign in ((contact.body_a, 1.0), (contact.body_b, -1.0)):
        if layout.is_static(name):
            continue
        block = layout.block(name)
        vs = block.v_slice
        if block.kind == FREE:
            r = contact.witness_point - block.position(q)
            jn[vs.start:vs.start + 3] += sign * contact.normal
            jn[vs.start + 3:vs.stop] += sign * np.cross(r, contact.normal)
            jd[:, vs.start:vs.start + 3] += sign * directions
            jd[:, vs.start + 3:vs.stop] += sign * np.cross(r, directions)
        else:
            if block.axes is None:
                raise InvalidArgumentError(f"le corps {name} n'a pas d'axes géométriques")
            jn[vs] += sign * (contact.normal @ block.axes)
            jd[:, vs] += sign * (directions @ block.axes)
    return ContactJacobianBlock(jn, jd)


def stack_contact_system(blocks, gaps, mu, n_v=None, normals=None, tangents=None):
    """
    Empile les blocs en (J̃, φ̃) : lignes Jⁿᵢ − μᵢ Jᵈᵢⱼ, ordre contact-major.

    Args:
        blocks: séquence de ContactJacobianBlock
        gaps: φ par contact
        mu: coefficient de frottement par contact
        n_v: nombre de colonnes (obligatoire sans contact)
    """
    blocks = list(blocks)
    gaps = np.atleast_1d(np.asarray(gaps, dtype=float))
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    if len(blocks) != gaps.size or len(blocks) != mu.size:
        raise InvalidArgumentError("nombre de blocs, de gaps et de μ incohérents")
    if np.any(mu < 0):
        raise InvalidArgumentError("coefficient de frottement négatif")
    if not blocks:
        if n_v is None:
            raise InvalidArgumentError("n_v requis pour un système sans contact")
        return ContactSystem(np.zeros((0, n_v)), np.zeros(0), np.zeros(0, dtype=int), mu, 0,
                             np.zeros((0, 3)), np.zeros((0, 0, 3)))
    n = blocks[0].jn.size
    n_d = blocks[0].jd.shape[0]
    if n_v is not None and n != n_v:
        raise InvalidArgumentError(f"colonnes {n} différentes de n_v = {n_v}")
    rows = []
    for block, mu_i in zip(blocks, mu):
        if block.jn.size != n or block.jd.shape != (n_d, n):
            raise InvalidArgumentError("blocs jacobiens de dimensions incohérentes")
        rows.append(block.jn[None, :] - mu_i * block.jd)
    j_tilde = np.vstack(rows)
    phi_tilde = np.repeat(gaps, n_d)
    row_contact = np.repeat(np.arange(len(blocks)), n_d)
    return ContactSystem(j_tilde, phi_tilde, row_contact, mu, n_d,
                         None if normals is None else np.asarray(normals, dtype=float),
                         None if tangents is None else np.asarray(tangents, dtype=float))


def build_contact_system(contacts, q, layout):
    """Jacobiennes et empilement directement depuis des ContactPoint"""
    contacts = list(contacts)
    blocks = [contact_jacobian(c, q, layout) for c in contacts]
    normals = np.array([c.normal for c in contacts]).reshape(-1, 3)
    tangents = np.array([c.tangent_dirs for c in contacts])
    return stack_contact_system(blocks, [c.phi for c in contacts], [c.friction_mu for c in contacts],
                                n_v=layout.nv, normals=normals,
                                tangents=tangents if contacts else np.zeros((0, 0, 3)))


# ==================== LINÉARISATION ====================

def assemble_quasi_dynamic(q, u, p):
    """
    Q = blockdiag(εM_o/h², K_r) ; b = (τ_o, K_r u + τ_r).

    q n'intervient pas : les diagonales sont constantes.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.size != p.k_r.size:
        raise InvalidArgumentError(f"commande de dimension {u.size}, attendu {p.k_r.size}")
    q_mat = np.diag(np.concatenate([p.object_q_diag, p.k_r]))
    b_vec = np.concatenate([p.tau_o, p.k_r * u + p.tau_r])
    return LinearizedSystem(q_mat, b_vec, p.h)


def mass_matrix(q, layout, p):
    """M(q) : m·I₃ et R I Rᵀ pour un corps libre, m·AᵀA pour un corps linéaire"""
    m_mat = np.zeros((layout.nv, layout.nv))
    for block, mass, inertia in zip(layout.blocks, p.masses, p.inertias):
        vs = block.v_slice
        if block.kind == FREE:
            rot = quat_to_matrix(block.orientation(q))
            m_mat[vs.start:vs.start + 3, vs.start:vs.start + 3] = mass * np.eye(3)
            m_mat[vs.start + 3:vs.stop, vs.start + 3:vs.stop] = rot @ np.asarray(inertia, dtype=float) @ rot.T
        else:
            axes = block.axes if block.axes is not None else np.eye(3)[:, :block.nv]
            m_mat[vs, vs] = mass * axes.T @ axes
    return m_mat


def generalized_forces(q, v, layout, p, external=None):
    """τ(q, v) : gravité, efforts extérieurs et terme gyroscopique −ω × Iω"""
    tau = np.zeros(layout.nv) if external is None else np.array(external, dtype=float)
    for block, mass, inertia in zip(layout.blocks, p.masses, p.inertias):
        vs = block.v_slice
        if block.kind == FREE:
            rot = quat_to_matrix(block.orientation(q))
            omega = v[vs.start + 3:vs.stop]
            inertia_world = rot @ np.asarray(inertia, dtype=float) @ rot.T
            tau[vs.start:vs.start + 3] += mass * p.gravity
            tau[vs.start + 3:vs.stop] -= np.cross(omega, inertia_world @ omega)
        else:
            axes = block.axes if block.axes is not None else np.eye(3)[:, :block.nv]
            tau[vs] += mass * axes.T @ p.gravity
    return tau


def assemble_full_dynamic(q, v, p, layout, external=None):
    """
    Q = M(q)/h² ; b = M(q) v/h + τ(q, v).

    Raises:
        SingularMassMatrixError: M non définie positive
    """
    v = np.asarray(v, dtype=float)
    m_mat = mass_matrix(q, layout, p)
    try:
        solver = SpdSolver(m_mat / p.h ** 2)
    except np.linalg.LinAlgError as e:
        raise SingularMassMatrixError(f"matrice de masse non définie positive: {e}") from e
    b_vec = m_mat @ v / p.h + generalized_forces(q, v, layout, p, external)
    return LinearizedSystem(m_mat / p.h ** 2, b_vec, p.h, solver)
