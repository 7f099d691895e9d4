"""
⚙️ STEPPERS DE CONTACT
Pas de temps fermé sans complémentarité (max et softplus), extension amortie,
référence QP et oracles de validation.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from ..config import Config
from ..core.se3_math import softplus
from ..errors import InvalidArgumentError
from .qp import solve_qp

logger = logging.getLogger(__name__)

HARD_MAX = 'hard-max'
SOFTPLUS = 'softplus'


# ==================== TYPES ====================

@dataclass(frozen=True)
class CfParams:
    """
    Args:
        k_diag: diagonale de K, scalaire (diffusé sur toutes les lignes) ou vecteur
        gamma: raideur du softplus
        mode: 'hard-max' ou 'softplus'
    """
    k_diag: object = 1.0
    gamma: float = 100.0
    mode: str = HARD_MAX

    def __post_init__(self):
        if self.mode not in (HARD_MAX, SOFTPLUS):
            raise InvalidArgumentError(f"mode inconnu: {self.mode}")
        if not self.gamma > 0:
            raise InvalidArgumentError(f"gamma non positif: {self.gamma}")
        if np.any(np.asarray(self.k_diag, dtype=float) <= 0):
            raise InvalidArgumentError("diagonale de K non positive")

    def k_rows(self, n_rows):
        k = np.asarray(self.k_diag, dtype=float)
        if k.ndim == 0:
            return np.full(n_rows, float(k))
        if k.size != n_rows:
            raise InvalidArgumentError(f"K de taille {k.size} pour {n_rows} lignes")
        return k

    def activation(self, x):
        if self.mode == SOFTPLUS:
            return softplus(x, self.gamma)
        return np.maximum(x, 0.0)


@dataclass(frozen=True)
class StepResult:
    """v⁺, impulsions duales β⁺ et forces (normale, frottement) par contact"""
    v_plus: np.ndarray
    beta_plus: np.ndarray
    forces: tuple = ()
    info: dict = field(default_factory=dict)


@dataclass(frozen=True)
class DualOracleConfig:
    r_diag: object = Config.DUAL_REGULARIZATION
    tolerance: float = 1e-8

    def r_rows(self, n_rows):
        r = np.asarray(self.r_diag, dtype=float)
        r = np.full(n_rows, float(r)) if r.ndim == 0 else r
        if r.size != n_rows or np.any(r <= 0):
            raise InvalidArgumentError("régularisation R invalide")
        return r


# ==================== DÉCOMPOSITION ====================

def decompose_contact_forces(beta, normals, tangents, mu):
    """
    Forces par contact : normale (Σⱼβᵢⱼ)nᵢ, frottement μᵢΣⱼβᵢⱼdᵢⱼ.

    Args:
        beta: vecteur (n_c·n_d,) ≥ 0, ordre contact-major
        normals: (n_c, 3)
        tangents: (n_c, n_d, 3)
        mu: (n_c,)

    Returns:
        tuple de paires (normale 3-vecteur, frottement 3-vecteur)
    """
    beta = np.asarray(beta, dtype=float)
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    n_c = mu.size
    if n_c == 0:
        return ()
    if np.any(beta < 0.0):
        raise InvalidArgumentError(f"β négatif: min {beta.min():.3e}")
    beta = beta.reshape(n_c, -1)
    normals = np.asarray(normals, dtype=float).reshape(n_c, 3)
    tangents = np.asarray(tangents, dtype=float).reshape(n_c, beta.shape[1], 3)
    normal_forces = beta.sum(axis=1)[:, None] * normals
    friction_forces = mu[:, None] * np.einsum('ij,ijk->ik', beta, tangents)
    return tuple(zip(normal_forces, friction_forces))


def _forces(beta, cs):
    if cs.normals is None or cs.tangents is None or cs.is_empty:
        return ()
    return decompose_contact_forces(beta, cs.normals, cs.tangents, cs.mu)


def _check(sys, cs):
    if cs.n_v != sys.b_vec.size:
        raise InvalidArgumentError(f"J̃ a {cs.n_v} colonnes, b a {sys.b_vec.size} composantes")


# ==================== STEPPERS ====================

def cf_step(sys, cs, p):
    """
    Pas fermé : β⁺ = h·act(−K(J̃Q⁻¹b + φ̃)), v⁺ = (1/h)Q⁻¹(b + J̃ᵀβ⁺/h).

    act = max (hard-max) ou softplus(·, γ). Sans contact, v⁺ = Q⁻¹b/h.
    """
    _check(sys, cs)
    h = sys.h
    qinv_b = sys.solve(sys.b_vec)
    if cs.is_empty:
        return StepResult(qinv_b / h, np.zeros(0))
    residual = cs.j_tilde @ qinv_b + cs.phi_tilde
    lam = p.activation(-p.k_rows(cs.n_rows) * residual)
    beta = h * lam
    v_plus = (qinv_b + sys.solve(cs.j_tilde.T @ lam)) / h
    return StepResult(v_plus, beta, _forces(beta, cs), {'residual': residual})


def cf_step_extended(sys, cs, p, d_diag):
    """
    Pas fermé amorti : λ = act(−K(J̃Q⁻¹b + φ̃) − D J̃(Q⁻¹b/h)), β⁺ = hλ.

    En dynamique complète b contient déjà M v/h ; d_diag = 0 redonne cf_step.
    """
    _check(sys, cs)
    h = sys.h
    qinv_b = sys.solve(sys.b_vec)
    if cs.is_empty:
        return StepResult(qinv_b / h, np.zeros(0))
    d_rows = np.asarray(d_diag, dtype=float)
    d_rows = np.full(cs.n_rows, float(d_rows)) if d_rows.ndim == 0 else d_rows
    if d_rows.size != cs.n_rows or np.any(d_rows < 0):
        raise InvalidArgumentError("diagonale d'amortissement invalide")
    residual = cs.j_tilde @ qinv_b + cs.phi_tilde
    rate = cs.j_tilde @ (qinv_b / h)
    lam = p.activation(-p.k_rows(cs.n_rows) * residual - d_rows * rate)
    beta = h * lam
    v_plus = (qinv_b + sys.solve(cs.j_tilde.T @ lam)) / h
    return StepResult(v_plus, beta, _forces(beta, cs), {'residual': residual})


def qp_step(sys, cs, jitter=Config.QP_JITTER):
    """
    Référence QP : min ½h²vᵀQv − h vᵀb  s.c.  hJ̃v + φ̃ ≥ 0.

    Les multiplicateurs y du QP donnent β⁺ = h·y, de sorte que
    v⁺ = (1/h²)Q⁻¹(hb + J̃ᵀβ⁺).
    """
    _check(sys, cs)
    h = sys.h
    hessian = h * h * sys.q_mat
    gradient = -h * sys.b_vec
    a_mat = h * cs.j_tilde
    try:
        solution = solve_qp(hessian, gradient, a_mat, -cs.phi_tilde)
    except np.linalg.LinAlgError:
        logger.warning(f"factorisation de Q échouée, ajout d'une régularisation {jitter:g}")
        solution = solve_qp(hessian + jitter * np.eye(hessian.shape[0]), gradient, a_mat, -cs.phi_tilde)
    beta = np.maximum(h * solution.multipliers, 0.0)
    return StepResult(solution.x, beta, _forces(beta, cs),
                      {'iterations': solution.iterations, 'residuals': solution.residuals})


# ==================== ORACLES ====================

def dual_operator(sys, cs):
    """(J̃Q⁻¹J̃ᵀ, J̃Q⁻¹b + φ̃)"""
    qinv_jt = sys.solve(cs.j_tilde.T)
    return cs.j_tilde @ qinv_jt, cs.j_tilde @ sys.solve(sys.b_vec) + cs.phi_tilde


def regularized_dual_solve(sys, cs, cfg=None):
    """
    Maximise −(1/2h²)βᵀ(J̃Q⁻¹J̃ᵀ + R)β − (1/h)(J̃Q⁻¹b + φ̃)ᵀβ sur β ≥ 0.

    La solution vérifie 0 ≤ β ⊥ (1/h)(J̃Q⁻¹J̃ᵀ + R)β + J̃Q⁻¹b + φ̃ ≥ 0.
    """
    cfg = cfg or DualOracleConfig()
    _check(sys, cs)
    if cs.is_empty:
        return np.zeros(0)
    h = sys.h
    a_mat, c_vec = dual_operator(sys, cs)
    a_mat = a_mat + np.diag(cfg.r_rows(cs.n_rows))
    a_mat = 0.5 * (a_mat + a_mat.T)
    solution = solve_qp(a_mat / (h * h), c_vec / h, np.eye(cs.n_rows), np.zeros(cs.n_rows))
    return np.maximum(solution.x, 0.0)


def dual_complementarity_residual(sys, cs, beta, r_rows=None):
    """max |β ∘ ((1/h)(A + R)β + c)| et violation de signe du résidu"""
    a_mat, c_vec = dual_operator(sys, cs)
    if r_rows is not None:
        a_mat = a_mat + np.diag(r_rows)
    slack = a_mat @ beta / sys.h + c_vec
    return (float(np.max(np.abs(beta * slack), initial=0.0)),
            float(np.max(-slack, initial=0.0)))
