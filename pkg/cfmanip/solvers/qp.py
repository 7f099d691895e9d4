"""
Solveur QP dense à ensemble actif et oracle LCP par énumération.

solve_qp résout  min ½xᵀHx + gᵀx  s.c.  A x ≥ lb  par la méthode duale de
Goldfarb-Idnani : le départ au minimiseur libre est toujours admissible pour
le dual, même quand φ < 0 rend x = 0 inadmissible pour le primal.
"""

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from ..errors import InfeasibleError, InvalidArgumentError, NonConvergenceError

logger = logging.getLogger(__name__)

FEASIBILITY_TOL = 1e-11
LCP_MAX_DIM = 20


@dataclass(frozen=True)
class QpSolution:
    x: np.ndarray
    multipliers: np.ndarray
    iterations: int
    active_set: tuple
    residuals: dict = field(default_factory=dict)


def kkt_residuals(hessian, gradient, a_mat, lb, x, y):
    """Résidus KKT en norme infinie"""
    slack = a_mat @ x - lb
    stationarity = hessian @ x + gradient - a_mat.T @ y
    return {
        'stationarity': float(np.max(np.abs(stationarity), initial=0.0)),
        'primal': float(np.max(-slack, initial=0.0)),
        'dual': float(np.max(-y, initial=0.0)),
        'complementarity': float(np.max(np.abs(y * slack), initial=0.0)),
    }


def _polish(chol, gradient, a_mat, lb, active):
    """Résolution exacte du KKT restreint à l'ensemble actif final"""
    x0 = -cho_solve((chol, True), gradient)
    if not active:
        return x0, np.zeros(0)
    normals = a_mat[active]
    w = cho_solve((chol, True), normals.T)
    schur = normals @ w
    u = np.linalg.solve(schur, lb[active] - normals @ x0)
    return x0 + w @ u, u


def solve_qp(hessian, gradient, a_mat=None, lb=None, max_iter=None):
    """
    QP strictement convexe avec inégalités.

    Args:
        hessian: matrice n×n symétrique définie positive
        gradient: n-vecteur
        a_mat: matrice m×n des contraintes A x ≥ lb (None : sans contrainte)
        lb: m-vecteur
        max_iter: plafond d'itérations, 10·(n + m) par défaut

    Returns:
        QpSolution (x, multiplicateurs ≥ 0, itérations, ensemble actif, résidus)

    Raises:
        np.linalg.LinAlgError: hessienne non définie positive
        NonConvergenceError: plafond d'itérations atteint
        InfeasibleError: contraintes incompatibles
    """
    hessian = np.asarray(hessian, dtype=float)
    gradient = np.asarray(gradient, dtype=float)
    n = gradient.size
    a_mat = np.zeros((0, n)) if a_mat is None else np.asarray(a_mat, dtype=float).reshape(-1, n)
    m = a_mat.shape[0]
    lb = np.zeros(0) if lb is None else np.atleast_1d(np.asarray(lb, dtype=float))
    if lb.size != m or hessian.shape != (n, n):
        raise InvalidArgumentError("dimensions du QP incohérentes")
    cap = max_iter or 10 * (n + m)

    chol = cholesky(hessian, lower=True, check_finite=False)
    x = -cho_solve((chol, True), gradient)
    active = []
    u = np.zeros(0)
    iterations = 0
    usable = np.linalg.norm(a_mat, axis=1) > 0.0
    if np.any(lb[~usable] > FEASIBILITY_TOL):
        raise InfeasibleError("contrainte nulle avec borne positive")

    while m:
        violation = lb - a_mat @ x
        violation[~usable] = -np.inf
        violation[active] = -np.inf
        p = int(np.argmax(violation))
        if violation[p] <= FEASIBILITY_TOL:
            break
        n_p = a_mat[p]
        u_plus = np.append(u, 0.0)
        while True:
            iterations += 1
            if iterations > cap:
                y = np.zeros(m)
                y[active] = u
                raise NonConvergenceError(
                    f"QP non convergé après {cap} itérations",
                    kkt_residuals(hessian, gradient, a_mat, lb, x, y))
            linv_np = solve_triangular(chol, n_p, lower=True, check_finite=False)
            if active:
                basis, upper = np.linalg.qr(solve_triangular(chol, a_mat[active].T, lower=True,
                                                             check_finite=False))
                proj = basis.T @ linv_np
                r = solve_triangular(upper, proj, lower=False, check_finite=False)
                w = linv_np - basis @ proj
            else:
                r = np.zeros(0)
                w = linv_np
            z = solve_triangular(chol.T, w, lower=False, check_finite=False)

            # pas partiel : premier multiplicateur actif qui s'annule
            t1, k = np.inf, -1
            for j, r_j in enumerate(r):
                if r_j > 1e-14 and u_plus[j] / r_j < t1:
                    t1, k = u_plus[j] / r_j, j
            ww = float(w @ w)
            dependent = ww <= 1e-14 * float(linv_np @ linv_np)
            t2 = np.inf if dependent else (lb[p] - n_p @ x) / ww
            t = min(t1, t2)
            if not np.isfinite(t):
                raise InfeasibleError(f"contrainte {p} incompatible avec l'ensemble actif")

            u_plus[:-1] -= t * r
            u_plus[-1] += t
            if not dependent:
                x = x + t * z
                if t2 <= t1:
                    active.append(p)
                    u = u_plus
                    break
            del active[k]
            u_plus = np.delete(u_plus, k)

    y = np.zeros(m)
    y[active] = u
    residuals = kkt_residuals(hessian, gradient, a_mat, lb, x, y)
    try:
        x_pol, u_pol = _polish(chol, gradient, a_mat, lb, active)
        y_pol = np.zeros(m)
        y_pol[active] = u_pol
        res_pol = kkt_residuals(hessian, gradient, a_mat, lb, x_pol, y_pol)
        if max(res_pol.values()) <= max(residuals.values()):
            x, y, residuals = x_pol, y_pol, res_pol
    except np.linalg.LinAlgError:
        logger.debug("raffinement KKT ignoré (ensemble actif dégénéré)")
    logger.debug(f"QP résolu: n={n}, m={m}, {iterations} itérations, {len(active)} actives")
    return QpSolution(x, y, iterations, tuple(active), residuals)


def lcp_oracle(m_mat, q_vec):
    """
    Résout 0 ≤ z ⊥ M z + q ≥ 0 par énumération des ensembles actifs.

    Les ensembles sont parcourus dans l'ordre lexicographique (inactif
    d'abord) ; la première solution cohérente est retournée.

    Raises:
        InvalidArgumentError: dimension > 20
        InfeasibleError: aucun ensemble actif cohérent
    """
    m_mat = np.atleast_2d(np.asarray(m_mat, dtype=float))
    q_vec = np.atleast_1d(np.asarray(q_vec, dtype=float))
    n = q_vec.size
    if n > LCP_MAX_DIM:
        raise InvalidArgumentError(f"dimension {n} > {LCP_MAX_DIM} pour l'oracle LCP")
    if m_mat.shape != (n, n):
        raise InvalidArgumentError("dimensions du LCP incohérentes")
    tol = 1e-10 * (1.0 + np.max(np.abs(q_vec), initial=0.0) + np.max(np.abs(m_mat), initial=0.0))
    for mask in itertools.product((False, True), repeat=n):
        support = np.flatnonzero(mask)
        z = np.zeros(n)
        if support.size:
            sub = m_mat[np.ix_(support, support)]
            z_s = np.linalg.lstsq(sub, -q_vec[support], rcond=None)[0]
            if np.max(np.abs(sub @ z_s + q_vec[support])) > tol:
                continue
            z[support] = z_s
        if np.min(z) < -tol:
            continue
        if np.min(m_mat @ z + q_vec) < -tol:
            continue
        return np.maximum(z, 0.0)
    raise InfeasibleError("aucun ensemble actif cohérent pour le LCP")
