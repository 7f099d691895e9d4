"""
⏱️ BENCHMARK DE PRÉDICTION À UN PAS
Chaque stepper repart des mêmes états de référence enregistrés : le temps
mesuré ne dépend pas de la divergence des trajectoires.
"""

import json
import logging
import time
from pathlib import Path

import numpy as np

from ..core.contact_assembly import LinearizedSystem
from ..errors import InvalidArgumentError
from ..scenarios.runner import CF, CF_EXTENDED, QP, STEPPERS, prepare_step, run_simulation, solve_step

logger = logging.getLogger(__name__)


def reference_problems(scene, steps, reference=CF):
    """Problèmes (Q, b, J̃, φ̃) le long d'une trajectoire de référence"""
    trace = run_simulation(scene, reference, steps)
    problems = []
    for q, v, u in zip(trace.states, trace.velocities, trace.controls):
        problems.append(prepare_step(scene, q, v, u))
    return problems


def bench(scene, steppers=(CF, QP), steps=100, repetitions=3):
    """
    Temps de résolution à un pas par stepper.

    Returns:
        dict : temps moyen et minimal [ms] par stepper, nombre de contacts par pas,
        rapport cf:qp si les deux sont demandés

    Raises:
        InvalidArgumentError: moins de 2 répétitions, stepper inconnu
    """
    if repetitions < 2:
        raise InvalidArgumentError(f"au moins 2 répétitions requises, reçu {repetitions}")
    unknown = [s for s in steppers if s not in STEPPERS]
    if unknown:
        raise InvalidArgumentError(f"stepper(s) inconnu(s): {', '.join(unknown)}")
    problems = reference_problems(scene, steps)
    contacts = [cs.n_contacts for _, cs in problems]

    report = {
        'scene': scene.name,
        'steps': int(steps),
        'repetitions': int(repetitions),
        'contacts_per_step': contacts,
        'mean_contacts': float(np.mean(contacts)) if contacts else 0.0,
        'steppers': {},
    }
    if 'n_cube' in scene.params:
        report['n_cube'] = int(scene.params['n_cube'])

    for stepper in steppers:
        samples = []
        for _ in range(repetitions):
            for system, cs in problems:
                # Q refactorisé à chaque appel : aucun stepper n'hérite d'un cache
                fresh = LinearizedSystem(system.q_mat, system.b_vec, system.h)
                start = time.perf_counter()
                solve_step(scene, fresh, cs, stepper)
                samples.append(time.perf_counter() - start)
        samples = np.array(samples) if samples else np.zeros(1)
        report['steppers'][stepper] = {'mean_ms': float(1e3 * samples.mean()), 'min_ms': float(1e3 * samples.min())}
        logger.info(f"bench {scene.name}/{stepper}: {1e3 * samples.mean():.3f} ms par pas")

    timings = report['steppers']
    if CF in timings and QP in timings and timings[CF]['mean_ms'] > 0:
        report['cf_qp_ratio'] = timings[QP]['mean_ms'] / timings[CF]['mean_ms']
    if CF_EXTENDED in timings and QP in timings and timings[CF_EXTENDED]['mean_ms'] > 0:
        report['cf_extended_qp_ratio'] = timings[QP]['mean_ms'] / timings[CF_EXTENDED]['mean_ms']
    return report


def emit_bench(report, path):
    path = Path(path)
    try:
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(report, f, indent=2)
    except OSError as e:
        raise OSError(f"écriture impossible: {path} ({e})") from e
    return path
