"""
Écriture des résultats : trajectoires CSV et métriques JSON des essais.
"""

import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from ..errors import InvalidArgumentError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.9g'


def trajectory_columns(layout):
    """step, time_s, coordonnées de q, commandes, solve_ms"""
    return ['step', 'time_s'] + layout.coordinate_names() + layout.control_names() + ['solve_ms']


def trajectory_frame(record):
    """DataFrame d'une trace (SimulationTrace ou TrialRecord)"""
    layout = record.layout
    n = len(record.solve_times)
    columns = trajectory_columns(layout)
    if n == 0:
        return pd.DataFrame(columns=columns)
    steps = np.arange(n)
    data = np.column_stack([
        steps,
        steps * record.h,
        np.asarray(record.states, dtype=float).reshape(n, layout.nq),
        np.asarray(record.controls, dtype=float).reshape(n, layout.n_robot),
        1e3 * np.asarray(record.solve_times, dtype=float),
    ])
    frame = pd.DataFrame(data, columns=columns)
    frame['step'] = frame['step'].astype(int)
    return frame


def emit_trajectory(record, path):
    """
    Écrit la trajectoire en CSV (9 chiffres significatifs, une ligne par pas).

    Raises:
        OSError: écriture impossible, avec le chemin
    """
    path = Path(path)
    frame = trajectory_frame(record)
    try:
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    except OSError as e:
        logger.error(f"écriture de la trajectoire impossible: {path}")
        raise OSError(f"écriture impossible: {path} ({e})") from e
    logger.debug(f"trajectoire écrite: {path} ({len(frame)} lignes)")
    return path


def read_trajectory(path):
    return pd.read_csv(path)


# ==================== MÉTRIQUES ====================

def trial_entry(record):
    """Entrée JSON d'un essai"""
    solve_times = np.asarray(record.solve_times, dtype=float)
    return {
        'seed': int(record.seed),
        'task': record.task_kind,
        'success': bool(record.success),
        'success_step': record.success_step,
        'steps': int(record.n_steps),
        'final_position_error': float(record.final_position_error),
        'final_quaternion_error': float(record.final_quaternion_error),
        'final_angle_error_deg': float(np.degrees(record.final_angle_error)),
        'mpc_solve_time_ms': float(1e3 * solve_times.mean()) if solve_times.size else 0.0,
        'stalls': int(record.stalls),
        'degenerate_grasps': int(record.degenerate_grasps),
    }


def aggregate_metrics(records):
    """Taux de réussite et moyenne ± écart-type (population) des erreurs finales"""
    if not records:
        raise InvalidArgumentError("aucun essai à agréger")
    frame = pd.DataFrame([trial_entry(r) for r in records]).sort_values('seed')
    summary = {'trials': int(len(frame)), 'success_rate': float(frame['success'].mean())}
    for column in ('final_position_error', 'final_quaternion_error', 'final_angle_error_deg'):
        summary[column] = {'mean': float(frame[column].mean()), 'std': float(frame[column].std(ddof=0))}
    all_times = np.concatenate([np.asarray(r.solve_times, dtype=float) for r in records])
    summary['mpc_solve_time_ms'] = float(1e3 * all_times.mean()) if all_times.size else 0.0
    summary['failed_seeds'] = [int(s) for s in frame.loc[~frame['success'], 'seed']]
    return summary, frame


def emit_metrics(records, path):
    """
    Écrit les métriques JSON : une entrée par essai et les agrégats.

    Raises:
        InvalidArgumentError: liste d'essais vide
        OSError: écriture impossible
    """
    summary, _ = aggregate_metrics(records)
    entries = sorted((trial_entry(r) for r in records), key=lambda e: e['seed'])
    document = {'aggregate': summary, 'trials': entries}
    path = Path(path)
    try:
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(document, f, indent=2, default=_json_default)
    except OSError as e:
        logger.error(f"écriture des métriques impossible: {path}")
        raise OSError(f"écriture impossible: {path} ({e})") from e
    logger.info(f"métriques écrites: {path} (réussite {summary['success_rate']:.0%})")
    return document


def _json_default(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    raise TypeError(f"type non sérialisable: {type(value).__name__}")
