#!/usr/bin/env python3
"""Balayage de la raideur K sur la tâche de rotation au sol.

Usage:
  python3 scripts/k_sweep.py [répertoire de sortie] [nombre d'essais]

Pour chaque K ∈ {0.01, 0.1, 1, 10}·I, lance les essais MPC (graines 0..n-1,
H = 500) et écrit metrics_K<k>.json, puis k_sweep.csv avec le taux de
réussite par K.
"""
import pathlib
import sys

import pandas as pd

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1]))

from cfmanip.main import run_trial  # noqa: E402
from cfmanip.reporting.emitters import emit_metrics  # noqa: E402
from cfmanip.reporting.run_config import parse_config  # noqa: E402

STIFFNESS_VALUES = (0.01, 0.1, 1.0, 10.0)
ROLLOUT_CAP = 500


def main():
    out = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else 'runs/k_sweep')
    try:
        n_trials = int(sys.argv[2]) if len(sys.argv) > 2 else 10
    except ValueError:
        print(f"ERREUR: nombre d'essais invalide: {sys.argv[2]}")
        sys.exit(2)
    if n_trials < 1:
        print("ERREUR: au moins un essai est requis.")
        sys.exit(2)

    rows = []
    for k in STIFFNESS_VALUES:
        cfg = parse_config('mpc', flags={
            'scene.name': 'fingertips_box',
            'task.kind': 'rotation',
            'model.stiffness': str(k),
            'mpc.rollout_cap': str(ROLLOUT_CAP),
            'seeds': f"0-{n_trials - 1}",
            'out': str(out),
        })
        out_dir = cfg.output_dir()
        print(f"K = {k:g}·I : {n_trials} essais")
        try:
            records = [run_trial(cfg, seed) for seed in cfg.seeds]
        except Exception as e:
            print(f"Balayage interrompu pour K = {k:g}:", e)
            sys.exit(4)
        summary = emit_metrics(records, out_dir / f"metrics_K{k:g}.json")['aggregate']
        rows.append({
            'stiffness': k,
            'success_rate': summary['success_rate'],
            'final_position_error': summary['final_position_error']['mean'],
            'final_quaternion_error': summary['final_quaternion_error']['mean'],
            'mpc_solve_time_ms': summary['mpc_solve_time_ms'],
        })

    table = pd.DataFrame(rows)
    table.to_csv(out / 'k_sweep.csv', index=False, float_format='%.9g')
    print(table.to_string(index=False))


if __name__ == '__main__':
    main()
