#!/usr/bin/env python3
"""Point d'entrée en ligne de commande.

Usage:
  python run.py simulate --scene sliding_cube --stepper cf_extended --steps 300 --out runs/slide
  python run.py mpc --scene fingertips_box --seeds 0-9 --task.kind rotation --out runs/rotation
  python run.py bench --scene push_boxes --steps 100 --bench.steppers cf,qp --out runs/bench
  python run.py validate --quick

Toute clé pointée de la configuration peut être passée en option (`--mpc.horizon 8`)
et prime sur le fichier donné par `--config`.

Codes de sortie : 0 succès, 1 échec, 2 invocation invalide.
"""
import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor

from .config import Config
from .errors import CfmError, ConfigError
from .reporting.bench import bench, emit_bench
from .reporting.emitters import emit_metrics, emit_trajectory
from .reporting.run_config import COMMANDS, parse_config
from .reporting.validation import run_validation
from .scenarios.runner import run_mpc_trial, run_simulation
from .scenarios.scenes import build_scene
from .scenarios.tasks import sample_task

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

# Options nommées -> clés pointées
FLAG_KEYS = {'scene': 'scene.name', 'stepper': 'stepper', 'steps': 'steps', 'seeds': 'seeds', 'out': 'out'}


def build_parser():
    parser = argparse.ArgumentParser(prog='cfmanip', description="Moteur de contact sans complémentarité",
                                     allow_abbrev=False)
    sub = parser.add_subparsers(dest='command', required=True)
    for command in COMMANDS:
        p = sub.add_parser(command, allow_abbrev=False)
        p.add_argument('--scene')
        p.add_argument('--stepper')
        p.add_argument('--steps')
        p.add_argument('--seeds')
        p.add_argument('--out')
        p.add_argument('--config', help="fichier clé = valeur")
        p.add_argument('--profile', help="profil de configuration (reference, quick)")
        p.add_argument('--quick', action='store_true', help="instances réduites")
        p.add_argument('--verbose', '-v', action='store_true')
    return parser


def parse_overrides(extra):
    """`--clé valeur` ou `--clé=valeur` -> dict"""
    overrides = {}
    i = 0
    while i < len(extra):
        token = extra[i]
        if not token.startswith('--') or len(token) == 2:
            raise ConfigError(f"option invalide: {token}")
        key, sep, value = token[2:].partition('=')
        if not sep:
            if i + 1 >= len(extra) or extra[i + 1].startswith('--'):
                raise ConfigError(f"valeur manquante pour {key}", key=key)
            value = extra[i + 1]
            i += 1
        overrides[key] = value
        i += 1
    return overrides


def setup_logging(verbose=False):
    level = 'DEBUG' if verbose else Config.init_app()
    logging.basicConfig(level=getattr(logging, level, logging.INFO),
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')


# ==================== COMMANDES ====================

def cmd_simulate(cfg):
    scene = build_scene(cfg.scene, cfg.scene_params(), cfg.scene_seed, cfg.profile)
    trace = run_simulation(scene, cfg.stepper, cfg.steps)
    path = emit_trajectory(trace, cfg.output_dir() / 'trajectory.csv')
    print(f"{cfg.steps} pas simulés ({cfg.scene}, {cfg.stepper}) -> {path}")
    return EXIT_OK


def run_trial(cfg, seed):
    """Un essai MPC complet, déterministe en (cfg, seed)"""
    scene = build_scene(cfg.scene, cfg.scene_params(), seed, cfg.profile)
    initial, task = sample_task(cfg.task, seed, rest_height=scene.params.get('rest_height', 0.03))
    return run_mpc_trial(scene, task, cfg.mpc_config(), seed, initial_pose=initial,
                         costs=cfg.cost_config(), task_kind=cfg.task)


def cmd_mpc(cfg):
    out = cfg.output_dir()
    records, failed = [], []
    if cfg.workers > 1 and len(cfg.seeds) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [(seed, pool.submit(run_trial, cfg, seed)) for seed in cfg.seeds]
            for seed, future in futures:
                try:
                    records.append(future.result())
                except (CfmError, ValueError) as e:
                    logger.error(f"essai {seed} interrompu: {e}")
                    failed.append(seed)
    else:
        for seed in cfg.seeds:
            try:
                records.append(run_trial(cfg, seed))
            except (CfmError, ValueError) as e:
                logger.error(f"essai {seed} interrompu: {e}")
                failed.append(seed)

    records.sort(key=lambda r: r.seed)
    for record in records:
        emit_trajectory(record, out / f"trial_{record.seed}.csv")
    if records:
        document = emit_metrics(records, out / 'metrics.json')
        summary = document['aggregate']
        print(f"{summary['trials']} essai(s), réussite {summary['success_rate']:.0%}, "
              f"erreur position {summary['final_position_error']['mean']:.4f} m, "
              f"{summary['mpc_solve_time_ms']:.1f} ms par pas -> {out}")
    if failed:
        print(f"essais interrompus: {', '.join(str(s) for s in failed)}")
        return EXIT_FAILURE
    return EXIT_OK


def cmd_bench(cfg):
    scene = build_scene(cfg.scene, cfg.scene_params(), cfg.scene_seed, cfg.profile)
    report = bench(scene, cfg.bench_steppers, cfg.steps, cfg.repetitions)
    path = emit_bench(report, cfg.output_dir() / 'bench.json')
    for name, timing in report['steppers'].items():
        print(f"{name:<12} moyenne {timing['mean_ms']:.3f} ms  min {timing['min_ms']:.3f} ms")
    if 'cf_qp_ratio' in report:
        print(f"rapport cf:qp = {report['cf_qp_ratio']:.2f}")
    print(f"-> {path}")
    return EXIT_OK


def cmd_validate(cfg):
    results = run_validation(quick=cfg.quick)
    for result in results:
        print(result.line())
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"suites en échec: {', '.join(failed)}")
        return EXIT_FAILURE
    print("toutes les suites passent")
    return EXIT_OK


COMMAND_HANDLERS = {
    'simulate': cmd_simulate,
    'mpc': cmd_mpc,
    'bench': cmd_bench,
    'validate': cmd_validate,
}


def main(argv=None):
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    setup_logging(args.verbose)

    try:
        flags = parse_overrides(extra)
        for name, key in FLAG_KEYS.items():
            if getattr(args, name) is not None:
                flags[key] = getattr(args, name)
        cfg = parse_config(args.command, args.config, flags, profile=args.profile, quick=args.quick)
    except ConfigError as e:
        logger.error(f"configuration invalide: {e}")
        print(f"ERREUR: {e}", file=sys.stderr)
        return EXIT_USAGE

    try:
        return COMMAND_HANDLERS[args.command](cfg)
    except ConfigError as e:
        print(f"ERREUR: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (CfmError, OSError) as e:
        logger.error(f"échec de la commande {args.command}: {e}")
        print(f"ERREUR: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == '__main__':
    sys.exit(main())
