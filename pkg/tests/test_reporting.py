import json

import numpy as np
import pytest

from cfmanip.core.se3_math import Pose
from cfmanip.errors import ConfigError, InvalidArgumentError
from cfmanip.reporting.bench import bench, emit_bench
from cfmanip.reporting.emitters import (aggregate_metrics, emit_metrics, emit_trajectory, read_trajectory,
                                        trajectory_columns)
from cfmanip.reporting.run_config import parse_config, read_config_file
from cfmanip.reporting.validation import run_validation
from cfmanip.scenarios.runner import CF, QP, TrialRecord, run_simulation
from cfmanip.scenarios.scenes import build_scene
from cfmanip.solvers import steppers


# ==================== CONFIGURATION ====================

def test_defaults_per_command():
    cfg = parse_config('simulate')
    assert cfg.scene == 'sliding_cube'
    assert cfg.stepper == 'cf'
    assert cfg.steps == 500
    assert cfg.seeds == [0]
    assert parse_config('mpc').scene == 'fingertips_box'
    assert parse_config('bench').scene == 'push_boxes'


def test_flags_override_file(tmp_path):
    path = tmp_path / 'run.cfg'
    path.write_text("# essai court\nsteps = 10\nstepper = qp  # référence\n\nmpc.horizon = 6\n", encoding='utf-8')
    cfg = parse_config('simulate', path, {'steps': '20'})
    assert cfg.steps == 20
    assert cfg.stepper == 'qp'
    assert cfg.horizon == 6
    assert cfg.sources == {'steps': 'flag', 'stepper': 'file', 'mpc.horizon': 'file'}


def test_unknown_key_rejected():
    with pytest.raises(ConfigError) as info:
        parse_config('simulate', flags={'model.stifness': '2'})
    assert info.value.key == 'model.stifness'
    assert 'clé inconnue' in str(info.value)


def test_type_mismatch_names_key_and_type():
    with pytest.raises(ConfigError) as info:
        parse_config('simulate', flags={'steps': 'beaucoup'})
    assert info.value.key == 'steps'
    assert 'entier' in str(info.value)


def test_odd_direction_count_rejected():
    with pytest.raises(ConfigError) as info:
        parse_config('simulate', flags={'geometry.n_d': '3'})
    assert info.value.key == 'geometry.n_d'
    assert parse_config('simulate', flags={'geometry.n_d': '6'}).n_d == 6


def test_out_of_domain_values_rejected():
    with pytest.raises(ConfigError):
        parse_config('bench', flags={'bench.repetitions': '1'})
    with pytest.raises(ConfigError):
        parse_config('simulate', flags={'stepper': 'euler'})
    with pytest.raises(ConfigError):
        parse_config('fly')


@pytest.mark.parametrize('text, expected', [('3', [3]), ('0-3', [0, 1, 2, 3]), ('1,4,7', [1, 4, 7]),
                                            ('0-1,5', [0, 1, 5])])
def test_seed_syntax(text, expected):
    assert parse_config('mpc', flags={'seeds': text}).seeds == expected


def test_bad_seed_range():
    with pytest.raises(ConfigError):
        parse_config('mpc', flags={'seeds': '5-2'})


def test_config_file_line_without_separator(tmp_path):
    path = tmp_path / 'bad.cfg'
    path.write_text("steps 10\n", encoding='utf-8')
    with pytest.raises(ConfigError):
        read_config_file(path)


def test_scene_params_and_task_weights():
    cfg = parse_config('mpc', flags={'task.kind': 'trifinger_like', 'model.stiffness': '10'})
    params = cfg.scene_params()
    assert params['stiffness'] == 10.0
    assert params['object'] == 'cube'
    assert 'n_cube' not in params
    assert cfg.cost_config().w_control == 10.0
    assert parse_config('mpc').cost_config().w_control == 50.0
    explicit = parse_config('mpc', flags={'task.kind': 'trifinger_like', 'cost.w_control': '3'})
    assert explicit.cost_config().w_control == 3.0


def test_mpc_config_bounds():
    mpc = parse_config('mpc', flags={'mpc.u_bound': '0.002', 'mpc.horizon': '2'}).mpc_config()
    assert mpc.horizon == 2
    assert mpc.u_lb == -0.002 and mpc.u_ub == 0.002


# ==================== TRAJECTOIRES ====================

def test_trajectory_round_trip(tmp_path, sliding_cube):
    trace = run_simulation(sliding_cube, CF, 5)
    path = emit_trajectory(trace, tmp_path / 'trajectory.csv')
    frame = read_trajectory(path)
    assert list(frame.columns) == trajectory_columns(sliding_cube.layout)
    assert len(frame.columns) == 2 + 7 + 1
    assert list(frame['step']) == [0, 1, 2, 3, 4]
    coords = frame[sliding_cube.layout.coordinate_names()].to_numpy()
    np.testing.assert_allclose(coords, trace.states, rtol=1e-8, atol=1e-12)


def test_empty_trajectory_writes_header_only(tmp_path, sliding_cube):
    trace = run_simulation(sliding_cube, CF, 0)
    path = emit_trajectory(trace, tmp_path / 'empty.csv')
    lines = path.read_text(encoding='utf-8').splitlines()
    assert len(lines) == 1
    assert lines[0].split(',') == trajectory_columns(sliding_cube.layout)


def test_control_columns_present(tmp_path):
    scene = build_scene('push_boxes', {'n_cube': 1})
    trace = run_simulation(scene, CF, 2)
    frame = read_trajectory(emit_trajectory(trace, tmp_path / 'push.csv'))
    assert 'u.bar.0' in frame.columns
    np.testing.assert_allclose(frame['u.bar.0'], -0.001)


def test_unwritable_trajectory_path(tmp_path, sliding_cube):
    trace = run_simulation(sliding_cube, CF, 1)
    with pytest.raises(OSError):
        emit_trajectory(trace, tmp_path / 'absent' / 'trajectory.csv')


# ==================== MÉTRIQUES ====================

def make_record(fingertip_scene, seed, success_step=1, position_error=0.01):
    nq = fingertip_scene.layout.nq
    return TrialRecord(seed, 'rotation', Pose(), Pose(), fingertip_scene.layout, 0.1,
                       np.zeros((2, nq)), np.zeros((2, 9)), np.array([0.01, 0.03]),
                       success_step, position_error, 0.001, np.radians(2.0))


def test_single_trial_metrics(tmp_path, fingertip_scene):
    document = emit_metrics([make_record(fingertip_scene, 3)], tmp_path / 'metrics.json')
    summary = document['aggregate']
    assert summary['trials'] == 1
    assert summary['success_rate'] == 1.0
    assert summary['final_position_error'] == {'mean': pytest.approx(0.01), 'std': 0.0}
    assert summary['final_angle_error_deg']['mean'] == pytest.approx(2.0)
    assert summary['mpc_solve_time_ms'] == pytest.approx(20.0)
    assert summary['failed_seeds'] == []
    on_disk = json.loads((tmp_path / 'metrics.json').read_text(encoding='utf-8'))
    assert on_disk['trials'][0]['seed'] == 3


def test_metrics_with_failure(tmp_path, fingertip_scene):
    records = [make_record(fingertip_scene, 2, success_step=None, position_error=0.05),
               make_record(fingertip_scene, 1)]
    document = emit_metrics(records, tmp_path / 'metrics.json')
    assert document['aggregate']['success_rate'] == 0.5
    assert document['aggregate']['failed_seeds'] == [2]
    assert document['aggregate']['final_position_error']['std'] == pytest.approx(0.02)
    assert [t['seed'] for t in document['trials']] == [1, 2]
    on_disk = json.loads((tmp_path / 'metrics.json').read_text(encoding='utf-8'))
    assert on_disk['trials'][1]['success_step'] is None


def test_metrics_require_trials():
    with pytest.raises(InvalidArgumentError):
        aggregate_metrics([])


# ==================== BENCHMARK ====================

def test_bench_single_stepper_has_no_ratio(tmp_path):
    scene = build_scene('push_boxes', {'n_cube': 2})
    report = bench(scene, (CF,), steps=3, repetitions=2)
    assert 'cf_qp_ratio' not in report
    assert report['n_cube'] == 2
    assert len(report['contacts_per_step']) == 3
    assert report['steppers']['cf']['min_ms'] <= report['steppers']['cf']['mean_ms']
    path = emit_bench(report, tmp_path / 'bench.json')
    assert json.loads(path.read_text(encoding='utf-8'))['steps'] == 3


def test_bench_ratio_between_cf_and_qp():
    report = bench(build_scene('push_boxes', {'n_cube': 2}), (CF, QP), steps=2, repetitions=2)
    assert report['cf_qp_ratio'] > 0.0


def test_bench_ten_cubes_solves_qp():
    report = bench(build_scene('push_boxes', {'n_cube': 10}), (CF, QP), steps=3, repetitions=2)
    assert report['n_cube'] == 10
    assert report['mean_contacts'] >= 10
    assert report['steppers']['qp']['mean_ms'] > 0.0
    assert report['cf_qp_ratio'] > 0.0


def test_bench_needs_two_repetitions():
    with pytest.raises(InvalidArgumentError):
        bench(build_scene('push_boxes', {'n_cube': 1}), (CF,), steps=1, repetitions=1)


# ==================== VALIDATION ====================

def test_quick_validation_subset_passes():
    results = run_validation(quick=True, only=['closed_form_exactness', 'primal_dual_consistency', 'coulomb_cone'])
    assert [r.name for r in results] == ['closed_form_exactness', 'primal_dual_consistency', 'coulomb_cone']
    assert all(r.passed for r in results), [r.line() for r in results]


def test_validation_detects_sign_error(monkeypatch):
    def sign_error(sys, cs, p):
        residual = cs.j_tilde @ sys.solve(sys.b_vec) + cs.phi_tilde
        beta = sys.h * np.maximum(p.k_rows(cs.n_rows) * residual, 0.0)
        return steppers.StepResult(np.zeros(cs.n_v), beta)

    monkeypatch.setattr(steppers, 'cf_step', sign_error)
    (result,) = run_validation(quick=True, only=['closed_form_exactness'])
    assert not result.passed
    assert 'ÉCHEC' in result.line()
