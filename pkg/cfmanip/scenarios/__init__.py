from .scenes import SCENES, Scene, build_scene
from .tasks import TASK_KINDS, sample_task
from .runner import STEPPERS, SimulationTrace, TrialRecord, run_mpc_trial, run_simulation

__all__ = [
    'SCENES', 'Scene', 'build_scene', 'TASK_KINDS', 'sample_task',
    'STEPPERS', 'SimulationTrace', 'TrialRecord', 'run_mpc_trial', 'run_simulation'
]
