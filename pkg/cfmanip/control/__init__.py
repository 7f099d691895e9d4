from .costs import CostConfig, TaskSpec
from .mpc import MpcConfig, build_problem, mpc_policy_step, objective_gradient, rollout, success_check

__all__ = [
    'CostConfig', 'TaskSpec', 'MpcConfig', 'build_problem', 'mpc_policy_step',
    'objective_gradient', 'rollout', 'success_check'
]
