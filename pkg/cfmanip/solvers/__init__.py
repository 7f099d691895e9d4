from .qp import QpSolution, lcp_oracle, solve_qp
from .steppers import (HARD_MAX, SOFTPLUS, CfParams, StepResult, cf_step, cf_step_extended,
                       decompose_contact_forces, qp_step, regularized_dual_solve)

__all__ = [
    'QpSolution', 'lcp_oracle', 'solve_qp',
    'HARD_MAX', 'SOFTPLUS', 'CfParams', 'StepResult', 'cf_step', 'cf_step_extended',
    'decompose_contact_forces', 'qp_step', 'regularized_dual_solve'
]
