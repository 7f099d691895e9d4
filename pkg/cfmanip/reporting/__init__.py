from .run_config import RunConfig, parse_config
from .emitters import emit_metrics, emit_trajectory
from .bench import bench
from .validation import run_validation

__all__ = ['RunConfig', 'parse_config', 'emit_metrics', 'emit_trajectory', 'bench', 'run_validation']
