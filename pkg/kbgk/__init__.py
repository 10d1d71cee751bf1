"""Semi-Lagrangian BGK solver for rarefied shock-tube flows."""

from .config import RunConfig, expand_runs, parse_config
from .core import SolverConfig, build_regular_grid, build_velocity_grid
from .errors import ConfigError, KBGKError, SolverAbort
from .experiment import ExperimentResult, compare_profiles, error_norms, run_batch, run_experiment
from .presets import get_preset, list_presets
from .solver import SemiLagrangianSolver, StepState

__all__ = [
    'ConfigError', 'ExperimentResult', 'KBGKError', 'RunConfig', 'SemiLagrangianSolver', 'SolverAbort',
    'SolverConfig', 'StepState', 'build_regular_grid', 'build_velocity_grid', 'compare_profiles',
    'error_norms', 'expand_runs', 'get_preset', 'list_presets', 'parse_config', 'run_batch', 'run_experiment',
]
