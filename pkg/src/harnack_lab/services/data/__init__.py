"""Data services package."""

from .config_loader import ExperimentConfig, bundled_configs, load_config, parse_config
from .exports import export_grid_function, export_matrix, export_plan, read_grid_function
from .persistence import ReportStore, atomic_write

__all__ = [
    'ExperimentConfig',
    'ReportStore',
    'atomic_write',
    'bundled_configs',
    'export_grid_function',
    'export_matrix',
    'export_plan',
    'load_config',
    'parse_config',
    'read_grid_function',
]
