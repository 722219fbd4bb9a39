"""Configuration, errors and random streams."""

from .config import Config, config
from .exceptions import (
    ConfigError,
    DegeneratePairError,
    ExplosionError,
    HarnackLabError,
    ModelValidationError,
    OracleError,
    PositivityViolationError,
    SolverError,
    UsageError,
)
from .rng import NoiseStream, derive_seed, get_stream

__all__ = [
    'Config',
    'config',
    'HarnackLabError',
    'UsageError',
    'ConfigError',
    'DegeneratePairError',
    'ModelValidationError',
    'ExplosionError',
    'PositivityViolationError',
    'SolverError',
    'OracleError',
    'NoiseStream',
    'derive_seed',
    'get_stream',
]
