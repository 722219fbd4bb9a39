"""
Error hierarchy and configuration defaults
"""

from pathlib import Path

import pytest

import harnack_lab
from harnack_lab.core.config import Config
from harnack_lab.core.exceptions import (
    ConfigError,
    DegeneratePairError,
    ExplosionError,
    HarnackLabError,
    OracleError,
    SolverError,
    UsageError,
)


@pytest.mark.parametrize("error", [UsageError, ConfigError, DegeneratePairError])
def test_usage_errors_are_value_errors(error):
    assert issubclass(error, ValueError)
    assert issubclass(error, HarnackLabError)


def test_oracle_error_is_a_solver_error():
    assert issubclass(OracleError, SolverError)
    assert not issubclass(SolverError, UsageError)


def test_explosion_error_carries_step_and_time():
    error = ExplosionError("blew up", step=12, time=0.13)
    assert error.step == 12
    assert error.time == pytest.approx(0.13)
    assert "blew up" in str(error)


def test_numerical_defaults():
    assert Config.MC_BLOCK_SIZE == 4096
    assert Config.BLOWUP_THRESHOLD == 1e8
    assert Config.VERDICT_SIGMAS == 3.0
    assert Config.DISCRETIZATION_FACTOR == 10.0
    assert Config.MIN_GRID_POINTS == 51


def test_validate_config_creates_output_dir(tmp_path, monkeypatch):
    target = tmp_path / 'out'
    monkeypatch.setattr(Config, 'OUTPUT_DIR', str(target))
    monkeypatch.setattr(Config, 'PRESET_PATH', str(tmp_path / 'missing.yaml'))
    issues = Config.validate_config()
    assert target.is_dir()
    assert any('HARNACK_PRESET_PATH' in issue for issue in issues)


def test_validate_config_accepts_defaults(tmp_path, monkeypatch):
    monkeypatch.setattr(Config, 'OUTPUT_DIR', str(tmp_path / 'out'))
    monkeypatch.setattr(Config, 'PRESET_PATH', '')
    monkeypatch.setattr(Config, 'WORKERS', 2)
    assert Config.validate_config() == []
    assert Config.validate_config.__doc__.isascii()


def test_package_sources_are_plain_ascii():
    root = Path(harnack_lab.__file__).parent
    sources = sorted(root.rglob('*.py')) + sorted(root.rglob('*.yaml'))
    assert sources
    for path in sources:
        assert path.read_bytes().isascii(), path.relative_to(root)
