"""Pytest configuration and fixtures."""

import pytest
import sys
from pathlib import Path

# Add src to path for testing
src_path = Path(__file__).parent.parent / "src"
sys.path.insert(0, str(src_path))

from harnack_lab.models.presets import PresetRegistry  # noqa: E402
from harnack_lab.models.test_functions import TestFunction  # noqa: E402
from harnack_lab.services.oracle.grid import Grid1D  # noqa: E402
from harnack_lab.services.simulation.engine import SimConfig  # noqa: E402


@pytest.fixture
def registry():
    """Registry holding only the built-in presets."""
    return PresetRegistry()


@pytest.fixture
def ou_model(registry):
    """OU with theta = 0.5, sigma0 = 1 (K = -1)."""
    return registry.build('ou')


@pytest.fixture
def tanh_model(registry):
    return registry.build('tanh_perturbed')


@pytest.fixture
def galerkin_model(registry):
    """Small Galerkin level for fast simulations."""
    return registry.build('galerkin_heat', {'level': 8})


@pytest.fixture
def grid():
    return Grid1D(-8.0, 8.0, 401)


@pytest.fixture
def small_grid():
    return Grid1D(-6.0, 6.0, 201)


@pytest.fixture
def sim_cfg():
    return SimConfig(t_final=1.0, dt=1e-2, seed=7)


@pytest.fixture
def exp_f():
    return TestFunction('exponential', {'lam': 1.0})


@pytest.fixture
def logistic_pos():
    return TestFunction('logistic', {'scale': 1.0, 'slope': 2.0, 'offset': 0.5})


@pytest.fixture
def sample_config_data():
    """Minimal experiment mapping for the config loader and the suite."""
    return {
        'name': 'mini',
        'seed': 5,
        'model': {'preset': 'ou'},
        'simulation': {'dt': 0.01, 'n_samples': 500},
        'grid': {'lo': -6.0, 'hi': 6.0, 'm': 201, 'dt_pde': 0.01},
        'test_functions': {'logistic_pos': {'kind': 'logistic', 'params': {'slope': 2.0, 'offset': 0.5}}},
        'verifications': [
            {'kind': 'coupling_contraction', 'times': [0.5], 'pairs': [[0.0, 1.0]]},
            {'kind': 'log_harnack', 'route': 'oracle', 'f': 'logistic_pos', 'times': [1.0],
             'pairs': [[0.0, 0.5], [1.0, -1.0]]},
            {'kind': 'interpolation_path', 'times': [1.0]},
        ],
    }
