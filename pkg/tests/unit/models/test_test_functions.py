"""
Parametric test functions
"""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from harnack_lab.core.config import Config
from harnack_lab.core.exceptions import PositivityViolationError, UsageError
from harnack_lab.models.test_functions import KINDS, TestFunction


@pytest.mark.parametrize("kind", sorted(KINDS))
def test_derivative_matches_finite_differences(kind):
    f = TestFunction(kind)
    u = np.linspace(-2.0, 2.0, 41)
    h = 1e-6
    numeric = (f(u + h) - f(u - h)) / (2.0 * h)
    np.testing.assert_allclose(f.derivative(u), numeric, rtol=1e-5, atol=1e-6)


def test_unknown_kind_and_parameter():
    with pytest.raises(UsageError):
        TestFunction('spline')
    with pytest.raises(UsageError):
        TestFunction('affine', {'slope': 1.0})


def test_nonnegative_surrogate_is_lifted_by_the_floor():
    f = TestFunction.nonnegative('logistic', slope=50.0)
    assert f.floor == Config.POSITIVITY_FLOOR
    assert np.all(f(np.array([-10.0, 0.0, 10.0])) > 0)
    assert np.all(np.isfinite(f.log(np.array([-10.0, 10.0]))))


def test_log_refuses_nonpositive_values():
    f = TestFunction('affine', {'a': 0.0, 'b': 1.0})
    with pytest.raises(PositivityViolationError):
        f.log(np.array([-1.0, 1.0]))


def test_projection_of_states_uses_first_coordinate_by_default():
    f = TestFunction('affine')
    states = np.array([[1.0, 5.0], [2.0, -3.0]])
    np.testing.assert_allclose(f(states), [1.0, 2.0])


def test_projection_along_direction():
    f = TestFunction('affine', direction=(0.0, 1.0))
    np.testing.assert_allclose(f(np.array([[1.0, 5.0]])), [5.0])
    with pytest.raises(UsageError):
        f(np.array([[1.0, 2.0, 3.0]]))


@pytest.mark.parametrize("kind, params, expected", [
    ('constant', {'c': 2.0}, 2.0),
    ('logistic', {'scale': 1.0, 'offset': 0.5}, 1.5),
    ('cosine', {'amp': 0.5, 'offset': 1.0}, 1.5),
    ('affine', {'a': 3.0, 'b': 0.0}, 3.0),
    ('exponential', {'lam': 1.0}, math.inf),
    ('affine', {'a': 0.0, 'b': 1.0}, math.inf),
])
def test_sup_norm(kind, params, expected):
    assert TestFunction(kind, params).sup_norm() == expected


@given(st.floats(0.1, 10.0))
def test_scaled_multiplies_values(c):
    f = TestFunction('logistic', {'scale': 2.0, 'offset': 0.5, 'slope': 1.5})
    u = np.linspace(-3.0, 3.0, 13)
    np.testing.assert_allclose(f.scaled(c)(u), c * f(u), rtol=1e-12)


def test_exponential_cannot_be_scaled():
    with pytest.raises(UsageError):
        TestFunction('exponential').scaled(2.0)


def test_to_dict_and_describe():
    f = TestFunction('exponential', {'lam': 0.5})
    data = f.to_dict()
    assert data['kind'] == 'exponential'
    assert data['params'] == {'lam': 0.5}
    assert data['direction'] is None
    assert f.describe() == 'exponential(lam=0.5)'
