"""
Preset registry
"""

import pytest

from harnack_lab.core.exceptions import ConfigError
from harnack_lab.models.diffusion import GalerkinModel
from harnack_lab.models.presets import PresetRegistry, get_registry


def test_builtin_names(registry):
    assert {'ou', 'brownian', 'tanh_perturbed', 'galerkin_heat'} <= set(registry.names())


@pytest.mark.parametrize("name, params, K", [
    ('ou', {}, -1.0),
    ('ou', {'theta': 2.0}, -4.0),
    ('brownian', {'dim': 3}, 0.0),
    ('tanh_perturbed', {}, -1.99),
])
def test_dissipativity_constants(registry, name, params, K):
    model = registry.build(name, params)
    assert model.K == pytest.approx(K)
    assert model.name == name


def test_galerkin_constant(registry):
    g = registry.build('galerkin_heat')
    assert isinstance(g, GalerkinModel)
    assert g.level == 64
    assert g.K == pytest.approx(-19.667, abs=1e-3)
    assert g.eigenvalues[1] == pytest.approx(4.0 * g.eigenvalues[0])


def test_k_override_and_offset(registry):
    assert registry.build('ou', K=-3.0).K == pytest.approx(-3.0)
    assert registry.build('ou', K_offset=-1.0).K == pytest.approx(-2.0)


def test_unknown_preset_lists_known_names(registry):
    with pytest.raises(ConfigError, match="unknown preset 'nope'.*ou"):
        registry.build('nope')


def test_unknown_parameter_is_named(registry):
    with pytest.raises(ConfigError, match="'gamma'"):
        registry.build('ou', {'gamma': 1.0})


def test_non_finite_parameter(registry):
    with pytest.raises(ConfigError, match="'theta'"):
        registry.build('ou', {'theta': float('nan')})


def test_user_preset_file(tmp_path):
    path = tmp_path / 'presets.yaml'
    path.write_text(
        "presets:\n"
        "  stiff_ou:\n"
        "    family: ou\n"
        "    params: {theta: 3.0}\n"
        "    description: strongly mean-reverting OU\n",
        encoding='utf-8',
    )
    registry = get_registry(str(path))
    assert 'stiff_ou' in registry.names()
    assert registry.build('stiff_ou').K == pytest.approx(-6.0)
    listed = {p['name']: p for p in registry.listing()}
    assert listed['stiff_ou']['source'] == str(path)


@pytest.mark.parametrize("text, message", [
    ("presets:\n  bad:\n    params: {theta: 1.0}\n", "'family'"),
    ("presets:\n  bad:\n    family: heat\n", "unknown family"),
    ("presets:\n  bad:\n    family: ou\n    colour: red\n", "'colour'"),
    ("presets: [1, 2]\n", "'presets' mapping"),
])
def test_malformed_preset_files(tmp_path, text, message):
    path = tmp_path / 'presets.yaml'
    path.write_text(text, encoding='utf-8')
    with pytest.raises(ConfigError, match=message):
        PresetRegistry().load_file(str(path))


def test_empty_registry_path_gives_builtins_only():
    assert get_registry('').names() == PresetRegistry().names()


def test_missing_preset_file():
    with pytest.raises(ConfigError, match="not found"):
        get_registry('/nonexistent/presets.yaml')
