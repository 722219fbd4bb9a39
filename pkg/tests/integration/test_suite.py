"""
End-to-end suite runs on small experiments
"""

import copy
import json

import pytest

from harnack_lab.core.exceptions import ConfigError
from harnack_lab.services.data.config_loader import load_config, parse_config
from harnack_lab.services.verification.suite import SuiteBuilder, build_model, run_suite


@pytest.fixture
def mini_config(sample_config_data, registry):
    return parse_config(sample_config_data, registry)


def test_mini_suite_passes(tmp_path, mini_config, registry):
    result = run_suite(mini_config, out_dir=str(tmp_path), workers=1, registry=registry)
    assert result.passed
    assert len(result.reports) == 4
    assert [r.name for r in result.reports] == sorted(r.name for r in result.reports)
    assert (tmp_path / 'reports.json').exists()
    assert (tmp_path / 'summary.csv').exists()
    assert (tmp_path / 'slack_vs_t.csv').exists()


def test_worker_count_does_not_change_results(tmp_path, mini_config, registry):
    run_suite(mini_config, out_dir=str(tmp_path / 'one'), workers=1, registry=registry)
    run_suite(mini_config, out_dir=str(tmp_path / 'three'), workers=3, registry=registry)
    one = (tmp_path / 'one' / 'reports.json').read_text(encoding='utf-8')
    three = (tmp_path / 'three' / 'reports.json').read_text(encoding='utf-8')
    assert one == three


@pytest.fixture
def busy_config(sample_config_data, registry):
    """More jobs than the largest pool, mixing Monte Carlo and grid work"""
    data = copy.deepcopy(sample_config_data)
    data['model'] = {'preset': 'tanh_perturbed'}
    data['verifications'] += [
        {'kind': 'log_harnack', 'name': f'mc_{i}', 'f': 'logistic_pos', 'times': [0.5, 1.0], 'random_pairs': 2}
        for i in range(6)
    ] + [
        {'kind': 'coupling_contraction', 'name': 'coupling_random', 'times': [1.0], 'random_pairs': 3},
        {'kind': 'gradient_estimate', 'f': 'logistic_pos'},
    ]
    return parse_config(data, registry)


@pytest.mark.parametrize("workers", [4, 8])
def test_large_pools_match_serial_run(tmp_path, busy_config, registry, workers):
    serial = run_suite(busy_config, out_dir=str(tmp_path / 'serial'), workers=1, registry=registry)
    pooled = run_suite(busy_config, out_dir=str(tmp_path / 'pooled'), workers=workers, registry=registry)
    assert len(pooled.reports) == len(serial.reports) > 8
    for name in ('reports.json', 'summary.csv', 'slack_vs_t.csv'):
        assert (tmp_path / 'pooled' / name).read_bytes() == (tmp_path / 'serial' / name).read_bytes()


def test_four_and_eight_workers_agree(tmp_path, busy_config, registry):
    run_suite(busy_config, out_dir=str(tmp_path / 'four'), workers=4, registry=registry)
    run_suite(busy_config, out_dir=str(tmp_path / 'eight'), workers=8, registry=registry)
    assert (tmp_path / 'four' / 'reports.json').read_bytes() == (tmp_path / 'eight' / 'reports.json').read_bytes()


def test_tolerance_scale(tmp_path, mini_config, registry):
    base = run_suite(mini_config, out_dir=str(tmp_path / 'a'), workers=1, registry=registry)
    scaled = run_suite(mini_config, out_dir=str(tmp_path / 'b'), workers=1, tolerance_scale=2.0, registry=registry)
    for r0, r1 in zip(base.reports, scaled.reports):
        assert r1.tolerance == pytest.approx(2.0 * r0.tolerance)
        assert r1.metadata['tolerance_scale'] == 2.0
    data = json.loads((tmp_path / 'b' / 'reports.json').read_text(encoding='utf-8'))
    assert all(item['metadata']['tolerance_scale'] == 2.0 for item in data)


@pytest.mark.parametrize("kwargs", [{'tolerance_scale': 0.0}, {'workers': 0}])
def test_rejects_bad_run_options(tmp_path, mini_config, registry, kwargs):
    with pytest.raises(ConfigError):
        run_suite(mini_config, out_dir=str(tmp_path), registry=registry, **kwargs)


def test_galerkin_check_on_a_scalar_model(sample_config_data, registry):
    data = copy.deepcopy(sample_config_data)
    data['verifications'].append({'kind': 'galerkin_tail', 'levels': [2, 4]})
    config = parse_config(data, registry)
    with pytest.raises(ConfigError, match="Galerkin"):
        SuiteBuilder(config, build_model(config, registry)).jobs()


def test_grid_check_on_a_galerkin_model(registry):
    config = parse_config({
        'name': 'bad', 'seed': 1, 'model': {'preset': 'galerkin_heat', 'params': {'level': 4}},
        'test_functions': {'one': {'kind': 'constant'}},
        'verifications': [{'kind': 'gradient_estimate', 'f': 'one'}],
    }, registry)
    with pytest.raises(ConfigError, match="one-dimensional"):
        SuiteBuilder(config, build_model(config, registry)).jobs()


def test_wrong_constant_is_falsified(tmp_path, registry):
    result = run_suite(load_config('wrong_k', registry), out_dir=str(tmp_path), workers=2, registry=registry)
    assert not result.passed
    assert {r.name.split('/')[0] for r in result.failures} == {'coupling_contraction', 'dissipativity'}


def test_sharpness_exports(tmp_path, registry):
    result = run_suite(load_config('ou_sharpness', registry), out_dir=str(tmp_path), workers=1, registry=registry)
    assert result.passed
    assert list((tmp_path / 'exports').iterdir())


@pytest.mark.slow
@pytest.mark.parametrize("name", ['ou', 'tanh_perturbed', 'galerkin_heat', 'galerkin_tail', 'grid_entropy'])
def test_bundled_experiments_pass(tmp_path, registry, name):
    result = run_suite(load_config(name, registry), out_dir=str(tmp_path), workers=4, registry=registry)
    assert result.passed, [r.name for r in result.failures]
