"""
Result files and CSV exports
"""

import json

import numpy as np
import pytest

from harnack_lab.models.results import VerificationReport
from harnack_lab.services.data.exports import export_grid_function, export_matrix, export_plan, read_grid_function
from harnack_lab.services.data.persistence import ReportStore, atomic_write


@pytest.fixture
def reports():
    return [
        VerificationReport('log_harnack/ou/t=1/a', 0.1, 0.3, 0.01,
                           {'t': 1.0, 'x': [0.0], 'y': [1.0], 'f': {'kind': 'logistic'}, 'harnack_term': 0.2}),
        VerificationReport('feller/ou', -0.2, 0.0, 1e-3,
                           {'modulus': [{'y': 0.1, 'distance': 0.1, 'actual_gap': 0.01, 'modulus': 0.1,
                                         'gap_lower': 0.0, 'eps_star': 0.01}]}),
        VerificationReport('galerkin_convergence/g', -0.5, 0.0, 0.0,
                           {'distances': [{'level': 4, 'D': 0.01, 'stderr': 1e-4, 'tail': 0.009},
                                          {'level': 8, 'D': 0.0, 'stderr': 0.0, 'tail': 0.0}]}),
        VerificationReport('dissipativity/ou', -0.5, -1.0, 1e-6),
    ]


class TestReportStore:

    def test_reports_json_is_sorted(self, tmp_path, reports):
        store = ReportStore(str(tmp_path))
        store.save_reports(reports)
        data = json.loads((tmp_path / 'reports.json').read_text(encoding='utf-8'))
        names = [item['name'] for item in data]
        assert names == sorted(names)
        assert data[0]['verdict'] == 'FAIL'

    def test_load_reports(self, tmp_path, reports):
        store = ReportStore(str(tmp_path))
        store.save_reports(reports)
        loaded = {r.name: r for r in store.load_reports()}
        assert loaded['log_harnack/ou/t=1/a'].slack == pytest.approx(0.2)
        assert loaded['log_harnack/ou/t=1/a'].metadata['harnack_term'] == 0.2

    def test_write_all(self, tmp_path, reports):
        paths = ReportStore(str(tmp_path)).write_all(reports)
        assert {p.name for p in paths} == {'reports.json', 'summary.csv', 'slack_vs_t.csv', 'galerkin_D.csv',
                                           'feller_modulus.csv'}
        summary = (tmp_path / 'summary.csv').read_text(encoding='utf-8').splitlines()
        assert summary[0] == 'name,verdict,lhs,rhs,slack,tolerance'
        assert len(summary) == 5
        slack = (tmp_path / 'slack_vs_t.csv').read_text(encoding='utf-8').splitlines()
        assert slack[1].startswith('log_harnack/ou/t=1/a,1.0,0.0,1.0,logistic,')
        assert len((tmp_path / 'galerkin_D.csv').read_text(encoding='utf-8').splitlines()) == 3

    def test_plot_data_only_when_present(self, tmp_path):
        paths = ReportStore(str(tmp_path)).write_all([VerificationReport('dissipativity/ou', -1.0, -1.0, 0.0)])
        assert {p.name for p in paths} == {'reports.json', 'summary.csv'}

    def test_atomic_write_leaves_no_temp_files(self, tmp_path):
        target = tmp_path / 'sub' / 'out.txt'
        atomic_write(target, 'one')
        atomic_write(target, 'two')
        assert target.read_text(encoding='utf-8') == 'two'
        assert [p.name for p in target.parent.iterdir()] == ['out.txt']


class TestExports:

    def test_grid_function(self, tmp_path):
        nodes = np.linspace(-1.0, 1.0, 5)
        path = export_grid_function(str(tmp_path / 'u.csv'), nodes, nodes ** 2)
        read_nodes, values = read_grid_function(str(path))
        np.testing.assert_allclose(read_nodes, nodes)
        np.testing.assert_allclose(values, nodes ** 2)

    def test_grid_function_shape_mismatch(self, tmp_path):
        with pytest.raises(ValueError):
            export_grid_function(str(tmp_path / 'u.csv'), np.zeros(3), np.zeros(4))

    def test_matrix(self, tmp_path):
        path = export_matrix(str(tmp_path / 'k.csv'), np.eye(3))
        rows = path.read_text(encoding='utf-8').splitlines()
        assert len(rows) == 3
        assert rows[0] == '1.0,0.0,0.0'

    def test_plan_is_sparse(self, tmp_path):
        plan = np.array([[0.5, 0.0], [0.0, 0.5]])
        lines = export_plan(str(tmp_path / 'plan.csv'), plan).read_text(encoding='utf-8').splitlines()
        assert lines == ['i,j,mass', '0,0,0.5', '1,1,0.5']
