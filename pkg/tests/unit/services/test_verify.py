"""
Verification checks: log-Harnack, its consequences and the Galerkin limit
"""

import math

import numpy as np
import pytest

from harnack_lab.core.exceptions import UsageError
from harnack_lab.models.test_functions import TestFunction
from harnack_lab.services.oracle.grid import Grid1D, build_kernel
from harnack_lab.services.simulation.engine import SimConfig
from harnack_lab.services.verification.verify import (
    galerkin_distances,
    grid_density,
    truncation_tail,
    verify_coupling_contraction,
    verify_dissipativity,
    verify_entropy_cost,
    verify_feller_modulus,
    verify_galerkin_convergence,
    verify_galerkin_dissipativity,
    verify_galerkin_log_harnack,
    verify_galerkin_tail,
    verify_gradient_estimate,
    verify_heat_kernel_entropy,
    verify_interpolation_path,
    verify_log_harnack,
    verify_log_harnack_oracle,
    verify_log_harnack_sharpness,
)

CFG = SimConfig(t_final=1.0, dt=1e-2, seed=2024)


class TestLogHarnack:

    def test_equal_points_constant_function(self, tanh_model):
        report = verify_log_harnack(tanh_model, 0.7, 0.7, 1.0, TestFunction('constant', {'c': 3.0}), 200, CFG)
        assert report.lhs == pytest.approx(report.rhs)
        assert report.passed

    def test_monte_carlo_route(self, ou_model, logistic_pos):
        report = verify_log_harnack(ou_model, 0.5, -0.5, 1.0, logistic_pos, 20000, CFG)
        assert report.passed
        assert report.metadata['route'] == 'mc'
        assert report.metadata['harnack_term'] > 0

    @pytest.mark.parametrize("t", [0.25, 1.0, 4.0])
    def test_oracle_route_on_tanh(self, tanh_model, grid, logistic_pos, t):
        for x in (-2.0, 0.0, 2.0):
            for y in (-2.0, 0.0, 2.0):
                report = verify_log_harnack_oracle(tanh_model, x, y, t, logistic_pos, grid, 1e-2)
                assert report.passed, report.name

    @pytest.mark.parametrize("c", [0.01, 3.0, 250.0])
    def test_scaling_f_leaves_slack_unchanged(self, tanh_model, c):
        f = TestFunction('logistic', {'scale': 1.0, 'slope': 2.0, 'offset': 0.5})
        scaled = TestFunction('logistic', {'scale': c, 'slope': 2.0, 'offset': 0.5 * c})
        base = verify_log_harnack(tanh_model, 0.4, -0.6, 1.0, f, 4000, CFG)
        report = verify_log_harnack(tanh_model, 0.4, -0.6, 1.0, scaled, 4000, CFG)
        assert report.lhs - base.lhs == pytest.approx(math.log(c), abs=1e-9)
        assert report.rhs - base.rhs == pytest.approx(math.log(c), abs=1e-9)
        assert report.slack == pytest.approx(base.slack, abs=1e-9)
        assert report.tolerance == pytest.approx(base.tolerance, rel=1e-6)

    @pytest.mark.parametrize("c", [0.01, 250.0])
    def test_scaling_f_on_the_oracle_route(self, tanh_model, small_grid, c):
        f = TestFunction('logistic', {'scale': 1.0, 'slope': 2.0, 'offset': 0.5})
        scaled = TestFunction('logistic', {'scale': c, 'slope': 2.0, 'offset': 0.5 * c})
        base = verify_log_harnack_oracle(tanh_model, 1.0, -1.0, 0.5, f, small_grid, 1e-2)
        report = verify_log_harnack_oracle(tanh_model, 1.0, -1.0, 0.5, scaled, small_grid, 1e-2)
        assert report.slack == pytest.approx(base.slack, abs=1e-8)

    def test_ou_constant_is_sharp(self, ou_model, exp_f):
        report = verify_log_harnack_sharpness(ou_model, exp_f, 1.0, 0.0, Grid1D(-8.0, 8.0, 801), 1e-3)
        # minimiser of v/2 + c d^2 - e^{-1/2} d
        assert report.metadata['d_star'] == pytest.approx((math.e - 1.0) * math.exp(-0.5), abs=1e-2)
        assert report.metadata['d_star'] == pytest.approx(1.0422, abs=1e-2)
        assert abs(report.metadata['min_slack']) < 1e-3
        assert report.passed


class TestCoupling:

    def test_ou_ratio_is_one(self, ou_model):
        report = verify_coupling_contraction(ou_model, 1.0, 0.0, 1.0, 1000, CFG)
        assert report.passed
        assert report.metadata['ratio'] == pytest.approx(1.0, abs=10 * CFG.dt)

    def test_same_start(self, tanh_model):
        report = verify_coupling_contraction(tanh_model, 0.3, 0.3, 1.0, 1000, CFG)
        assert report.lhs == 0.0 and report.rhs == 0.0
        assert report.passed

    def test_understated_rate_is_caught(self, registry):
        wrong = registry.build('ou', K_offset=-1.0)
        report = verify_coupling_contraction(wrong, 1.0, 0.0, 1.0, 1000, CFG)
        assert not report.passed

    def test_tanh_random_pairs(self, tanh_model):
        rng = np.random.default_rng(8)
        for x, y in rng.uniform(-2.0, 2.0, (5, 2)):
            assert verify_coupling_contraction(tanh_model, x, y, 1.0, 2000, CFG).passed


class TestGradient:

    def test_affine_ou_is_an_equality(self, ou_model, grid):
        report = verify_gradient_estimate(ou_model, TestFunction('affine'), 1.0, grid, 1e-2)
        assert report.passed
        assert report.metadata['max_abs_gap'] < 1e-3
        assert report.metadata['max_rhs'] == pytest.approx(math.exp(-1.0), abs=1e-3)

    def test_constant_function(self, tanh_model, grid):
        report = verify_gradient_estimate(tanh_model, TestFunction('constant'), 1.0, grid, 1e-2)
        assert report.metadata['max_abs_gap'] < 1e-9

    def test_tanh_logistic(self, tanh_model, grid):
        assert verify_gradient_estimate(tanh_model, TestFunction('logistic'), 1.0, grid, 1e-2).passed


class TestFeller:

    def test_modulus_shrinks_with_distance(self, ou_model, grid):
        report = verify_feller_modulus(ou_model, TestFunction('logistic'), 1.0, 0.0, [0.5, 0.1, 0.02], grid, 1e-2)
        assert report.passed
        moduli = [row['modulus'] for row in report.metadata['modulus']]
        assert moduli[0] > moduli[1] > moduli[2]
        assert moduli[-1] < 0.05
        for row in report.metadata['modulus']:
            assert abs(row['actual_gap']) <= row['modulus']

    def test_exchanged_bound_holds(self, ou_model, grid):
        report = verify_feller_modulus(ou_model, TestFunction('logistic'), 1.0, 0.0, [-1.0, -0.2, 0.4, 1.5], grid,
                                       1e-2)
        assert report.passed
        for row in report.metadata['modulus']:
            assert row['lower_excess'] <= report.tolerance

    def test_exchanged_bound_enters_verdict(self, registry, grid):
        # c_t is ~1e-8 for this K, so both bounds collapse to P_t f at the other point
        wrong = registry.build('ou', K_offset=-20.0)
        report = verify_feller_modulus(wrong, TestFunction('logistic'), 1.0, 0.0, [-1.0], grid, 1e-2)
        row = report.metadata['modulus'][0]
        assert row['actual_gap'] < 0
        assert row['lower_excess'] > 10 * report.tolerance
        assert report.lhs == pytest.approx(row['lower_excess'])
        assert not report.passed

    def test_equal_point(self, ou_model, grid):
        assert verify_feller_modulus(ou_model, TestFunction('logistic'), 1.0, 0.3, [0.3], grid, 1e-2).passed

    def test_unbounded_function(self, ou_model, grid, exp_f):
        with pytest.raises(UsageError, match="bounded"):
            verify_feller_modulus(ou_model, exp_f, 1.0, 0.0, [0.1], grid, 1e-2)


class TestGridInequalities:

    @pytest.fixture
    def kernel(self, ou_model, small_grid):
        return build_kernel(ou_model, 1.0, small_grid)

    @pytest.mark.parametrize("offset", [0.0, 1.0, -2.0])
    def test_heat_kernel_entropy(self, kernel, small_grid, offset):
        report = verify_heat_kernel_entropy(kernel, -1.0, 1.0, small_grid.index_of(offset), name='ou')
        assert report.passed
        assert report.lhs >= 0

    def test_heat_kernel_index_range(self, kernel):
        with pytest.raises(UsageError):
            verify_heat_kernel_entropy(kernel, -1.0, 1.0, 10_000)

    def test_uniform_density_costs_nothing(self, kernel):
        report = verify_entropy_cost(kernel, -1.0, 1.0, grid_density(kernel, 'uniform'), name='ou', label='uniform')
        assert report.lhs == pytest.approx(0.0, abs=1e-8)
        assert report.rhs == pytest.approx(0.0, abs=1e-12)
        assert report.passed

    @pytest.mark.parametrize("kind", ['shifted', 'right_half'])
    def test_entropy_cost(self, kernel, kind):
        density = grid_density(kernel, kind)
        assert float(np.sum(density * kernel.mu)) == pytest.approx(1.0)
        report = verify_entropy_cost(kernel, -1.0, 1.0, density, name='ou', label=kind)
        assert report.rhs > 0
        assert report.passed

    def test_unnormalised_density(self, kernel):
        with pytest.raises(UsageError, match="normalised"):
            verify_entropy_cost(kernel, -1.0, 1.0, 2.0 * np.ones(kernel.grid.m))


class TestGalerkin:

    def test_reference_level_is_zero(self, galerkin_model):
        cfg = SimConfig(0.1, 1e-2, 5, 'exponential_euler')
        distances = galerkin_distances(galerkin_model, [2, 8], 0.0, 0.1, 500, cfg)
        assert distances[8].mean == 0.0
        assert distances[2].mean > 0

    def test_levels_must_differ(self, galerkin_model):
        with pytest.raises(UsageError):
            galerkin_distances(galerkin_model, [4], 0.0, 0.1, 500, CFG)

    def test_start_outside_leading_modes(self, galerkin_model):
        with pytest.raises(UsageError, match="span"):
            galerkin_distances(galerkin_model, [2, 8], [0.0, 0.0, 1.0], 0.1, 500, CFG)

    def test_additive_tail_matches(self, registry):
        g = registry.build('galerkin_heat', {'level': 16, 'amp_F': 0.0, 'amp_sigma1': 0.0})
        report = verify_galerkin_tail(g, [2, 4, 16], 0.0, 0.1, 4000, CFG)
        assert report.passed
        for row in report.metadata['distances']:
            assert row['tail'] == pytest.approx(truncation_tail(g, row['level'], 16, 0.1))

    def test_convergence(self, registry):
        g = registry.build('galerkin_heat', {'level': 16})
        report = verify_galerkin_convergence(g, [2, 4, 8, 16], 0.5, 0.1, 2000, CFG, max_ratio=0.2)
        assert report.passed
        d = [row['D'] for row in report.metadata['distances']]
        assert d == sorted(d, reverse=True)

    def test_finite_level_log_harnack(self, galerkin_model, logistic_pos):
        report = verify_galerkin_log_harnack(galerkin_model, [0.0], [0.2], 0.1, logistic_pos, 4000, CFG)
        assert report.passed
        assert report.name.startswith('galerkin_log_harnack/')
        assert report.metadata['sim']['scheme'] == 'exponential_euler'

    @pytest.mark.parametrize("x, y", [([0.5], [0.0]), ([0.3, 0.1], [-0.2, 0.0]), ([1.0, -0.5, 0.2], [0.0] * 3)])
    def test_coupling_contraction(self, galerkin_model, x, y):
        cfg = SimConfig(0.1, 1e-2, 5, 'exponential_euler')
        report = verify_coupling_contraction(galerkin_model, x, y, 0.1, 2000, cfg)
        assert report.passed, report.metadata['ratio']
        assert 0.0 < report.metadata['ratio'] <= 1.0 + 10 * cfg.dt

    def test_dissipativity(self, galerkin_model):
        report = verify_galerkin_dissipativity(galerkin_model, 2.0, 2000, seed=3)
        assert report.passed
        assert report.metadata['hs_tail'] <= 1e-3 * report.metadata['hs_sum']


class TestModelChecks:

    def test_tanh_dissipativity(self, tanh_model):
        assert verify_dissipativity(tanh_model, 5.0, 20_000, seed=1).passed

    def test_overstated_rate_is_caught(self, registry):
        wrong = registry.build('ou', K_offset=-1.0)
        assert not verify_dissipativity(wrong, 5.0, 5000, seed=1).passed

    @pytest.mark.parametrize("K, t", [(-1.0, 1.0), (0.0, 0.5), (2.0, 0.25), (-1.99, 4.0), (1e-9, 1.0)])
    def test_interpolation_path(self, K, t):
        report = verify_interpolation_path(K, t)
        assert report.passed
        assert report.metadata['optimal_energy'] <= report.metadata['linear_energy'] + 1e-9
