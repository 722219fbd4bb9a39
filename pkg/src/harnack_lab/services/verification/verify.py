"""
Numerical checks of the log-Harnack inequality and its consequences.

Every check returns a VerificationReport whose verdict is PASS iff
rhs - lhs >= -tolerance. Where a check is naturally a worst case over many
cells (grid nodes, pairs, epsilons) the report carries the worst excess as
lhs against rhs = 0 and keeps the per-cell values in its metadata.
"""

import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import xlogy

from ...core.config import Config
from ...core.exceptions import ModelValidationError, UsageError
from ...models.diffusion import (
    Box,
    DiffusionModel,
    GalerkinModel,
    Model,
    WeightedNorm,
    estimate_K,
    harnack_constant,
    hs_weight_sum,
    interpolation_weight,
    optimal_path_derivative,
    path_energy,
)
from ...models.results import MCEstimate, VerificationReport
from ...models.test_functions import TestFunction
from ..estimation.estimator import estimate_coupling_distance, paired_log_harnack_slack
from ..oracle.grid import GridKernel, Grid1D, adjoint_apply, interpolate, solve_backward
from ..simulation.engine import SimConfig, convolution_variance, simulate_batch
from ..transport.transport import TransportPlan, grid_measure, w0_exact

logger = logging.getLogger(__name__)


def _vector(v, dim: int) -> np.ndarray:
    """Point given as a scalar or a (possibly short) list, padded with zeros to ``dim``"""
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    if arr.ndim != 1 or arr.size > dim:
        raise UsageError(f"point {v!r} does not fit in dimension {dim}")
    out = np.zeros(dim)
    out[:arr.size] = arr
    return out


def _model_meta(m: Model) -> Dict:
    return {'model': m.name, 'params': dict(m.params), 'K': m.K, 'dim': m.dim}


def verify_log_harnack(m: Model, x, y, t: float, f: TestFunction, n: int, cfg: SimConfig,
                       workers: int = 1) -> VerificationReport:
    """P_t log f(x) <= log P_t f(y) + c_t ||sigma0^{-1}(x - y)||^2 by coupled Monte Carlo"""
    x, y = _vector(x, m.dim), _vector(y, m.dim)
    run_cfg = cfg.at_time(t)
    paired = paired_log_harnack_slack(m, x, y, t, f, n, cfg, workers=workers)
    tolerance = Config.VERDICT_SIGMAS * paired.stderr + Config.DISCRETIZATION_FACTOR * run_cfg.dt
    return VerificationReport(
        name=f"log_harnack/{m.name}",
        lhs=paired.lhs,
        rhs=paired.rhs,
        tolerance=tolerance,
        metadata={**_model_meta(m), 'route': 'mc', 'x': x, 'y': y, 't': t, 'f': f.to_dict(), 'n': n,
                  'sim': run_cfg.to_dict(), 'stderr': paired.stderr, 'harnack_term': paired.harnack_term},
    )


def oracle_sides(m: DiffusionModel, f: TestFunction, t: float, grid: Grid1D,
                  dt_pde: float) -> Tuple[np.ndarray, np.ndarray]:
    nodes = grid.nodes
    return solve_backward(m, f.log(nodes), t, grid, dt_pde), solve_backward(m, f(nodes), t, grid, dt_pde)


def verify_log_harnack_oracle(m: DiffusionModel, x: float, y: float, t: float, f: TestFunction, grid: Grid1D,
                              dt_pde: float = 1e-3, sides: Optional[Tuple[np.ndarray, np.ndarray]] = None
                              ) -> VerificationReport:
    """The 1-D inequality with both semigroups from the backward solver"""
    log_u, u = sides if sides is not None else oracle_sides(m, f, t, grid, dt_pde)
    lhs = float(interpolate(grid, log_u, x))
    pty = float(interpolate(grid, u, y))
    if not pty > 0:
        raise UsageError(f"P_t f(y) = {pty} is not positive on the grid")
    term = harnack_constant(m.K, t) * float(m.norm.sq(np.array([x - y])))
    return VerificationReport(
        name=f"log_harnack/{m.name}",
        lhs=lhs,
        rhs=math.log(pty) + term,
        tolerance=Config.ORACLE_TOLERANCE,
        metadata={**_model_meta(m), 'route': 'oracle', 'x': x, 'y': y, 't': t, 'f': f.to_dict(),
                  'grid': grid.to_dict(), 'dt_pde': dt_pde, 'harnack_term': term},
    )


def verify_log_harnack_sharpness(m: DiffusionModel, f: TestFunction, t: float, y: float, grid: Grid1D,
                                 dt_pde: float = 1e-3,
                                 d_bounds: Tuple[float, float] = (-3.0, 3.0)) -> VerificationReport:
    """
    Minimise the oracle slack over the displacement d = x - y. A minimum of
    zero means the constant c_t cannot be lowered for this (model, f).
    """
    log_u, u = oracle_sides(m, f, t, grid, dt_pde)
    c = harnack_constant(m.K, t)
    log_pty = math.log(float(interpolate(grid, u, y)))
    q2 = float(m.sigma0[0]) ** 2

    def slack(d: float) -> float:
        return log_pty + c * d * d / q2 - float(interpolate(grid, log_u, y + d))

    best = minimize_scalar(slack, bounds=d_bounds, method='bounded', options={'xatol': 1e-8})
    d_star, min_slack = float(best.x), float(best.fun)
    logger.info(f"Sharpness for {m.name}: min slack {min_slack:.3e} at d={d_star:.5f}")
    return VerificationReport(
        name=f"sharpness/{m.name}/{f.describe()}",
        lhs=abs(min_slack),
        rhs=0.0,
        tolerance=Config.ORACLE_TOLERANCE,
        metadata={**_model_meta(m), 'y': y, 't': t, 'f': f.to_dict(), 'd_star': d_star, 'min_slack': min_slack,
                  'harnack_constant': c, 'grid': grid.to_dict(), 'dt_pde': dt_pde, 'd_bounds': list(d_bounds)},
    )


def verify_coupling_contraction(m: Model, x, y, t: float, n: int, cfg: SimConfig,
                                workers: int = 1) -> VerificationReport:
    """E ||sigma0^{-1}(X_t - Y_t)||^2 <= e^{Kt} ||sigma0^{-1}(x - y)||^2 under synchronous coupling"""
    x, y = _vector(x, m.dim), _vector(y, m.dim)
    run_cfg = cfg.at_time(t)
    rhs = math.exp(m.K * t) * float(m.norm.sq(x - y))
    if rhs == 0.0:
        estimate = MCEstimate(mean=0.0, stderr=0.0, n=n)
    else:
        estimate = estimate_coupling_distance(m, x, y, t, n, cfg, workers=workers)
    tolerance = Config.VERDICT_SIGMAS * estimate.stderr + Config.DISCRETIZATION_FACTOR * run_cfg.dt * rhs
    return VerificationReport(
        name=f"coupling_contraction/{m.name}",
        lhs=estimate.mean,
        rhs=rhs,
        tolerance=tolerance,
        metadata={**_model_meta(m), 'x': x, 'y': y, 't': t, 'n': n, 'sim': run_cfg.to_dict(),
                  'estimate': estimate.to_dict(), 'ratio': estimate.mean / rhs if rhs > 0 else 0.0},
    )


def verify_gradient_estimate(m: DiffusionModel, f: TestFunction, t: float, grid: Grid1D, dt_pde: float = 1e-3,
                             window: float = 0.5) -> VerificationReport:
    """||sigma0 grad P_t f||^2 <= e^{Kt} P_t ||sigma0 grad f||^2 on the central window of the grid"""
    nodes = grid.nodes
    q2 = float(m.sigma0[0]) ** 2
    u = solve_backward(m, f(nodes), t, grid, dt_pde)
    lhs = q2 * np.gradient(u, grid.h) ** 2
    rhs = math.exp(m.K * t) * solve_backward(m, q2 * f.derivative(nodes) ** 2, t, grid, dt_pde)
    mask = grid.window(window)
    diff = lhs[mask] - rhs[mask]
    worst = float(np.max(diff))
    max_rhs = float(np.max(rhs[mask]))
    return VerificationReport(
        name=f"gradient_estimate/{m.name}/{f.describe()}",
        lhs=worst,
        rhs=0.0,
        tolerance=5e-3 * (1.0 + max_rhs),
        metadata={**_model_meta(m), 't': t, 'f': f.to_dict(), 'grid': grid.to_dict(), 'dt_pde': dt_pde,
                  'window': window, 'max_rhs': max_rhs, 'max_abs_gap': float(np.max(np.abs(diff)))},
    )


def _feller_bound(a: float, sup_sq: float, cost: float, eps: np.ndarray) -> np.ndarray:
    """eps^{-1} log(1 + eps a) + c_t d^2 / eps + eps ||f||^2"""
    return np.log1p(eps * a) / eps + cost / eps + eps * sup_sq


def verify_feller_modulus(m: DiffusionModel, f: TestFunction, t: float, x: float, y_list: Sequence[float],
                          grid: Grid1D, dt_pde: float = 1e-3,
                          eps_grid: Optional[np.ndarray] = None) -> VerificationReport:
    """
    P_t f(y) - eps ||f||^2 <= eps^{-1} log(1 + eps P_t f(x)) + c_t ||x - y||_0^2 / eps for every
    y and eps, and the same bound with x and y exchanged. Also records the continuity modulus
    min_eps bound - P_t f(x) and its mirror lower bound.
    """
    sup = f.sup_norm()
    if not math.isfinite(sup):
        raise UsageError(f"strong Feller check needs a bounded test function, got {f.describe()}")
    if np.any(f(grid.nodes) < 0):
        raise UsageError("strong Feller check needs a nonnegative test function")
    eps = np.logspace(-8, 3, 2201) if eps_grid is None else np.asarray(eps_grid, dtype=float)
    sup_sq = sup * sup
    c = harnack_constant(m.K, t)

    u = solve_backward(m, f(grid.nodes), t, grid, dt_pde)
    ptx = float(interpolate(grid, u, x))
    worst = -math.inf
    rows: List[Dict] = []
    for y in y_list:
        pty = float(interpolate(grid, u, y))
        cost = c * float(m.norm.sq(np.array([x - y])))
        upper = _feller_bound(ptx, sup_sq, cost, eps)
        lower = _feller_bound(pty, sup_sq, cost, eps)
        lower_excess = ptx - float(np.min(lower))
        worst = max(worst, float(np.max(pty - upper)), lower_excess)
        rows.append({
            'y': float(y),
            'distance': abs(float(y) - float(x)),
            'actual_gap': pty - ptx,
            'modulus': float(np.min(upper)) - ptx,
            'gap_lower': pty - float(np.min(lower)),
            'lower_excess': lower_excess,
            'eps_star': float(eps[int(np.argmin(upper))]),
        })
    return VerificationReport(
        name=f"feller_modulus/{m.name}/{f.describe()}",
        lhs=worst,
        rhs=0.0,
        tolerance=Config.ORACLE_TOLERANCE,
        metadata={**_model_meta(m), 'x': x, 't': t, 'f': f.to_dict(), 'sup_norm': sup, 'ptf_x': ptx,
                  'modulus': rows, 'grid': grid.to_dict(), 'dt_pde': dt_pde},
    )


def verify_heat_kernel_entropy(k: GridKernel, K: float, t: float, x_index: int,
                               name: str = 'grid') -> VerificationReport:
    """sum_z p_t(x,z) log p_t(x,z) mu(z) <= -log sum_y exp(-c_t ||x - y||^2) mu(y) for invariant mu"""
    if not 0 <= x_index < k.grid.m:
        raise UsageError(f"x_index {x_index} outside the grid")
    p = k.density[x_index]
    lhs = float(np.sum(xlogy(p, p) * k.mu))
    norm = WeightedNorm([k.sigma0])
    nodes = k.grid.nodes
    c = harnack_constant(K, t)
    dist = norm.sq((nodes[x_index] - nodes)[:, None])
    rhs = -math.log(float(np.sum(np.exp(-c * dist) * k.mu)))
    return VerificationReport(
        name=f"heat_kernel_entropy/{name}",
        lhs=lhs,
        rhs=rhs,
        tolerance=5e-3 * (1.0 + abs(rhs)),
        metadata={'model': name, 'K': K, 't': t, 'x': float(nodes[x_index]), 'x_index': x_index,
                  'grid': k.grid.to_dict()},
    )


def grid_density(k: GridKernel, kind: str) -> np.ndarray:
    """Probability densities with respect to mu: uniform, shifted (mu moved one cell right), right_half"""
    mu = k.mu
    if kind == 'uniform':
        return np.ones_like(mu)
    if kind == 'shifted':
        moved = np.concatenate([[0.0], mu[:-1]])
        moved[-1] += mu[-1]
        return moved / mu
    if kind == 'right_half':
        right = k.grid.nodes > k.grid.center
        return np.where(right, 1.0, 0.0) / float(np.sum(mu[right]))
    raise UsageError(f"unknown density kind '{kind}'")


def density_transport(k: GridKernel, f: np.ndarray) -> Tuple[float, TransportPlan]:
    """W_0(f mu, mu) on the grid with cost sigma0^{-1} |x - y|"""
    nodes = k.grid.nodes[:, None]
    return w0_exact(grid_measure(nodes, f * k.mu), grid_measure(nodes, k.mu), WeightedNorm([k.sigma0]))


def verify_entropy_cost(k: GridKernel, K: float, t: float, f: np.ndarray,
                        name: str = 'grid', label: str = 'density') -> VerificationReport:
    """mu((P_t^* f) log P_t^* f) <= c_t W_0(f mu, mu)^2"""
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise UsageError("density must be nonnegative")
    mass = float(np.sum(f * k.mu))
    if abs(mass - 1.0) > 1e-8:
        raise UsageError(f"density is not normalised against mu (mu(f) = {mass:.12g})")

    g = adjoint_apply(k, f)
    lhs = float(np.sum(xlogy(g, g) * k.mu))
    cost, plan = density_transport(k, f)
    rhs = harnack_constant(K, t) * cost
    return VerificationReport(
        name=f"entropy_cost/{name}/{label}",
        lhs=lhs,
        rhs=rhs,
        tolerance=5e-3 * (1.0 + abs(rhs)),
        metadata={'model': name, 'K': K, 't': t, 'density': label, 'w0_cost': cost,
                  'duality_gap': plan.duality_gap, 'grid': k.grid.to_dict()},
    )


def galerkin_distances(g: GalerkinModel, levels: Sequence[int], x0, t: float, n_mc: int,
                       cfg: SimConfig, workers: int = 1) -> Dict[int, MCEstimate]:
    """
    D(n) = E ||X_t^n - X_t^{n_ref}||^2 for every level, all levels driven by the
    leading modes of the same increments. The largest level is the reference.
    """
    levels = sorted(int(n) for n in levels)
    if len(levels) < 2 or len(set(levels)) != len(levels):
        raise UsageError("need at least two distinct levels")
    n_ref = levels[-1]
    if n_ref > g.level:
        raise UsageError(f"reference level {n_ref} exceeds the model level {g.level}")
    x0 = _vector(x0, n_ref)
    nonzero = np.nonzero(x0)[0]
    if nonzero.size and nonzero[-1] >= levels[0]:
        raise UsageError(f"x0 must lie in the span of the first {levels[0]} modes")

    run_cfg = cfg.at_time(t)
    if run_cfg.scheme != 'exponential_euler':
        run_cfg = SimConfig(run_cfg.t_final, run_cfg.dt, run_cfg.seed, 'exponential_euler')
    reference = simulate_batch(g.truncate(n_ref), x0, run_cfg, n_mc, noise_dim=n_ref, workers=workers)

    out: Dict[int, MCEstimate] = {}
    for n in levels[:-1]:
        ends = simulate_batch(g.truncate(n), x0[:n], run_cfg, n_mc, noise_dim=n_ref, workers=workers)
        sq = np.sum((ends - reference[:, :n]) ** 2, axis=1) + np.sum(reference[:, n:] ** 2, axis=1)
        out[n] = MCEstimate.from_samples(sq)
        logger.debug(f"Galerkin D({n}) = {out[n].mean:.4e} +/- {out[n].stderr:.1e}")
    out[n_ref] = MCEstimate(mean=0.0, stderr=0.0, n=n_mc)
    return out


def truncation_tail(g: GalerkinModel, n: int, n_ref: int, t: float) -> float:
    """sum_{n < i <= n_ref} q_i^2 (1 - e^{-2 lambda_i t}) / (2 lambda_i)"""
    var = convolution_variance(g.eigenvalues[:n_ref], g.weights[:n_ref], t)
    return float(np.sum(var[n:]))


def _distance_meta(g: GalerkinModel, distances: Dict[int, MCEstimate], t: float) -> List[Dict]:
    n_ref = max(distances)
    return [{'level': n, 'D': est.mean, 'stderr': est.stderr, 'tail': truncation_tail(g, n, n_ref, t)}
            for n, est in sorted(distances.items())]


def verify_galerkin_convergence(g: GalerkinModel, levels: Sequence[int], x0, t: float, n_mc: int, cfg: SimConfig,
                                threshold: Optional[float] = None, max_ratio: Optional[float] = None,
                                workers: int = 1) -> VerificationReport:
    """
    D(n) nonincreasing within 3 standard errors and D at the second largest
    level below ``threshold`` (default: ten times the additive-noise tail there).
    lhs is the worst normalised excess over these criteria.
    """
    distances = galerkin_distances(g, levels, x0, t, n_mc, cfg, workers)
    ordered = sorted(distances)
    n_ref, n_last = ordered[-1], ordered[-2]
    if threshold is None:
        threshold = 10.0 * truncation_tail(g, n_last, n_ref, t)

    excess = [distances[n_last].mean / threshold - 1.0]
    for lo, hi in zip(ordered[:-2], ordered[1:-1]):
        d_lo, d_hi = distances[lo], distances[hi]
        allowance = Config.VERDICT_SIGMAS * math.hypot(d_lo.stderr, d_hi.stderr)
        excess.append((d_hi.mean - d_lo.mean - allowance) / max(d_lo.mean, 1e-300))
    ratio = distances[n_last].mean / distances[ordered[0]].mean if distances[ordered[0]].mean > 0 else 0.0
    if max_ratio is not None:
        excess.append(ratio / max_ratio - 1.0)

    return VerificationReport(
        name=f"galerkin_convergence/{g.name}",
        lhs=max(excess),
        rhs=0.0,
        tolerance=0.0,
        metadata={**_model_meta(g), 'levels': ordered, 'x0': _vector(x0, n_ref), 't': t, 'n': n_mc,
                  'sim': cfg.at_time(t).to_dict(), 'threshold': threshold, 'ratio': ratio, 'max_ratio': max_ratio,
                  'distances': _distance_meta(g, distances, t)},
    )


def verify_galerkin_tail(g: GalerkinModel, levels: Sequence[int], x0, t: float, n_mc: int, cfg: SimConfig,
                         workers: int = 1) -> VerificationReport:
    """With F = 0 and sigma1 = 0 the measured D(n) equals the truncated tail of mode variances"""
    distances = galerkin_distances(g, levels, x0, t, n_mc, cfg, workers)
    rows = _distance_meta(g, distances, t)
    worst = max(abs(r['D'] - r['tail']) - Config.VERDICT_SIGMAS * r['stderr'] for r in rows)
    return VerificationReport(
        name=f"galerkin_tail/{g.name}",
        lhs=worst,
        rhs=0.0,
        tolerance=0.0,
        metadata={**_model_meta(g), 'levels': sorted(distances), 't': t, 'n': n_mc,
                  'sim': cfg.at_time(t).to_dict(), 'distances': rows},
    )


def verify_galerkin_log_harnack(g: GalerkinModel, x, y, t: float, f: TestFunction, n: int, cfg: SimConfig,
                                workers: int = 1) -> VerificationReport:
    """The finite-level inequality for a Galerkin truncation, stepped with exponential Euler"""
    run_cfg = SimConfig(cfg.t_final, cfg.dt, cfg.seed, 'exponential_euler')
    report = verify_log_harnack(g, x, y, t, f, n, run_cfg, workers=workers)
    return VerificationReport(f"galerkin_log_harnack/{g.name}", report.lhs, report.rhs, report.tolerance,
                              report.metadata)


def verify_galerkin_dissipativity(g: GalerkinModel, half_width: float, budget: int, seed: int,
                                  hs_horizon: int = 1_000_000) -> VerificationReport:
    """
    The certified quotient supremum on [-w, w]^n must not exceed the model's K;
    the full weight law must also satisfy sum q_i^2 / (1 + lambda_i) < inf.
    """
    if g.weight_law is None or g.eigen_law is None:
        raise UsageError("summability check needs the full weight and eigenvalue laws")
    total, tail = hs_weight_sum(g.weight_law, g.eigen_law, hs_horizon)
    if not math.isfinite(total) or tail > 1e-3 * total:
        raise ModelValidationError(f"weights of '{g.name}' are not square summable against 1 + lambda "
                                   f"(partial sum {total:.4g}, second-half tail {tail:.3g})")
    k_est = estimate_K(g, Box.cube(g.level, half_width), budget, seed=seed)
    return VerificationReport(
        name=f"galerkin_dissipativity/{g.name}",
        lhs=k_est,
        rhs=g.K,
        tolerance=1e-6 * (1.0 + abs(g.K)),
        metadata={**_model_meta(g), 'half_width': half_width, 'budget': budget, 'seed': seed,
                  'hs_sum': total, 'hs_tail': tail},
    )


def verify_dissipativity(m: Model, half_width: float, budget: int, seed: int) -> VerificationReport:
    """estimate_K on a box must stay below the model's K"""
    k_est = estimate_K(m, Box.cube(m.dim, half_width), budget, seed=seed)
    return VerificationReport(
        name=f"dissipativity/{m.name}",
        lhs=k_est,
        rhs=m.K,
        tolerance=1e-6 * (1.0 + abs(m.K)),
        metadata={**_model_meta(m), 'half_width': half_width, 'budget': budget, 'seed': seed},
    )


def verify_interpolation_path(K: float, t: float, n_nodes: int = 4001) -> VerificationReport:
    """
    The path energy of the optimal weight equals the Harnack constant and the
    linear path s / t does no better.
    """
    c = harnack_constant(K, t)
    optimal = path_energy(K, t, optimal_path_derivative(K, t), n_nodes)
    linear = path_energy(K, t, lambda s: np.full_like(np.asarray(s, dtype=float), 1.0 / t), n_nodes)
    endpoint = float(interpolation_weight(K, t, t))
    worst = max(abs(optimal - c) / c, (optimal - linear) / c, abs(endpoint - 1.0))
    return VerificationReport(
        name=f"interpolation_path/K={K:g}/t={t:g}",
        lhs=worst,
        rhs=0.0,
        tolerance=1e-6,
        metadata={'K': K, 't': t, 'harnack_constant': c, 'optimal_energy': optimal, 'linear_energy': linear},
    )
