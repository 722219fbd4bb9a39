"""
Deterministic 1-D oracles on a reflecting grid.

The generator L u = (1/2) sigma^2 u'' + b u' is discretised with central
differences and ghost-point (zero-derivative) boundaries, which makes L a
conservative Q-matrix whenever the cell Peclet number |b| h / sigma^2 is at
most 1. P_t f is obtained by Crank-Nicolson time stepping, the grid kernel by
the matrix exponential of t L.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.linalg import expm
from scipy.sparse.linalg import splu

from ...core.config import Config
from ...core.exceptions import OracleError, SolverError, UsageError
from ...models.diffusion import Box, DiffusionModel
from ...models.results import VerificationReport
from ...models.test_functions import TestFunction
from ..simulation.engine import SimConfig, exit_fraction

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Grid1D:
    """Equispaced nodes on [lo, hi]"""
    lo: float
    hi: float
    m: int

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or self.hi <= self.lo:
            raise UsageError(f"empty grid interval [{self.lo}, {self.hi}]")
        if self.m < Config.MIN_GRID_POINTS:
            raise UsageError(f"grid needs at least {Config.MIN_GRID_POINTS} points, got {self.m}")

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.m)

    @property
    def h(self) -> float:
        return (self.hi - self.lo) / (self.m - 1)

    @property
    def center(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def refined(self) -> 'Grid1D':
        """Same interval with the spacing halved"""
        return Grid1D(self.lo, self.hi, 2 * self.m - 1)

    def index_of(self, x: float) -> int:
        return int(np.argmin(np.abs(self.nodes - x)))

    def window(self, fraction: float = 0.5) -> np.ndarray:
        """Mask of the nodes within ``fraction`` of the half-width around the center"""
        half = 0.5 * (self.hi - self.lo)
        return np.abs(self.nodes - self.center) <= fraction * half + 1e-12

    def to_dict(self) -> Dict:
        """Convert to dictionary"""
        return {'lo': self.lo, 'hi': self.hi, 'm': self.m}


@dataclass(frozen=True)
class GridKernel:
    """Row-stochastic kernel of the grid chain at time t and its invariant measure"""
    kernel: np.ndarray
    mu: np.ndarray
    t: float
    grid: Grid1D
    sigma0: float = 1.0

    @property
    def density(self) -> np.ndarray:
        """p_t(x, y) with respect to mu"""
        return self.kernel / self.mu[None, :]

    @property
    def row_sum_error(self) -> float:
        return float(np.max(np.abs(self.kernel.sum(axis=1) - 1.0)))


def _require_1d(m: DiffusionModel) -> None:
    if not isinstance(m, DiffusionModel) or m.dim != 1:
        raise UsageError("grid oracles need a one-dimensional DiffusionModel")


def _grid_values(values, grid: Grid1D, name: str = 'f') -> np.ndarray:
    if isinstance(values, TestFunction):
        values = values(grid.nodes)
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.m,):
        raise UsageError(f"{name} has shape {values.shape}, grid has {grid.m} nodes")
    if not np.all(np.isfinite(values)):
        raise UsageError(f"{name} must be finite on the grid")
    return values


def _coefficients(m: DiffusionModel, grid: Grid1D) -> Tuple[np.ndarray, np.ndarray]:
    x = grid.nodes[:, None]
    b = m.drift(x)[:, 0]
    s = m.diffusion(x)
    a = 0.5 * np.einsum('bki,bki->b', s, s)
    return a, b


def generator_matrix(m: DiffusionModel, grid: Grid1D) -> sparse.csr_matrix:
    """Tridiagonal generator with reflecting boundaries; rows sum to zero"""
    _require_1d(m)
    a, b = _coefficients(m, grid)
    h = grid.h
    lower = a / h ** 2 - b / (2.0 * h)
    upper = a / h ** 2 + b / (2.0 * h)
    if np.min(lower[1:-1]) < 0 or np.min(upper[1:-1]) < 0:
        peclet = float(np.max(np.abs(b) * h / (2.0 * a)))
        raise SolverError(f"grid too coarse for the drift of '{m.name}' (cell Peclet number {peclet:.3g} > 1)")

    sub = lower[1:].copy()
    sup = upper[:-1].copy()
    # ghost points u_{-1} = u_1 and u_m = u_{m-2}
    sup[0] = 2.0 * a[0] / h ** 2
    sub[-1] = 2.0 * a[-1] / h ** 2
    main = -2.0 * a / h ** 2
    return sparse.diags([sub, main, sup], [-1, 0, 1], format='csc')


def _time_steps(t: float, dt_pde: float) -> Tuple[int, float]:
    if not t > 0:
        raise UsageError(f"t must be positive, got {t}")
    if not dt_pde > 0:
        raise UsageError(f"dt_pde must be positive, got {dt_pde}")
    steps = max(1, math.ceil(t / dt_pde - Config.TIME_GRID_TOL))
    return steps, t / steps


class _Stepper:
    """Factorised Crank-Nicolson step with residual control"""

    def __init__(self, L: sparse.csc_matrix, dt: float):
        identity = sparse.identity(L.shape[0], format='csc')
        self.lhs = (identity - 0.5 * dt * L).tocsc()
        self.rhs = (identity + 0.5 * dt * L).tocsr()
        self.lu = splu(self.lhs)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        u = self.lu.solve(rhs)
        residual = float(np.max(np.abs(self.lhs @ u - rhs)))
        if not residual <= Config.SOLVER_RESIDUAL * (1.0 + float(np.max(np.abs(rhs)))):
            raise SolverError(f"linear solve residual {residual:.3e} exceeds {Config.SOLVER_RESIDUAL:g}")
        return u

    def implicit_half(self, u: np.ndarray) -> np.ndarray:
        """Backward Euler over dt/2 uses the same matrix I - (dt/2) L"""
        return self.solve(u)

    def crank_nicolson(self, u: np.ndarray, source: Optional[np.ndarray] = None) -> np.ndarray:
        rhs = self.rhs @ u
        if source is not None:
            rhs = rhs + source
        return self.solve(rhs)


def solve_backward_path(m: DiffusionModel, f, t: float, grid: Grid1D, dt_pde: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Trajectory u(tau) = P_tau f at tau = 0, dt, ..., t.

    The first step is two backward Euler half steps (Rannacher start-up) so
    that non-smooth data does not excite undamped Crank-Nicolson modes.
    """
    _require_1d(m)
    u = _grid_values(f, grid)
    steps, dt = _time_steps(t, dt_pde)
    stepper = _Stepper(generator_matrix(m, grid), dt)

    path = np.empty((steps + 1, grid.m))
    path[0] = u
    u = stepper.implicit_half(stepper.implicit_half(u))
    path[1] = u
    for k in range(2, steps + 1):
        u = stepper.crank_nicolson(u)
        path[k] = u
    logger.debug(f"Backward solve for {m.name}: {steps} steps of {dt:.3g} on {grid.m} nodes")
    return np.linspace(0.0, t, steps + 1), path


def solve_backward(m: DiffusionModel, f, t: float, grid: Grid1D, dt_pde: float) -> np.ndarray:
    """u(t, .) ~ P_t f on the grid"""
    return solve_backward_path(m, f, t, grid, dt_pde)[1][-1]


def interpolate(grid: Grid1D, values: np.ndarray, x) -> np.ndarray:
    """Piecewise linear evaluation of a grid function"""
    return np.interp(np.asarray(x, dtype=float), grid.nodes, values)


def boundary_mass(m: DiffusionModel, x0: float, t: float, grid: Grid1D, n: int, cfg: SimConfig) -> float:
    """Simulated probability that the diffusion leaves the grid interval before t"""
    box = Box(lo=[grid.lo], hi=[grid.hi])
    mass = exit_fraction(m, [x0], cfg.at_time(t), n, box)
    if mass >= Config.BOUNDARY_MASS_LIMIT:
        logger.warning(f"Grid [{grid.lo}, {grid.hi}] loses mass {mass:.2e} from x0={x0} by t={t}")
    return mass


def stationary_measure(P: np.ndarray, max_iter: int = Config.POWER_ITERATION_MAX,
                       tol: float = Config.POWER_ITERATION_RESIDUAL) -> np.ndarray:
    """Normalised left fixed vector of a row-stochastic matrix by power iteration"""
    mu = np.full(P.shape[0], 1.0 / P.shape[0])
    for iteration in range(1, max_iter + 1):
        nxt = mu @ P
        nxt /= nxt.sum()
        residual = float(np.sum(np.abs(nxt - mu)))
        mu = nxt
        if residual < tol:
            logger.debug(f"Power iteration converged after {iteration} steps (residual {residual:.2e})")
            break
    else:
        raise OracleError(f"power iteration did not converge in {max_iter} steps (residual {residual:.2e})")
    if np.any(mu <= 0):
        raise OracleError("invariant measure is not fully supported on the grid")
    return mu


def build_kernel(m: DiffusionModel, t: float, grid: Grid1D, dt_pde: float = 1e-3) -> GridKernel:
    """
    Kernel exp(t L) of the grid chain with mu the invariant law of the chain,
    found by power iteration on the kernel over max(t, 1).

    ``dt_pde`` only enters the metadata; the matrix exponential is exact in time.
    """
    _require_1d(m)
    _time_steps(t, dt_pde)
    L = generator_matrix(m, grid).toarray()
    kernel = np.maximum(expm(t * L), 0.0)
    one_step = kernel if t >= 1.0 else np.maximum(expm(L), 0.0)
    mu = stationary_measure(one_step)

    result = GridKernel(kernel=kernel, mu=mu, t=float(t), grid=grid, sigma0=float(m.sigma0[0]))
    if result.row_sum_error > 1e-6:
        raise OracleError(f"kernel rows deviate from 1 by {result.row_sum_error:.2e}")
    logger.debug(f"Built kernel for {m.name} at t={t} on {grid.m} nodes")
    return result


def adjoint_apply(k: GridKernel, f) -> np.ndarray:
    """(P_t^* f)(y) = sum_x mu(x) f(x) P_t(x, y) / mu(y), the L^2(mu) adjoint"""
    f = _grid_values(f, k.grid)
    if np.any(k.mu <= 0):
        raise UsageError("adjoint needs a fully supported mu")
    return ((k.mu * f) @ k.kernel) / k.mu


def log_gradient_energy(m: DiffusionModel, grid: Grid1D, u: np.ndarray) -> np.ndarray:
    """sigma(x)^2 |d/dx log u|^2 with central differences and reflecting ends"""
    a, _ = _coefficients(m, grid)
    grad = np.gradient(u, grid.h)
    grad[0] = grad[-1] = 0.0
    return 2.0 * a * (grad / u) ** 2


def _dd_sides(m: DiffusionModel, f: TestFunction, t: float, s_list: Sequence[float], grid: Grid1D,
              dt_pde: float) -> List[Tuple[float, np.ndarray, np.ndarray]]:
    """
    For each s: P_s log P_{t-s} f - log P_t f and -(1/2) int_0^s P_r |sigma grad log P_{t-r} f|^2 dr.

    The integral psi solves -psi' = L psi + h_{t-r} backwards from psi(s) = 0,
    stepped with Crank-Nicolson and the trapezoid rule for the source.
    """
    taus, path = solve_backward_path(m, f, t, grid, dt_pde)
    if np.any(path <= 0):
        raise UsageError("identity needs a strictly positive test function")
    steps = len(taus) - 1
    dt = taus[1] - taus[0]
    stepper = _Stepper(generator_matrix(m, grid), dt)
    energy = np.array([log_gradient_energy(m, grid, u) for u in path])
    log_pt = np.log(path[-1])

    sides = []
    for s in s_list:
        if not 0 <= s <= t:
            raise UsageError(f"s={s} must lie in [0, t]")
        j_max = int(round(s / dt))
        if abs(j_max * dt - s) > 1e-9 * max(1.0, t):
            raise UsageError(f"s={s} is not a multiple of the PDE step {dt:.3g}")
        if j_max == 0:
            zero = np.zeros(grid.m)
            sides.append((float(s), zero, zero))
            continue
        lhs = solve_backward(m, np.log(path[steps - j_max]), s, grid, dt) - log_pt
        psi = np.zeros(grid.m)
        for j in range(j_max - 1, -1, -1):
            source = 0.5 * dt * (energy[steps - j] + energy[steps - j - 1])
            psi = stepper.crank_nicolson(psi, source)
        sides.append((float(s), lhs, -0.5 * psi))
    return sides


def _relative_gap(lhs: np.ndarray, rhs: np.ndarray, mask: np.ndarray) -> float:
    scale = float(np.max(np.abs(rhs[mask])))
    diff = float(np.max(np.abs(lhs[mask] - rhs[mask])))
    if scale < 1e-12:
        return diff
    return diff / scale


def verify_dd_identity(m: DiffusionModel, f: TestFunction, t: float, s_list: Sequence[float], grid: Grid1D,
                       dt_pde: float = 1e-3, tolerance: float = Config.DD_TOLERANCE,
                       window: float = 0.5) -> VerificationReport:
    """
    Entropy identity along the semigroup, checked on the central ``window``
    of the grid. lhs is the largest relative gap over s_list.
    """
    _require_1d(m)
    mask = grid.window(window)
    sides = _dd_sides(m, f, t, s_list, grid, dt_pde)
    gaps = {s: _relative_gap(lhs, rhs, mask) for s, lhs, rhs in sides}
    worst = max(gaps.values()) if gaps else 0.0
    return VerificationReport(
        name=f"dd_identity/{m.name}/{f.describe()}/t={t:g}",
        lhs=worst,
        rhs=0.0,
        tolerance=tolerance,
        metadata={
            'model': m.name, 'params': m.params, 'f': f.to_dict(), 't': t, 'grid': grid.to_dict(),
            'dt_pde': dt_pde, 'window': window, 'gaps': {f"{s:g}": g for s, g in gaps.items()},
        },
    )


def verify_dd_convergence(m: DiffusionModel, f: TestFunction, t: float, s_list: Sequence[float], grid: Grid1D,
                          dt_pde: float = 1e-3, required_shrink: float = 3.0,
                          window: float = 0.5) -> VerificationReport:
    """Gap at (m, dt_pde) against (2m - 1, dt_pde / 2); pass iff it shrinks by ``required_shrink``"""
    coarse = verify_dd_identity(m, f, t, s_list, grid, dt_pde, window=window)
    fine = verify_dd_identity(m, f, t, s_list, grid.refined(), dt_pde / 2.0, window=window)
    if coarse.lhs < 1e-12:
        shrink = required_shrink
    else:
        shrink = coarse.lhs / max(fine.lhs, 1e-300)
    logger.info(f"DD gap {coarse.lhs:.3e} -> {fine.lhs:.3e} (shrink {shrink:.2f})")
    return VerificationReport(
        name=f"dd_convergence/{m.name}/{f.describe()}/t={t:g}",
        lhs=required_shrink,
        rhs=min(shrink, 1e6),
        tolerance=0.0,
        metadata={'coarse_gap': coarse.lhs, 'fine_gap': fine.lhs, 'coarse_grid': grid.to_dict(),
                  'fine_grid': grid.refined().to_dict(), 'dt_pde': dt_pde, 'f': f.to_dict(), 'model': m.name},
    )
