"""
Path simulation: Euler-Maruyama, exponential Euler for Galerkin levels,
synchronous couplings and exact draws of the stochastic convolution.

All batch routines walk the replicates block by block; block ``b`` takes its
increments from ``stream.generator(b)`` in step order, so results do not
depend on the worker count.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Tuple

import numpy as np

from ...core.config import Config
from ...core.exceptions import ExplosionError, UsageError
from ...core.rng import NoiseStream, get_stream
from ...models.diffusion import Box, DiffusionModel, GalerkinModel, Model

logger = logging.getLogger(__name__)

SCHEMES = ('euler', 'exponential_euler')


@dataclass(frozen=True)
class SimConfig:
    """Time grid, seed and scheme of a simulation"""
    t_final: float
    dt: float
    seed: int
    scheme: str = 'euler'

    def __post_init__(self):
        if not (self.t_final > 0 and math.isfinite(self.t_final)):
            raise UsageError(f"t_final must be positive and finite, got {self.t_final}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise UsageError(f"dt must be positive and finite, got {self.dt}")
        if self.dt > self.t_final * (1.0 + Config.TIME_GRID_TOL):
            raise UsageError(f"dt={self.dt} exceeds t_final={self.t_final}")
        if self.scheme not in SCHEMES:
            raise UsageError(f"unknown scheme '{self.scheme}' (expected one of {', '.join(SCHEMES)})")
        n = round(self.t_final / self.dt)
        if abs(n * self.dt - self.t_final) > Config.TIME_GRID_TOL * max(1.0, self.t_final):
            raise UsageError(f"t_final={self.t_final} is not an integer multiple of dt={self.dt}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))

    def at_time(self, t: float) -> 'SimConfig':
        """Same scheme and seed on [0, t], shrinking dt just enough to land on t"""
        if not t > 0:
            raise UsageError(f"t must be positive, got {t}")
        steps = max(1, math.ceil(t / self.dt - Config.TIME_GRID_TOL))
        return replace(self, t_final=float(t), dt=float(t) / steps)

    def with_seed(self, seed: int) -> 'SimConfig':
        return replace(self, seed=int(seed))

    def to_dict(self):
        """Convert to dictionary"""
        return {'t_final': self.t_final, 'dt': self.dt, 'seed': self.seed, 'scheme': self.scheme}


@dataclass(frozen=True)
class CoupledEndpoint:
    """Endpoints of two paths driven by the same Brownian increments"""
    x_end: np.ndarray
    y_end: np.ndarray
    increments: int  # step count x noise dimension


def _start_states(m: Model, x0, count: int) -> np.ndarray:
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0.shape != (m.dim,):
        raise UsageError(f"initial state has shape {x0.shape}, model dimension is {m.dim}")
    if not np.all(np.isfinite(x0)):
        raise UsageError("initial state must be finite")
    return np.tile(x0, (count, 1))


def _exponential_coefficients(lam: np.ndarray, dt: float):
    """
    Per-mode coefficients of one exponential Euler step: decay e^{-lam dt},
    phi = (1 - e^{-lam dt}) / lam, and the factors (a, b) with
    I = a z1 + b z2, dW = sqrt(dt) z1 reproducing the joint law of
    (int_0^dt e^{-lam (dt - s)} dW_s, dW).
    """
    positive = lam > 0
    safe = np.where(positive, lam, 1.0)
    decay = np.exp(-lam * dt)
    phi = np.where(positive, -np.expm1(-lam * dt) / safe, dt)
    var = np.where(positive, -np.expm1(-2.0 * lam * dt) / (2.0 * safe), dt)
    a = phi / math.sqrt(dt)
    b = np.sqrt(np.maximum(var - a * a, 0.0))
    return decay, phi, a, b


def _guard(x: np.ndarray, step: int, dt: float) -> None:
    if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > Config.BLOWUP_THRESHOLD / math.sqrt(x.shape[1]):
        norms = np.linalg.norm(np.nan_to_num(x, nan=np.inf), axis=1)
        if not np.all(norms <= Config.BLOWUP_THRESHOLD):
            raise ExplosionError(
                f"state norm exceeded {Config.BLOWUP_THRESHOLD:g} at step {step} (t={(step + 1) * dt:.6g})",
                step=step, time=(step + 1) * dt,
            )


def _run_block(m: Model, x: np.ndarray, cfg: SimConfig, gen: np.random.Generator, noise_dim: int,
               copies: int = 1, watch: Optional[Box] = None) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """
    Advance ``x`` (``copies`` stacked groups of equal size sharing noise) to
    cfg.t_final. Returns the endpoints and, if ``watch`` is given, a mask of
    replicates that left the box at some step.
    """
    dt = cfg.dt
    group = x.shape[0] // copies
    sqrt_dt = math.sqrt(dt)
    exited = np.zeros(x.shape[0], dtype=bool) if watch is not None else None

    if cfg.scheme == 'exponential_euler':
        if not isinstance(m, GalerkinModel):
            raise UsageError("exponential_euler needs a GalerkinModel")
        decay, phi, a, b = _exponential_coefficients(m.eigenvalues, dt)
        q = m.weights
        for step in range(cfg.n_steps):
            z = gen.standard_normal((group, 2, noise_dim))[:, :, :m.dim]
            if copies > 1:
                z = np.concatenate([z] * copies)
            dW = sqrt_dt * z[:, 0, :]
            conv = a * z[:, 0, :] + b * z[:, 1, :]
            x = decay * x + phi * m.F(x) + q * conv + m.apply_sigma1(x, dW)
            _guard(x, step, dt)
            if watch is not None:
                exited |= np.any((x < watch.lo) | (x > watch.hi), axis=1)
        return x, exited

    for step in range(cfg.n_steps):
        xi = gen.standard_normal((group, noise_dim))[:, :m.dim]
        if copies > 1:
            xi = np.concatenate([xi] * copies)
        x = x + m.drift(x) * dt + m.apply_diffusion(x, sqrt_dt * xi)
        _guard(x, step, dt)
        if watch is not None:
            exited |= np.any((x < watch.lo) | (x > watch.hi), axis=1)
    return x, exited


def _fan_out(stream: NoiseStream, n_paths: int, workers: int,
             job: Callable[[int, int, int], np.ndarray]) -> List[np.ndarray]:
    """Run ``job(block, start, count)`` for every block, results in block order"""
    blocks = list(stream.blocks(n_paths))
    if workers <= 1 or len(blocks) == 1:
        return [job(*blk) for blk in blocks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda blk: job(*blk), blocks))


def _check_noise_dim(m: Model, noise_dim: Optional[int]) -> int:
    noise_dim = m.dim if noise_dim is None else int(noise_dim)
    if noise_dim < m.dim:
        raise UsageError(f"noise_dim={noise_dim} is smaller than the model dimension {m.dim}")
    return noise_dim


def simulate_batch(m: Model, x0, cfg: SimConfig, n_paths: int, stream: Optional[NoiseStream] = None,
                   noise_dim: Optional[int] = None, workers: int = 1) -> np.ndarray:
    """
    Endpoints X_t of ``n_paths`` independent replicates started at x0.

    ``noise_dim`` lets a low Galerkin level consume the leading modes of the
    increments a higher level would draw from the same stream.
    """
    if n_paths < 1:
        raise UsageError(f"n_paths must be positive, got {n_paths}")
    stream = stream or get_stream(cfg.seed)
    noise_dim = _check_noise_dim(m, noise_dim)

    def job(block: int, start: int, count: int) -> np.ndarray:
        x, _ = _run_block(m, _start_states(m, x0, count), cfg, stream.generator(block), noise_dim)
        return x

    out = np.concatenate(_fan_out(stream, n_paths, workers, job))
    logger.debug(f"Simulated {n_paths} paths of {m.name} ({cfg.n_steps} steps, scheme={cfg.scheme})")
    return out


def simulate(m: Model, x0, cfg: SimConfig, stream: Optional[NoiseStream] = None) -> np.ndarray:
    """X_{t_final} of a single path"""
    return simulate_batch(m, x0, cfg, 1, stream)[0]


def simulate_coupled_batch(m: Model, x0, y0, cfg: SimConfig, n_paths: int, stream: Optional[NoiseStream] = None,
                           noise_dim: Optional[int] = None, workers: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """Synchronously coupled endpoints (X_t, Y_t) for ``n_paths`` replicates"""
    if n_paths < 1:
        raise UsageError(f"n_paths must be positive, got {n_paths}")
    stream = stream or get_stream(cfg.seed)
    noise_dim = _check_noise_dim(m, noise_dim)

    def job(block: int, start: int, count: int) -> np.ndarray:
        states = np.concatenate([_start_states(m, x0, count), _start_states(m, y0, count)])
        x, _ = _run_block(m, states, cfg, stream.generator(block), noise_dim, copies=2)
        return x

    parts = _fan_out(stream, n_paths, workers, job)
    xs = np.concatenate([p[:p.shape[0] // 2] for p in parts])
    ys = np.concatenate([p[p.shape[0] // 2:] for p in parts])
    return xs, ys


def simulate_coupled(m: Model, x0, y0, cfg: SimConfig, stream: Optional[NoiseStream] = None) -> CoupledEndpoint:
    """One synchronously coupled pair of paths"""
    xs, ys = simulate_coupled_batch(m, x0, y0, cfg, 1, stream)
    return CoupledEndpoint(x_end=xs[0], y_end=ys[0], increments=cfg.n_steps * m.dim)


def exit_fraction(m: DiffusionModel, x0, cfg: SimConfig, n_paths: int, box: Box,
                  stream: Optional[NoiseStream] = None, workers: int = 1) -> float:
    """Fraction of replicates that leave ``box`` at some grid time before t_final"""
    if box.dim != m.dim:
        raise UsageError(f"box dimension {box.dim} does not match model dimension {m.dim}")
    stream = stream or get_stream(cfg.seed)

    def job(block: int, start: int, count: int) -> np.ndarray:
        _, exited = _run_block(m, _start_states(m, x0, count), cfg, stream.generator(block), m.dim, watch=box)
        return exited

    return float(np.mean(np.concatenate(_fan_out(stream, n_paths, workers, job))))


def convolution_variance(eigenvalues, weights, t: float) -> np.ndarray:
    """Mode variances q_i^2 (1 - e^{-2 lambda_i t}) / (2 lambda_i), q_i^2 t where lambda_i = 0"""
    if not t > 0:
        raise UsageError(f"t must be positive, got {t}")
    lam = np.asarray(eigenvalues, dtype=float)
    q = np.asarray(weights, dtype=float)
    if lam.shape != q.shape:
        raise UsageError("eigenvalues and weights must have the same length")
    if np.any(lam < 0):
        raise UsageError("eigenvalues must be nonnegative")
    positive = lam > 0
    safe = np.where(positive, lam, 1.0)
    return q * q * np.where(positive, -np.expm1(-2.0 * lam * t) / (2.0 * safe), t)


def sample_stochastic_convolution_batch(g: GalerkinModel, t: float, n: int,
                                        stream: Optional[NoiseStream] = None, seed: int = 0) -> np.ndarray:
    """``n`` exact draws of Y_t^n = int_0^t T_{t-s} sigma0 dW_s, shape (n, level)"""
    if n < 1:
        raise UsageError(f"n must be positive, got {n}")
    std = np.sqrt(convolution_variance(g.eigenvalues, g.weights, t))
    stream = stream or get_stream(seed)
    draws = [std * stream.generator(block).standard_normal((count, g.dim)) for block, _, count in stream.blocks(n)]
    return np.concatenate(draws)


def sample_stochastic_convolution(g: GalerkinModel, t: float, stream: Optional[NoiseStream] = None,
                                  seed: int = 0) -> np.ndarray:
    """One exact draw of the stochastic convolution at time t"""
    return sample_stochastic_convolution_batch(g, t, 1, stream, seed)[0]
