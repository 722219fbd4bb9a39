"""
Diffusion models, the weighted sigma0-geometry and the dissipativity condition.

Drift and diffusion maps are vectorised: they take a batch of states of shape
``(batch, dim)`` and return ``(batch, dim)`` resp. ``(batch, dim, dim)``.
sigma0 is always diagonal and stored as the vector of its entries q_i.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, Optional, Tuple, Union

import numpy as np
from scipy.integrate import simpson

from ..core.config import Config
from ..core.exceptions import DegeneratePairError, ModelValidationError, UsageError

logger = logging.getLogger(__name__)

VectorField = Callable[[np.ndarray], np.ndarray]


def _as_positive_vector(values, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.array(values, dtype=float))
    if arr.ndim != 1 or arr.size == 0:
        raise UsageError(f"{name} must be a non-empty vector")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise UsageError(f"{name} entries must be finite and strictly positive")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class WeightedNorm:
    """The norm x -> ||sigma0^{-1} x|| for diagonal sigma0 = diag(weights)"""

    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'weights', _as_positive_vector(self.weights, 'weights'))

    @property
    def dim(self) -> int:
        return int(self.weights.size)

    def sq(self, v: np.ndarray) -> np.ndarray:
        """Squared weighted norm along the last axis (batch friendly)"""
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != self.dim:
            raise UsageError(f"dimension mismatch: vector has {v.shape[-1]} entries, norm has {self.dim}")
        return np.sum((v / self.weights) ** 2, axis=-1)

    def scaled(self, factor: float) -> 'WeightedNorm':
        return WeightedNorm(self.weights * factor)


def weighted_norm_sq(v, norm: WeightedNorm) -> float:
    """Sum of q_i^{-2} v_i^2"""
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if v.ndim != 1:
        raise UsageError(f"expected a vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise UsageError("vector must be finite")
    return float(norm.sq(v))


def harnack_constant(K: float, t: float) -> float:
    """K / (2 (1 - exp(-K t))), with the series branch for tiny |K| t"""
    if not t > 0:
        raise UsageError(f"t must be positive, got {t}")
    kt = K * t
    if abs(kt) < Config.HARNACK_SWITCH:
        return (1.0 + kt / 2.0 + kt * kt / 12.0) / (2.0 * t)
    return K / (-2.0 * math.expm1(-kt))


def interpolation_weight(K: float, t: float, s: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """h_s = (1 - e^{-Ks}) / (1 - e^{-Kt}); s / t in the K -> 0 limit"""
    if not t > 0:
        raise UsageError(f"t must be positive, got {t}")
    s = np.asarray(s, dtype=float)
    if abs(K * t) < Config.HARNACK_SWITCH:
        h = s / t
    else:
        h = np.expm1(-K * s) / math.expm1(-K * t)
    return float(h) if h.ndim == 0 else h


def optimal_path_derivative(K: float, t: float) -> Callable[[np.ndarray], np.ndarray]:
    """Derivative of interpolation_weight in s"""
    if abs(K * t) < Config.HARNACK_SWITCH:
        return lambda s: np.full_like(np.asarray(s, dtype=float), 1.0 / t)
    scale = K / -math.expm1(-K * t)
    return lambda s: scale * np.exp(-K * np.asarray(s, dtype=float))


def path_energy(K: float, t: float, h_prime: Callable[[np.ndarray], np.ndarray], n_nodes: int = 4001) -> float:
    """(1/2) int_0^t e^{Ks} |h'_s|^2 ds by Simpson's rule"""
    if not t > 0:
        raise UsageError(f"t must be positive, got {t}")
    s = np.linspace(0.0, t, n_nodes)
    return 0.5 * float(simpson(np.exp(K * s) * np.asarray(h_prime(s)) ** 2, x=s))


@dataclass(frozen=True)
class Box:
    """Axis aligned sampling domain"""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise UsageError("box bounds must be vectors of equal length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise UsageError("box bounds must be finite")
        if np.any(hi <= lo):
            raise UsageError("empty domain: every upper bound must exceed its lower bound")
        object.__setattr__(self, 'lo', lo)
        object.__setattr__(self, 'hi', hi)

    @classmethod
    def cube(cls, dim: int, half_width: float) -> 'Box':
        return cls(lo=np.full(dim, -half_width), hi=np.full(dim, half_width))

    @property
    def dim(self) -> int:
        return int(self.lo.size)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=(n, self.dim))

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lo, self.hi)


@dataclass(frozen=True)
class DiffusionModel:
    """dX = b(X) dt + sigma(X) dB on R^dim with reference operator sigma0 and constant K"""

    dim: int
    drift: VectorField
    diffusion: VectorField
    sigma0: np.ndarray
    K: float
    name: str = 'custom'
    params: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if int(self.dim) < 1:
            raise UsageError(f"dim must be positive, got {self.dim}")
        sigma0 = _as_positive_vector(self.sigma0, 'sigma0')
        if sigma0.size != self.dim:
            raise UsageError(f"sigma0 has {sigma0.size} entries for a {self.dim}-dimensional model")
        object.__setattr__(self, 'sigma0', sigma0)
        if not math.isfinite(self.K):
            raise UsageError("K must be finite")

    @property
    def norm(self) -> WeightedNorm:
        return WeightedNorm(self.sigma0)

    def with_K(self, K: float) -> 'DiffusionModel':
        return replace(self, K=float(K))

    def apply_diffusion(self, x: np.ndarray, noise: np.ndarray) -> np.ndarray:
        """sigma(x) noise for a batch"""
        return np.einsum('bij,bj->bi', self.diffusion(x), noise)


@dataclass(frozen=True)
class GalerkinModel:
    """
    Level-n spectral truncation of dX = (AX + F(X)) dt + (sigma0 + sigma1(X)) dW.

    ``F`` and ``sigma1`` must accept states of any width so that ``truncate``
    can project them onto a lower level; ``weight_law`` and ``eigen_law`` map
    1-based mode indices to q_i and lambda_i for the full (untruncated) law.
    """

    level: int
    eigenvalues: np.ndarray
    weights: np.ndarray
    F: VectorField
    sigma1: VectorField
    K: float
    C_F: float = 0.0
    C_sigma: float = 0.0
    sigma1_apply: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    weight_law: Optional[Callable[[np.ndarray], np.ndarray]] = None
    eigen_law: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = 'galerkin'
    params: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        lam = np.atleast_1d(np.array(self.eigenvalues, dtype=float))
        if int(self.level) < 1 or lam.size != self.level:
            raise UsageError(f"level {self.level} needs exactly {self.level} eigenvalues, got {lam.size}")
        if np.any(lam < 0) or np.any(np.diff(lam) < 0) or not np.all(np.isfinite(lam)):
            raise UsageError("eigenvalues must be finite, nonnegative and nondecreasing")
        lam.setflags(write=False)
        weights = _as_positive_vector(self.weights, 'weights')
        if weights.size != self.level:
            raise UsageError(f"level {self.level} needs exactly {self.level} weights, got {weights.size}")
        object.__setattr__(self, 'eigenvalues', lam)
        object.__setattr__(self, 'weights', weights)

    @property
    def dim(self) -> int:
        return int(self.level)

    @property
    def sigma0(self) -> np.ndarray:
        return self.weights

    @property
    def norm(self) -> WeightedNorm:
        return WeightedNorm(self.weights)

    def drift(self, x: np.ndarray) -> np.ndarray:
        """A_n x + F_n(x)"""
        return -self.eigenvalues * x + self.F(x)

    def diffusion(self, x: np.ndarray) -> np.ndarray:
        """sigma0 + sigma1(x) as a batch of matrices"""
        return np.diag(self.weights)[None, :, :] + self.sigma1(x)

    def apply_sigma1(self, x: np.ndarray, noise: np.ndarray) -> np.ndarray:
        if self.sigma1_apply is not None:
            return self.sigma1_apply(x, noise)
        return np.einsum('bij,bj->bi', self.sigma1(x), noise)

    def apply_diffusion(self, x: np.ndarray, noise: np.ndarray) -> np.ndarray:
        return self.weights * noise + self.apply_sigma1(x, noise)

    def truncate(self, n: int) -> 'GalerkinModel':
        """Projection pi_n onto the span of the first n modes"""
        if not 1 <= n <= self.level:
            raise UsageError(f"cannot truncate level {self.level} to {n}")
        return replace(self, level=n, eigenvalues=self.eigenvalues[:n], weights=self.weights[:n])

    def with_K(self, K: float) -> 'GalerkinModel':
        return replace(self, K=float(K))


Model = Union[DiffusionModel, GalerkinModel]


def hs_weight_sum(weight_law: Callable[[np.ndarray], np.ndarray],
                  eigen_law: Callable[[np.ndarray], np.ndarray],
                  horizon: int = 1_000_000) -> Tuple[float, float]:
    """
    Partial sum of q_i^2 / (1 + lambda_i) up to ``horizon`` and the contribution
    of its second half, which bounds how far the series still moves.
    """
    idx = np.arange(1, horizon + 1, dtype=float)
    terms = np.asarray(weight_law(idx)) ** 2 / (1.0 + np.asarray(eigen_law(idx)))
    total = float(np.sum(terms))
    tail = float(np.sum(terms[horizon // 2:]))
    return total, tail


def check_ellipticity(m: Model, samples: np.ndarray, tol: float = Config.ELLIPTICITY_TOL) -> float:
    """
    Check sigma(x)^T sigma(x) - sigma0^2 >= 0 and finiteness of b, sigma on the
    sampled states. Returns the smallest eigenvalue seen.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.shape[1] != m.dim:
        raise UsageError(f"samples have width {samples.shape[1]}, model dimension is {m.dim}")
    b = m.drift(samples)
    s = m.diffusion(samples)
    if not (np.all(np.isfinite(b)) and np.all(np.isfinite(s))):
        raise ModelValidationError(f"model '{m.name}' produced non-finite drift or diffusion values")
    gram = np.einsum('bki,bkj->bij', s, s) - np.diag(m.sigma0 ** 2)[None, :, :]
    smallest = float(np.min(np.linalg.eigvalsh(gram)))
    if smallest < -tol:
        raise ModelValidationError(
            f"model '{m.name}' violates sigma^T sigma >= sigma0^2 (smallest eigenvalue {smallest:.3e})"
        )
    return smallest


def quotient_batch(m: Model, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Vectorised dissipativity quotient; coincident pairs give nan"""
    q = m.sigma0
    dx = (x - y) / q
    den = np.sum(dx * dx, axis=1)
    db = (m.drift(x) - m.drift(y)) / q
    ds = (m.diffusion(x) - m.diffusion(y)) / q[None, :, None]
    num = np.sum(ds * ds, axis=(1, 2)) + 2.0 * np.sum(db * dx, axis=1)
    with np.errstate(divide='ignore', invalid='ignore'):
        return np.where(den > 0, num / np.where(den > 0, den, 1.0), np.nan)


def dissipativity_quotient(m: Model, x, y) -> float:
    """
    [||sigma0^{-1}(sigma(x)-sigma(y))||_HS^2 + 2<sigma0^{-1}(b(x)-b(y)), sigma0^{-1}(x-y)>]
    / ||sigma0^{-1}(x-y)||^2
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != (m.dim,) or y.shape != (m.dim,):
        raise UsageError(f"points must have {m.dim} coordinates")
    if np.array_equal(x, y):
        raise DegeneratePairError("dissipativity quotient is undefined for x = y")
    return float(quotient_batch(m, x[None, :], y[None, :])[0])


def estimate_K(m: Model, domain: Box, budget: int, seed: int = 0,
               refine_steps: int = Config.ESTIMATE_K_REFINE_STEPS) -> float:
    """
    Lower bound on sup of the dissipativity quotient over ``domain``: best of
    ``budget`` uniform pairs, then greedy coordinate ascent with a shrinking step.
    """
    if budget < 1:
        raise UsageError(f"budget must be at least 1, got {budget}")
    if domain.dim != m.dim:
        raise UsageError(f"domain dimension {domain.dim} does not match model dimension {m.dim}")
    rng = np.random.default_rng(seed)

    best_val = -np.inf
    best_pair = None
    # diffusion matrices are (block, dim, dim)
    block = max(1, min(Config.MC_BLOCK_SIZE, (1 << 22) // (m.dim * m.dim)))
    for start in range(0, budget, block):
        n = min(block, budget - start)
        xs, ys = domain.sample(rng, n), domain.sample(rng, n)
        vals = np.nan_to_num(quotient_batch(m, xs, ys), nan=-np.inf)
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val, best_pair = float(vals[i]), np.concatenate([xs[i], ys[i]])
    if best_pair is None:
        raise UsageError("no admissible pair found in the domain")

    d = m.dim
    lo = np.concatenate([domain.lo, domain.lo])
    hi = np.concatenate([domain.hi, domain.hi])
    step = 0.25 * (hi - lo)
    moves = np.concatenate([np.eye(2 * d), -np.eye(2 * d)])
    z = best_pair
    for _ in range(refine_steps):
        candidates = np.clip(z[None, :] + moves * np.concatenate([step, step])[None, :], lo, hi)
        vals = np.nan_to_num(quotient_batch(m, candidates[:, :d], candidates[:, d:]), nan=-np.inf)
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val, z = float(vals[i]), candidates[i]
        else:
            step = step * 0.5

    logger.debug(f"estimate_K({m.name}): {best_val:.6g} after {budget} pairs and {refine_steps} refinement steps")
    return best_val
