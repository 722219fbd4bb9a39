"""
Weighted L^2 transportation cost W_0 between finitely supported measures.

w0_exact solves the transportation LP with POT's network simplex; w0_sinkhorn
uses log-domain Sinkhorn and rounds the plan onto the exact marginals so its
cost is the cost of a feasible coupling.
"""

import logging
import warnings
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np
import ot

from ...core.config import Config
from ...core.exceptions import SolverError, UsageError
from ...models.diffusion import WeightedNorm

logger = logging.getLogger(__name__)

NORMALIZATION_TOL = 1e-10
MARGINAL_TOL = 1e-8


@dataclass(frozen=True)
class DiscreteMeasure:
    """Probability weights on distinct support points, support of shape (k, dim)"""
    support: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        support = np.asarray(self.support, dtype=float)
        if support.ndim == 1:
            support = support[:, None]
        weights = np.asarray(self.weights, dtype=float).ravel()
        if support.ndim != 2 or support.shape[0] != weights.size or weights.size == 0:
            raise UsageError("support and weights must describe the same non-empty set of points")
        if not (np.all(np.isfinite(support)) and np.all(np.isfinite(weights))):
            raise UsageError("support and weights must be finite")
        if np.any(weights < 0):
            raise UsageError("weights must be nonnegative")
        if abs(weights.sum() - 1.0) > NORMALIZATION_TOL:
            raise UsageError(f"weights sum to {weights.sum():.12g}, expected 1")
        if np.unique(support, axis=0).shape[0] != support.shape[0]:
            raise UsageError("support points must be distinct")
        object.__setattr__(self, 'support', support)
        object.__setattr__(self, 'weights', weights)

    @property
    def size(self) -> int:
        return int(self.weights.size)

    @property
    def dim(self) -> int:
        return int(self.support.shape[1])

    @classmethod
    def dirac(cls, point) -> 'DiscreteMeasure':
        return cls(support=np.atleast_2d(np.asarray(point, dtype=float)), weights=np.ones(1))


@dataclass(frozen=True)
class TransportPlan:
    """Coupling matrix with its transport cost"""
    plan: np.ndarray
    cost: float
    marginal_error: float
    method: str
    duality_gap: float = 0.0

    def nonzero(self, threshold: float = 0.0):
        """Sparse (i, j, mass) triples"""
        i, j = np.nonzero(self.plan > threshold)
        return list(zip(i.tolist(), j.tolist(), self.plan[i, j].tolist()))

    def to_dict(self) -> Dict:
        """Convert to dictionary"""
        return {
            'cost': self.cost,
            'marginal_error': self.marginal_error,
            'method': self.method,
            'duality_gap': self.duality_gap,
            'shape': list(self.plan.shape),
        }


def cost_matrix(support_x: np.ndarray, support_y: np.ndarray, norm: WeightedNorm) -> np.ndarray:
    """c(i, j) = ||sigma0^{-1}(x_i - y_j)||^2"""
    support_x = np.asarray(support_x, dtype=float)
    support_y = np.asarray(support_y, dtype=float)
    return norm.sq(support_x[:, None, :] - support_y[None, :, :])


def _marginal_error(plan: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    return float(max(np.max(np.abs(plan.sum(axis=1) - a)), np.max(np.abs(plan.sum(axis=0) - b))))


def _check_pair(mu1: DiscreteMeasure, mu2: DiscreteMeasure, norm: WeightedNorm) -> None:
    if mu1.dim != mu2.dim or mu1.dim != norm.dim:
        raise UsageError(f"dimension mismatch: measures in {mu1.dim}/{mu2.dim}, norm in {norm.dim}")
    if max(mu1.size, mu2.size) > Config.MAX_SUPPORT:
        raise UsageError(f"supports are limited to {Config.MAX_SUPPORT} points")


def round_to_feasible(plan: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    Project an approximate plan onto the transport polytope: scale rows and
    columns down to their targets, then add the rank-one correction of the
    remaining deficits.
    """
    plan = np.maximum(np.asarray(plan, dtype=float), 0.0)
    rows = plan.sum(axis=1)
    scale = np.minimum(np.divide(a, rows, out=np.ones_like(a), where=rows > 0), 1.0)
    plan = plan * scale[:, None]
    cols = plan.sum(axis=0)
    scale = np.minimum(np.divide(b, cols, out=np.ones_like(b), where=cols > 0), 1.0)
    plan = plan * scale[None, :]
    err_a = np.maximum(a - plan.sum(axis=1), 0.0)
    err_b = np.maximum(b - plan.sum(axis=0), 0.0)
    total = err_a.sum()
    if total > 0:
        plan = plan + np.outer(err_a, err_b) / total
    return plan


def w0_exact(mu1: DiscreteMeasure, mu2: DiscreteMeasure, norm: WeightedNorm) -> Tuple[float, TransportPlan]:
    """Optimal transportation cost by network simplex"""
    _check_pair(mu1, mu2, norm)
    M = cost_matrix(mu1.support, mu2.support, norm)
    a, b = mu1.weights, mu2.weights
    plan, log = ot.emd(a, b, M, numItermax=max(100_000, 50 * a.size * b.size), log=True)
    if log.get('warning'):
        raise SolverError(f"network simplex did not reach optimality: {log['warning']}")

    cost = float(np.sum(plan * M))
    gap = abs(cost - float(a @ log['u'] + b @ log['v']))
    if gap > 1e-8 * (1.0 + cost):
        raise SolverError(f"duality gap {gap:.3e} too large for an optimal plan")
    result = TransportPlan(plan=plan, cost=cost, marginal_error=_marginal_error(plan, a, b),
                           method='network_simplex', duality_gap=gap)
    logger.debug(f"W0 exact on {a.size}x{b.size}: cost {cost:.6g}, gap {gap:.2e}")
    return cost, result


def w0_sinkhorn(mu1: DiscreteMeasure, mu2: DiscreteMeasure, norm: WeightedNorm,
                epsilon: float) -> Tuple[float, TransportPlan]:
    """Entropic approximation, rounded to a feasible plan before costing"""
    if not epsilon > 0:
        raise UsageError(f"epsilon must be positive, got {epsilon}")
    _check_pair(mu1, mu2, norm)
    M = cost_matrix(mu1.support, mu2.support, norm)
    a, b = mu1.weights, mu2.weights

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter('always')
        plan = ot.sinkhorn(a, b, M, epsilon, method='sinkhorn_log',
                           numItermax=Config.SINKHORN_MAX_ITER, stopThr=Config.SINKHORN_STOP)
    messages = [str(w.message) for w in caught]
    if any('converge' in msg.lower() or 'numerical' in msg.lower() for msg in messages):
        raise SolverError(f"Sinkhorn failed with epsilon={epsilon}: {'; '.join(messages)}")
    for msg in messages:
        logger.warning(f"Sinkhorn: {msg}")
    if not np.all(np.isfinite(plan)):
        raise SolverError(f"Sinkhorn produced a non-finite plan with epsilon={epsilon}")

    plan = round_to_feasible(plan, a, b)
    error = _marginal_error(plan, a, b)
    if error > MARGINAL_TOL:
        raise SolverError(f"rounded plan violates the marginals by {error:.2e}")
    cost = float(np.sum(plan * M))
    return cost, TransportPlan(plan=plan, cost=cost, marginal_error=error, method='sinkhorn')


def grid_measure(nodes: np.ndarray, weights: np.ndarray) -> DiscreteMeasure:
    """Measure on grid nodes; nodes with zero weight are dropped"""
    nodes = np.asarray(nodes, dtype=float)
    weights = np.asarray(weights, dtype=float)
    keep = weights > 0
    w = weights[keep]
    return DiscreteMeasure(support=nodes[keep], weights=w / w.sum())
