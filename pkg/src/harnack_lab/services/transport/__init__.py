"""Discrete optimal transport."""

from .transport import DiscreteMeasure, TransportPlan, w0_exact, w0_sinkhorn

__all__ = ['DiscreteMeasure', 'TransportPlan', 'w0_exact', 'w0_sinkhorn']
