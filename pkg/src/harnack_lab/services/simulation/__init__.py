"""Path simulation package."""

from .engine import (
    CoupledEndpoint,
    SimConfig,
    exit_fraction,
    sample_stochastic_convolution,
    sample_stochastic_convolution_batch,
    simulate,
    simulate_batch,
    simulate_coupled,
    simulate_coupled_batch,
)

__all__ = [
    'CoupledEndpoint',
    'SimConfig',
    'exit_fraction',
    'sample_stochastic_convolution',
    'sample_stochastic_convolution_batch',
    'simulate',
    'simulate_batch',
    'simulate_coupled',
    'simulate_coupled_batch',
]
