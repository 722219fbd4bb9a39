"""Data models for diffusions, test functions and verification results."""

from .diffusion import (
    Box,
    DiffusionModel,
    GalerkinModel,
    Model,
    WeightedNorm,
    check_ellipticity,
    dissipativity_quotient,
    estimate_K,
    harnack_constant,
    hs_weight_sum,
    interpolation_weight,
    optimal_path_derivative,
    path_energy,
    quotient_batch,
    weighted_norm_sq,
)
from .presets import Preset, PresetRegistry, get_registry
from .results import MCEstimate, VerificationReport
from .test_functions import TestFunction

__all__ = [
    'Box',
    'DiffusionModel',
    'GalerkinModel',
    'Model',
    'WeightedNorm',
    'check_ellipticity',
    'dissipativity_quotient',
    'estimate_K',
    'harnack_constant',
    'hs_weight_sum',
    'interpolation_weight',
    'optimal_path_derivative',
    'path_energy',
    'quotient_batch',
    'weighted_norm_sq',
    'Preset',
    'PresetRegistry',
    'get_registry',
    'MCEstimate',
    'VerificationReport',
    'TestFunction',
]
