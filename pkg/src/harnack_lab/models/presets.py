"""
Preset registry: named drift/diffusion families with numeric parameters.

Models are never parsed from expressions; an experiment names a preset and
overrides some of its parameters. User preset files add named presets that
derive from one of the built-in families.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import yaml
from scipy.special import expit

from ..core.config import Config
from ..core.exceptions import ConfigError
from .diffusion import Box, DiffusionModel, GalerkinModel, Model, check_ellipticity

logger = logging.getLogger(__name__)


def _build_ou(dim: int, theta: float, sigma0: float) -> DiffusionModel:
    q = np.full(dim, sigma0)
    return DiffusionModel(
        dim=dim,
        drift=lambda x: -theta * x,
        diffusion=lambda x: np.broadcast_to(np.diag(q), (x.shape[0], dim, dim)),
        sigma0=q,
        K=-2.0 * theta,
    )


def _build_brownian(dim: int, sigma0: float) -> DiffusionModel:
    q = np.full(dim, sigma0)
    return DiffusionModel(
        dim=dim,
        drift=lambda x: np.zeros_like(x),
        diffusion=lambda x: np.broadcast_to(np.diag(q), (x.shape[0], dim, dim)),
        sigma0=q,
        K=0.0,
    )


def _build_tanh_perturbed(theta: float, amp: float, base: float, sigma0: float) -> DiffusionModel:
    # sigma(x) = sigma0 (base + amp tanh x); the quotient only sees differences of sigma,
    # so K = amp^2 - 2 theta whatever the base, and base >= 1 + amp keeps sigma >= sigma0
    return DiffusionModel(
        dim=1,
        drift=lambda x: -theta * x,
        diffusion=lambda x: (sigma0 * (base + amp * np.tanh(x)))[:, :, None],
        sigma0=np.array([sigma0]),
        K=amp * amp - 2.0 * theta,
    )


def _build_galerkin_heat(level: int, amp_F: float, amp_sigma1: float, weight_exponent: float) -> GalerkinModel:
    def eigen_law(i):
        return math.pi ** 2 * np.asarray(i, dtype=float) ** 2

    def weight_law(i):
        return (1.0 + eigen_law(i)) ** (-weight_exponent)

    def F(x):
        decay = (1.0 + np.arange(1, x.shape[1] + 1, dtype=float)) ** -2
        return amp_F * expit(x) * decay

    def sigma1(x):
        out = np.zeros((x.shape[0], x.shape[1], x.shape[1]))
        out[:, 0, 0] = amp_sigma1 * (1.0 + np.tanh(x[:, 0]))
        return out

    def sigma1_apply(x, noise):
        out = np.zeros_like(noise)
        out[:, 0] = amp_sigma1 * (1.0 + np.tanh(x[:, 0])) * noise[:, 0]
        return out

    idx = np.arange(1, level + 1, dtype=float)
    lam = eigen_law(idx)
    # per-mode bound: -2 lambda_i + 2 Lip(F_i) with Lip(F_i) = amp_F / (4 (1+i)^2); sigma1 only moves mode 1
    k_modes = -2.0 * lam + amp_F / (2.0 * (1.0 + idx) ** 2)
    k_modes[0] += amp_sigma1 ** 2
    return GalerkinModel(
        level=level,
        eigenvalues=lam,
        weights=weight_law(idx),
        F=F,
        sigma1=sigma1,
        K=float(np.max(k_modes)),
        C_F=amp_F / 16.0,
        C_sigma=amp_sigma1,
        sigma1_apply=sigma1_apply,
        weight_law=weight_law,
        eigen_law=eigen_law,
    )


FAMILIES: Dict[str, Callable[..., Model]] = {
    'ou': _build_ou,
    'brownian': _build_brownian,
    'tanh_perturbed': _build_tanh_perturbed,
    'galerkin_heat': _build_galerkin_heat,
}

INTEGER_PARAMS = {'dim', 'level'}


@dataclass(frozen=True)
class Preset:
    """A named family instance with default parameters"""
    name: str
    family: str
    defaults: Dict[str, float]
    description: str
    exercises: List[str] = field(default_factory=list)
    source: str = 'built-in'

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary"""
        return {
            'name': self.name,
            'family': self.family,
            'defaults': dict(self.defaults),
            'description': self.description,
            'exercises': list(self.exercises),
            'source': self.source,
        }


BUILTIN_PRESETS = [
    Preset(
        name='ou',
        family='ou',
        defaults={'dim': 1, 'theta': 0.5, 'sigma0': 1.0},
        description='Ornstein-Uhlenbeck b(x) = -theta x, sigma = sigma0 I; K = -2 theta exactly',
        exercises=['log-Harnack inequality and its sharpness', 'coupling contraction', 'gradient estimate',
                   'strong Feller modulus', 'heat kernel entropy', 'entropy-cost inequality'],
    ),
    Preset(
        name='brownian',
        family='brownian',
        defaults={'dim': 1, 'sigma0': 1.0},
        description='Driftless Brownian motion with sigma = sigma0 I; K = 0',
        exercises=['log-Harnack inequality in the K -> 0 limit'],
    ),
    Preset(
        name='tanh_perturbed',
        family='tanh_perturbed',
        defaults={'theta': 1.0, 'amp': 0.1, 'base': 1.1, 'sigma0': 1.0},
        description='1-D non-additive noise sigma(x) = sigma0 (base + amp tanh x), b(x) = -theta x; '
                    'K = amp^2 - 2 theta',
        exercises=['log-Harnack inequality with multiplicative noise', 'coupling contraction',
                   'gradient estimate', 'identity along the semigroup'],
    ),
    Preset(
        name='galerkin_heat',
        family='galerkin_heat',
        defaults={'level': 64, 'amp_F': 0.5, 'amp_sigma1': 0.1, 'weight_exponent': 0.3},
        description='Spectral truncation of the stochastic heat equation: lambda_i = pi^2 i^2, '
                    'q_i = (1 + lambda_i)^(-weight_exponent), logistic F, rank-one sigma1 on e_1',
        exercises=['Galerkin convergence', 'finite-level log-Harnack inequality', 'dissipativity (H4)'],
    ),
]


class PresetRegistry:
    """Registry of named presets"""

    def __init__(self):
        """Initialize with the built-in presets"""
        self._presets: Dict[str, Preset] = {}
        for preset in BUILTIN_PRESETS:
            self.register(preset)

    def register(self, preset: Preset) -> None:
        if preset.family not in FAMILIES:
            raise ConfigError(f"preset '{preset.name}': unknown family '{preset.family}'")
        self.check_params(preset.family, preset.defaults, where=f"preset '{preset.name}'")
        self._presets[preset.name] = preset

    def names(self) -> List[str]:
        return sorted(self._presets)

    def get(self, name: str) -> Preset:
        if name not in self._presets:
            raise ConfigError(f"unknown preset '{name}' (known: {', '.join(self.names())})")
        return self._presets[name]

    @staticmethod
    def check_params(family: str, params: Dict[str, Any], where: str) -> None:
        builder_defaults = next(p.defaults for p in BUILTIN_PRESETS if p.family == family)
        unknown = set(params) - set(builder_defaults)
        if unknown:
            raise ConfigError(f"{where}: unknown parameter '{sorted(unknown)[0]}' for family '{family}'")
        for key, value in params.items():
            if not isinstance(value, (int, float)) or not math.isfinite(float(value)):
                raise ConfigError(f"{where}: parameter '{key}' must be a finite number")

    def build(self, name: str, params: Optional[Dict[str, Any]] = None, K: Optional[float] = None,
              K_offset: float = 0.0, validate: bool = True) -> Model:
        """Instantiate a preset with parameter overrides"""
        preset = self.get(name)
        params = dict(params or {})
        self.check_params(preset.family, params, where=f"preset '{name}'")
        merged = {**preset.defaults, **params}
        kwargs = {k: int(v) if k in INTEGER_PARAMS else float(v) for k, v in merged.items()}
        model = FAMILIES[preset.family](**kwargs)

        if validate:
            rng = np.random.default_rng(0)
            check_ellipticity(model, Box.cube(model.dim, 5.0).sample(rng, 64))

        K_value = model.K if K is None else float(K)
        model = replace(model, K=K_value + K_offset, name=name, params=merged)
        logger.debug(f"Built preset {name} with {merged} (K={model.K:.6g})")
        return model

    def load_file(self, path: str) -> int:
        """Add presets from a user YAML file; returns how many were added"""
        file_path = Path(path)
        if not file_path.exists():
            raise ConfigError(f"preset file not found: {path}")
        try:
            with open(file_path, 'r', encoding='utf-8') as f:
                data = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"invalid YAML in preset file {path}: {e}") from e

        entries = data.get('presets', {}) if isinstance(data, dict) else None
        if not isinstance(entries, dict):
            raise ConfigError(f"preset file {path} must contain a 'presets' mapping")

        for name, entry in entries.items():
            if not isinstance(entry, dict) or 'family' not in entry:
                raise ConfigError(f"preset '{name}' in {path} needs a 'family' key")
            extra = set(entry) - {'family', 'params', 'description', 'exercises'}
            if extra:
                raise ConfigError(f"preset '{name}' in {path}: unknown key '{sorted(extra)[0]}'")
            family = entry['family']
            if family not in FAMILIES:
                raise ConfigError(f"preset '{name}' in {path}: unknown family '{family}'")
            base = next(p.defaults for p in BUILTIN_PRESETS if p.family == family)
            overrides = entry.get('params') or {}
            self.check_params(family, overrides, where=f"preset '{name}'")
            self.register(Preset(
                name=name,
                family=family,
                defaults={**base, **overrides},
                description=entry.get('description', f"user preset derived from '{family}'"),
                exercises=list(entry.get('exercises', [])),
                source=str(file_path),
            ))
        logger.info(f"Loaded {len(entries)} preset(s) from {path}")
        return len(entries)

    def listing(self) -> List[Dict[str, Any]]:
        return [self._presets[name].to_dict() for name in self.names()]


# Singleton instance
_registry_instance = None


def get_registry(path: Optional[str] = None) -> PresetRegistry:
    """Registry with built-ins plus the user preset file (explicit path or HARNACK_PRESET_PATH)"""
    global _registry_instance

    if path is not None:
        registry = PresetRegistry()
        if path:
            registry.load_file(path)
        return registry

    if _registry_instance is None:
        _registry_instance = PresetRegistry()
        if Config.PRESET_PATH:
            _registry_instance.load_file(Config.PRESET_PATH)

    return _registry_instance
