"""
Experiment configuration files: YAML documents validated with pydantic
"""

import logging
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ...core.config import Config
from ...core.exceptions import ConfigError
from ...models.presets import PresetRegistry, get_registry
from ...models.test_functions import KINDS, TestFunction

logger = logging.getLogger(__name__)

Point = Union[float, List[float]]

VERIFICATION_KINDS = (
    'log_harnack',
    'sharpness',
    'coupling_contraction',
    'gradient_estimate',
    'feller_modulus',
    'heat_kernel_entropy',
    'entropy_cost',
    'dd_identity',
    'dissipativity',
    'interpolation_path',
    'galerkin_convergence',
    'galerkin_tail',
    'galerkin_log_harnack',
    'galerkin_dissipativity',
)


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, allow_inf_nan=False)


class ModelSpec(_Strict):
    """Preset name, parameter overrides and an optional K override"""
    preset: str
    params: Dict[str, float] = Field(default_factory=dict)
    K: Optional[float] = None
    K_offset: float = 0.0


class TestFunctionSpec(_Strict):
    """One named test function"""

    kind: str
    params: Dict[str, float] = Field(default_factory=dict)
    floor: float = 0.0
    nonnegative: bool = False

    @field_validator('kind')
    @classmethod
    def _known_kind(cls, v: str) -> str:
        if v not in KINDS:
            raise ValueError(f"unknown test function kind '{v}' (known: {', '.join(KINDS)})")
        return v

    def build(self) -> TestFunction:
        if self.nonnegative:
            return TestFunction.nonnegative(self.kind, **self.params)
        return TestFunction(kind=self.kind, params=dict(self.params), floor=self.floor)


class SimulationSpec(_Strict):
    dt: float = 1e-3
    n_samples: int = 100_000
    scheme: Literal['euler', 'exponential_euler'] = 'euler'


class GridSpec(_Strict):
    lo: float = -8.0
    hi: float = 8.0
    m: int = 801
    dt_pde: float = 1e-3


class VerificationSpec(_Strict):
    """One verification job; fields not used by its kind must stay unset"""
    kind: Literal[VERIFICATION_KINDS]
    name: Optional[str] = None
    route: Literal['mc', 'oracle'] = 'mc'
    f: List[str] = Field(default_factory=list)
    times: List[float] = Field(default_factory=lambda: [1.0])
    pairs: List[Tuple[Point, Point]] = Field(default_factory=list)
    random_pairs: int = 0
    pair_half_width: float = 2.0
    n_samples: Optional[int] = None
    dt: Optional[float] = None
    x: float = 0.0
    y: float = 0.0
    y_list: List[float] = Field(default_factory=list)
    s_list: List[float] = Field(default_factory=list)
    d_bounds: Tuple[float, float] = (-3.0, 3.0)
    x_offsets: List[float] = Field(default_factory=lambda: [0.0])
    densities: List[Literal['uniform', 'shifted', 'right_half']] = Field(default_factory=list)
    levels: List[int] = Field(default_factory=list)
    x0: Point = 0.0
    threshold: Optional[float] = None
    max_ratio: Optional[float] = None
    half_width: float = 5.0
    budget: int = 20_000
    window: float = 0.5
    convergence: bool = False
    export: bool = False

    @field_validator('f', mode='before')
    @classmethod
    def _as_list(cls, v):
        return [v] if isinstance(v, str) else v

    @property
    def label(self) -> str:
        return self.name or self.kind


class ExperimentConfig(_Strict):
    """A complete experiment file"""
    name: str
    seed: int
    description: str = ''
    model: ModelSpec
    simulation: SimulationSpec = Field(default_factory=SimulationSpec)
    grid: GridSpec = Field(default_factory=GridSpec)
    test_functions: Dict[str, TestFunctionSpec] = Field(default_factory=dict)
    verifications: List[VerificationSpec]
    output_dir: Optional[str] = None

    @model_validator(mode='after')
    def _references(self) -> 'ExperimentConfig':
        labels = [v.label for v in self.verifications]
        duplicated = sorted({label for label in labels if labels.count(label) > 1})
        if duplicated:
            raise ValueError(f"verification names must be unique, repeated: {', '.join(duplicated)}")
        for v in self.verifications:
            for key in v.f:
                if key not in self.test_functions:
                    raise ValueError(f"verification '{v.label}' refers to unknown test function '{key}'")
        return self


def _format_error(error: ValidationError) -> str:
    first = error.errors()[0]
    where = '.'.join(str(p) for p in first['loc'])
    if first['type'] == 'extra_forbidden':
        return f"unknown key '{where}'"
    if first['type'] == 'missing':
        return f"missing key '{where}'"
    return f"{where}: {first['msg']}" if where else first['msg']


def parse_config(data: Dict, registry: Optional[PresetRegistry] = None, source: str = '<dict>') -> ExperimentConfig:
    """Validate a config mapping against the schema and the preset registry"""
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: expected a mapping at the top level")
    try:
        config = ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"{source}: {_format_error(e)}") from e

    registry = registry or get_registry()
    registry.get(config.model.preset)
    registry.check_params(registry.get(config.model.preset).family, dict(config.model.params),
                           where=f"{source}: model")
    for name, spec in config.test_functions.items():
        try:
            spec.build()
        except ValueError as e:
            raise ConfigError(f"{source}: test function '{name}': {e}") from e
    return config


def resolve_config_path(path: str) -> Path:
    """Path as given, or the bundled config of that name"""
    candidate = Path(path)
    if candidate.exists():
        return candidate
    bundled = Path(Config.CONFIGS_FOLDER) / f"{path}.yaml"
    if bundled.exists():
        return bundled
    raise ConfigError(f"config not found: {path}")


def load_config(path: str, registry: Optional[PresetRegistry] = None) -> ExperimentConfig:
    """Read and validate an experiment YAML file"""
    file_path = resolve_config_path(path)
    try:
        with open(file_path, 'r', encoding='utf-8') as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        logger.error(f"Error reading config {file_path}: {e}")
        raise ConfigError(f"{file_path}: invalid YAML: {e}") from e
    config = parse_config(data, registry, source=str(file_path))
    logger.info(f"Loaded experiment '{config.name}' from {file_path}")
    return config


def bundled_configs() -> List[Path]:
    return sorted(Path(Config.CONFIGS_FOLDER).glob('*.yaml'))
