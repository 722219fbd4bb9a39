"""
Result records: Monte Carlo estimates and verification reports
"""

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict

import numpy as np
import yaml

from ..core.config import Config
from ..core.exceptions import UsageError


@dataclass(frozen=True)
class MCEstimate:
    """Monte Carlo mean with its standard error"""
    mean: float
    stderr: float  # sample standard deviation / sqrt(n)
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise UsageError(f"an estimate needs at least 2 samples, got {self.n}")
        if not self.stderr >= 0:
            raise UsageError("stderr must be nonnegative")

    @property
    def ci95(self) -> float:
        """Half-width of the 95% confidence interval"""
        return Config.CI_MULTIPLIER * self.stderr

    @property
    def relative_stderr(self) -> float:
        return self.stderr / abs(self.mean) if self.mean != 0 else math.inf

    @classmethod
    def from_samples(cls, samples: np.ndarray) -> 'MCEstimate':
        """Mean and stderr of i.i.d. samples (numpy's pairwise summation fixes the reduction order)"""
        samples = np.asarray(samples, dtype=float).ravel()
        n = samples.size
        if n < 2:
            raise UsageError(f"an estimate needs at least 2 samples, got {n}")
        if np.all(samples == samples[0]):
            return cls(mean=float(samples[0]), stderr=0.0, n=int(n))
        return cls(mean=float(np.mean(samples)), stderr=float(np.std(samples, ddof=1) / math.sqrt(n)), n=int(n))

    def to_dict(self) -> Dict:
        """Convert to dictionary"""
        data = asdict(self)
        data['ci95'] = self.ci95
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> 'MCEstimate':
        """Create from dictionary"""
        return cls(mean=data['mean'], stderr=data['stderr'], n=data['n'])


def _plain(value: Any) -> Any:
    """Make metadata JSON/YAML friendly"""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of one numerical check of an inequality or identity"""
    name: str
    lhs: float
    rhs: float
    tolerance: float  # statistical + discretization allowance
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.tolerance >= 0:
            raise UsageError(f"tolerance must be nonnegative, got {self.tolerance}")
        object.__setattr__(self, 'lhs', float(self.lhs))
        object.__setattr__(self, 'rhs', float(self.rhs))
        object.__setattr__(self, 'tolerance', float(self.tolerance))
        object.__setattr__(self, 'metadata', _plain(self.metadata))

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def verdict(self) -> str:
        return 'PASS' if self.slack >= -self.tolerance else 'FAIL'

    @property
    def passed(self) -> bool:
        return self.verdict == 'PASS'

    def rescaled(self, factor: float) -> 'VerificationReport':
        """Same report with the tolerance multiplied by ``factor``"""
        return VerificationReport(self.name, self.lhs, self.rhs, self.tolerance * factor,
                                  {**self.metadata, 'tolerance_scale': factor})

    def to_dict(self) -> Dict:
        """Convert to dictionary for serialization"""
        return {
            'name': self.name,
            'lhs': self.lhs,
            'rhs': self.rhs,
            'slack': self.slack,
            'tolerance': self.tolerance,
            'verdict': self.verdict,
            'metadata': self.metadata,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'VerificationReport':
        """Create from dictionary (derived fields are recomputed)"""
        return cls(name=data['name'], lhs=data['lhs'], rhs=data['rhs'],
                   tolerance=data['tolerance'], metadata=data.get('metadata', {}))

    def to_json(self) -> str:
        """Export to JSON format"""
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_yaml(self) -> str:
        """Export to YAML format"""
        return yaml.dump(self.to_dict(), default_flow_style=False, sort_keys=False)

    @classmethod
    def from_json(cls, json_content: str) -> 'VerificationReport':
        """Load from JSON content"""
        return cls.from_dict(json.loads(json_content))
