"""
Error hierarchy shared by the models, services and the command line.
"""


class HarnackLabError(Exception):
    """Base class for every error raised by the lab"""


class UsageError(HarnackLabError, ValueError):
    """Invalid arguments: dimension mismatch, nonpositive time, empty domain, bad normalization"""


class ConfigError(UsageError):
    """Experiment config or preset registry problem; the message names the offending key"""


class DegeneratePairError(UsageError):
    """Dissipativity quotient requested for a coincident pair x = y"""


class ModelValidationError(HarnackLabError):
    """A model violates sigma^T sigma >= sigma0^2 or produces non-finite values"""


class ExplosionError(HarnackLabError):
    """Blow-up guard triggered during simulation"""

    def __init__(self, message: str, step: int = -1, time: float = float('nan')):
        super().__init__(message)
        self.step = step
        self.time = time


class PositivityViolationError(HarnackLabError):
    """A test function took a nonpositive value where its logarithm is needed"""


class SolverError(HarnackLabError):
    """Linear solve, LP or Sinkhorn failure"""


class OracleError(SolverError):
    """Grid oracle failure (invariant measure did not converge)"""
