"""Monte Carlo estimators package."""

from .estimator import (
    PairedSlack,
    estimate_coupling_distance,
    estimate_log_semigroup,
    estimate_semigroup,
    paired_log_harnack_slack,
)

__all__ = [
    'PairedSlack',
    'estimate_coupling_distance',
    'estimate_log_semigroup',
    'estimate_semigroup',
    'paired_log_harnack_slack',
]
