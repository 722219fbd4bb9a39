import os
from typing import List

from dotenv import load_dotenv

# Pick up HARNACK_* variables from a local .env
load_dotenv()


class Config:
    """Lab-wide settings and numerical constants"""

    # Environment driven defaults
    OUTPUT_DIR = os.getenv('HARNACK_OUTPUT_DIR', 'results')
    WORKERS = int(os.getenv('HARNACK_WORKERS', '1'))
    PRESET_PATH = os.getenv('HARNACK_PRESET_PATH', '')
    LOG_LEVEL = os.getenv('HARNACK_LOG_LEVEL', 'INFO')

    # Bundled experiment configs
    CONFIGS_FOLDER = os.path.join(os.path.dirname(__file__), '..', 'configs')

    # Simulation
    BLOWUP_THRESHOLD = 1e8
    MC_BLOCK_SIZE = 4096
    TIME_GRID_TOL = 1e-12

    # Harnack constant: below this |K|t the series branch is used
    HARNACK_SWITCH = 1e-6

    # Dissipativity search
    ESTIMATE_K_REFINE_STEPS = 100
    ELLIPTICITY_TOL = 1e-10

    # Monte Carlo verdicts
    CI_MULTIPLIER = 1.96
    VERDICT_SIGMAS = 3.0
    DISCRETIZATION_FACTOR = 10.0
    POSITIVITY_FLOOR = 1e-8

    # Grid oracle
    MIN_GRID_POINTS = 51
    SOLVER_RESIDUAL = 1e-8
    POWER_ITERATION_MAX = 100_000
    POWER_ITERATION_RESIDUAL = 1e-12
    BOUNDARY_MASS_LIMIT = 1e-6
    ORACLE_TOLERANCE = 1e-3
    GRID_TOLERANCE = 5e-3
    DD_TOLERANCE = 2e-2

    # Transport
    MAX_SUPPORT = 2000
    SINKHORN_MAX_ITER = 100_000
    SINKHORN_STOP = 1e-10

    @classmethod
    def validate_config(cls) -> List[str]:
        """Problems with the environment settings, empty when they are usable"""
        issues = []

        if cls.WORKERS < 1:
            issues.append(f"HARNACK_WORKERS must be >= 1, got {cls.WORKERS}")

        if cls.PRESET_PATH and not os.path.exists(cls.PRESET_PATH):
            issues.append(f"HARNACK_PRESET_PATH points to a missing file: {cls.PRESET_PATH}")

        os.makedirs(cls.OUTPUT_DIR, exist_ok=True)

        return issues


# Module-level settings instance
config = Config()
