"""Configuration management for mgfield."""

import logging
import os

import yaml

logger = logging.getLogger(__name__)

# Tolerances
ZERO_TOL = 1e-8  # relative cut for "zero" precision entries and partial correlations
PIVOT_TOL = 1e-12  # Cholesky pivots must exceed PIVOT_TOL * max diagonal
SYMMETRY_TOL = 1e-8  # relative asymmetry accepted (and averaged away) on ingestion
REDUCTION_TOL = 1e-10  # full vs reduced kriging agreement
CAR_LIMIT_FACTOR = 10.0  # intrinsic CAR limit passes if deviation <= factor * kappa * ell

# Faithfulness sweep
EXHAUSTIVE_MAX_NODES = 14
SUBSET_BUDGET = 256
MAX_COUNTEREXAMPLES = 1000

# Model defaults
DEFAULT_KAPPA = 1.0
DEFAULT_SIGMA = 1.0
DEFAULT_TAU = 1.0
DEFAULT_SEED = 0

LOG_LEVEL = "WARNING"


def default_config_path() -> str:
    """Config lookup order: ./config.yaml, then the one next to the package."""
    config_path = os.path.join(os.getcwd(), "config.yaml")
    if not os.path.exists(config_path):
        config_path = os.path.join(os.path.dirname(__file__), "..", "config.yaml")
        config_path = os.path.abspath(config_path)
    return config_path


def load_config(config_path: str = None):
    """Load configuration from a YAML file, keeping defaults for missing keys."""
    global ZERO_TOL, PIVOT_TOL, SYMMETRY_TOL, REDUCTION_TOL, CAR_LIMIT_FACTOR
    global EXHAUSTIVE_MAX_NODES, SUBSET_BUDGET, MAX_COUNTEREXAMPLES
    global DEFAULT_KAPPA, DEFAULT_SIGMA, DEFAULT_TAU, DEFAULT_SEED, LOG_LEVEL

    if config_path is None:
        config_path = default_config_path()

    if not os.path.exists(config_path):
        logger.debug(f"No config file at {config_path}, using defaults")
        return

    try:
        with open(config_path, 'r') as f:
            data = yaml.safe_load(f) or {}

        tolerances = data.get('tolerances', {}) or {}
        ZERO_TOL = float(tolerances.get('zero_tol', ZERO_TOL))
        PIVOT_TOL = float(tolerances.get('pivot_tol', PIVOT_TOL))
        SYMMETRY_TOL = float(tolerances.get('symmetry_tol', SYMMETRY_TOL))
        REDUCTION_TOL = float(tolerances.get('reduction_tol', REDUCTION_TOL))
        CAR_LIMIT_FACTOR = float(tolerances.get('car_limit_factor', CAR_LIMIT_FACTOR))

        faithfulness = data.get('faithfulness', {}) or {}
        EXHAUSTIVE_MAX_NODES = int(faithfulness.get('exhaustive_max_nodes', EXHAUSTIVE_MAX_NODES))
        SUBSET_BUDGET = int(faithfulness.get('subset_budget', SUBSET_BUDGET))
        MAX_COUNTEREXAMPLES = int(faithfulness.get('max_counterexamples', MAX_COUNTEREXAMPLES))

        defaults = data.get('defaults', {}) or {}
        DEFAULT_KAPPA = float(defaults.get('kappa', DEFAULT_KAPPA))
        DEFAULT_SIGMA = float(defaults.get('sigma', DEFAULT_SIGMA))
        DEFAULT_TAU = float(defaults.get('tau', DEFAULT_TAU))
        DEFAULT_SEED = int(defaults.get('seed', DEFAULT_SEED))

        logging_config = data.get('logging', {}) or {}
        LOG_LEVEL = str(logging_config.get('level', LOG_LEVEL)).upper()

        logger.info(f"Loaded configuration from {config_path}")
        logger.info(f"  - zero_tol={ZERO_TOL}, pivot_tol={PIVOT_TOL}, reduction_tol={REDUCTION_TOL}")
        logger.info(f"  - faithfulness: exhaustive up to {EXHAUSTIVE_MAX_NODES} nodes, budget {SUBSET_BUDGET}")

    except Exception as e:
        logger.error(f"Error loading config from {config_path}: {e}")


def resolve(value, default):
    """Return value unless it is None."""
    return default if value is None else value
