import json
import logging
import os
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    tomllib = None

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Invalid run configuration"""


class Config:
    # Problem defaults
    N_X = int(os.getenv('N_X', '3'))
    N_V = int(os.getenv('N_V', '2'))
    OMEGA0 = float(os.getenv('OMEGA0', '1.2'))
    X_MAX = float(os.getenv('X_MAX', '10.0'))
    V_MAX = float(os.getenv('V_MAX', '4.0'))
    # Unset means one eighth of the run's x_max
    SOURCE_WIDTH = float(os.getenv('SOURCE_WIDTH')) if os.getenv('SOURCE_WIDTH') else None

    # Solver settings
    EPS = float(os.getenv('EPS', '1e-3'))
    KAPPA_SAFETY = float(os.getenv('KAPPA_SAFETY', '1.25'))
    MAX_DEGREE = int(os.getenv('MAX_DEGREE', '16001'))
    FIDELITY_THRESHOLD = float(os.getenv('FIDELITY_THRESHOLD', '0.99'))
    PHASE_TOLERANCE = 1e-12
    PHASE_MAX_ITERATIONS = 100

    # Verification
    VERIFY_TOLERANCE = float(os.getenv('VERIFY_TOLERANCE', '1e-8'))
    UNITARY_TOLERANCE = 1e-10
    PIVOT_TOLERANCE = 1e-14

    # Simulation guards
    MAX_DATA_QUBITS = int(os.getenv('MAX_DATA_QUBITS', '10'))
    MAX_UNITARY_QUBITS = int(os.getenv('MAX_UNITARY_QUBITS', '14'))
    UNITARITY_CHECK_QUBITS = int(os.getenv('UNITARITY_CHECK_QUBITS', '10'))
    COLUMN_BATCH = int(os.getenv('COLUMN_BATCH', '32'))

    # Workers
    MAX_WORKERS = int(os.getenv('MAX_WORKERS', '1'))

    # Lowering
    DEFAULT_STRATEGY = os.getenv('STRATEGY', 'optimized')
    SWEEP_SIZES = [(3, 2), (4, 2), (4, 3), (5, 3), (5, 4), (6, 4)]

    LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')


RUN_CONFIG_KEYS = {
    'n_x', 'n_v', 'omega0', 'x_max', 'v_max', 'source_width', 'source_center',
    'density', 'temperature', 'eps', 'kappa', 'strategy', 'max_degree',
    'include_a', 'sizes',
}


def load_run_config(filepath):
    """Load a JSON or TOML key/value run configuration"""
    path = Path(filepath)
    if path.suffix == '.toml' and tomllib is None:
        raise ConfigError("TOML config files need Python 3.11+")
    try:
        if path.suffix == '.toml':
            with open(path, 'rb') as f:
                data = tomllib.load(f)
        else:
            with open(path, 'r') as f:
                data = json.load(f)
    except FileNotFoundError:
        logger.warning(f"Config file not found: {filepath}")
        raise ConfigError(f"config file not found: {filepath}")
    except (json.JSONDecodeError, ValueError) as e:
        logger.error(f"Error reading config file {filepath}: {e}")
        raise ConfigError(f"cannot parse config file {filepath}: {e}")

    unknown = set(data) - RUN_CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    logger.info(f"Loaded run config from {filepath}: {sorted(data)}")
    return data
