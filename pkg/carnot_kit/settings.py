import datetime
import os
from typing import Any

from carnot_kit.utils import json_to_file

PACKAGE_NAME: str = "carnot-kit"
SCHEMA_VERSION: int = 1
THREADS_ENV_VAR: str = "CARNOT_KIT_THREADS"

# heisenberg-exact
MU_SERIES_THRESHOLD: float = 1e-4
STABLE_NUMERATOR_THRESHOLD: float = 1.0

# geodesic-engine
MIN_FLOW_STEPS: int = 16
DEFAULT_FLOW_STEPS: int = 256
DEFAULT_SHOOTING_STARTS: int = 64
SHOOTING_ACCEPTANCE_GAP: float = 1e-8
SHOOTING_STABILIZATION_RTOL: float = 1e-6
SHOOTING_MAX_DOUBLINGS: int = 4
ORACLE_MIN_SEGMENTS: int = 4
ORACLE_MAX_SEGMENTS: int = 64
ORACLE_RESTARTS: int = 8
ORACLE_RESIDUAL_TOL: float = 1e-6
ENGEL_SUBSTEPS: int = 8
BACKEND_CACHE_SIZE: int = 65_536

# concavity-probe
DEFAULT_LADDER: tuple[float, ...] = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)
SHOOTING_LADDER: tuple[float, ...] = (1e-1, 3e-2, 1e-2, 3e-3)
ENGEL_LADDER: tuple[float, ...] = (0.2, 0.1, 0.05, 0.025)
DEFAULT_RANDOM_DIRECTIONS: int = 8
DEFAULT_FAILURE_FRACTION: float = 0.01
STABILIZATION_FRACTION: float = 0.10
BLOWUP_GROWTH: float = 2.0
# doubling, up to the stabilization band
ENGEL_BLOWUP_GROWTH: float = BLOWUP_GROWTH * (1.0 - STABILIZATION_FRACTION)
ENGEL_ORACLE_SEGMENTS: int = 32

# hopf-lax
DEFAULT_HOPF_LAX_SAMPLES: int = 4096
DENSE_ORACLE_SAMPLES: int = 100_000
DEFAULT_REFINE_SEEDS: int = 8
CONVEXITY_TOLERANCE: float = 1e-10
RADIUS_SLACK: float = 1.0


def default_threads() -> int:
    """Worker count from the environment, falling back to the core count."""
    value = os.environ.get(THREADS_ENV_VAR)
    if value is not None and value.strip():
        return max(1, int(value))
    return os.cpu_count() or 1


def log_json_artifact(
    data: dict[str, Any] | list[Any],
    name: str,
    logs_directory: None | str,
) -> str:
    time = datetime.datetime.now().strftime("%Y-%m-%dT%H%M%S%f")
    filename = f"{time}-{name}.json"
    if logs_directory is not None:
        filepath = os.path.join(logs_directory, filename)
    else:
        filepath = filename
    json_to_file(data, filepath)
    return filepath
