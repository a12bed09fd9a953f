import json
from datetime import datetime
from datetime import timezone
from typing import Any
from typing import Sequence

import numpy as np
import numpy.typing as npt

FloatArray = npt.NDArray[np.float64]


def get_current_time_iso() -> str:
    """Returns the current UTC time as an ISO-8601 string.

    Returns
    -------
    str
    """
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def json_to_file(obj: dict[Any, Any] | list[Any], filepath: str) -> None:
    with open(filepath, "w") as f:
        json.dump(obj, f, indent=4, sort_keys=True)


def parse_point(text: str) -> list[float]:
    """Parses a comma separated coordinate list such as ``0,0,1``."""
    return [float(item) for item in text.split(",") if item.strip()]


def canonical_key(values: Sequence[float] | FloatArray) -> tuple[float, ...]:
    return tuple(float(v) for v in np.ravel(values))


def unit_directions(
    dim: int, random_count: int, rng: np.random.Generator
) -> list[FloatArray]:
    """Coordinate axes of R^dim followed by random unit vectors."""
    directions = [np.eye(dim)[i] for i in range(dim)]
    for _ in range(random_count):
        v = rng.standard_normal(dim)
        norm = float(np.linalg.norm(v))
        while norm < 1e-12:
            v = rng.standard_normal(dim)
            norm = float(np.linalg.norm(v))
        directions.append(v / norm)
    return directions
