"""Pluggable CC distance backends.

A backend computes ``d0(p) = d(p, 0)``; distances between two points follow
from left invariance, ``d(p, q) = d0(q^-1 . p)``.
"""

import functools
import logging
from typing import Sequence

import numpy as np

from carnot_kit import settings
from carnot_kit.data_models.geodesics import OracleOptions
from carnot_kit.data_models.geodesics import ShootingOptions
from carnot_kit.data_models.group import GroupSpec
from carnot_kit.enums import BackendEnum
from carnot_kit.enums import BuiltinGroupEnum
from carnot_kit.exceptions import ConfigurationError
from carnot_kit.geodesics import control_oracle_solve
from carnot_kit.geodesics import fan_out
from carnot_kit.geodesics import shoot_distance
from carnot_kit.groups import check_point
from carnot_kit.groups import inverse
from carnot_kit.groups import multiply
from carnot_kit.heisenberg import d0_squared_exact
from carnot_kit.heisenberg import d0_squared_exact_many
from carnot_kit.utils import FloatArray
from carnot_kit.utils import canonical_key

logger = logging.getLogger(__name__)


class DistanceBackend:
    kind: BackendEnum

    def __init__(self, spec: GroupSpec, workers: int = 1) -> None:
        self.spec = spec
        self.workers = workers

    def solve(self, p: Sequence[float] | FloatArray) -> tuple[float, float]:
        """Returns ``(d0(p), residual)`` where residual is solver specific."""
        raise NotImplementedError

    def d0(self, p: Sequence[float] | FloatArray) -> float:
        return self.solve(p)[0]

    def d0_many(
        self, points: Sequence[Sequence[float]] | FloatArray
    ) -> FloatArray:
        arr = check_point(self.spec, points).reshape(-1, self.spec.n)
        values = fan_out(self.d0, list(arr), self.workers)
        return np.asarray(values, dtype=np.float64)

    def distance(
        self,
        p: Sequence[float] | FloatArray,
        q: Sequence[float] | FloatArray,
    ) -> float:
        return self.d0(multiply(self.spec, inverse(self.spec, q), p))


class ExactHeisenbergBackend(DistanceBackend):
    kind = BackendEnum.EXACT

    def __init__(self, spec: GroupSpec, workers: int = 1) -> None:
        if spec.name != BuiltinGroupEnum.HEISENBERG:
            raise ConfigurationError(
                f"the exact backend only covers the heisenberg group, "
                f"not {spec.name!r}"
            )
        super().__init__(spec, workers)

    def solve(self, p: Sequence[float] | FloatArray) -> tuple[float, float]:
        return float(np.sqrt(d0_squared_exact(p))), 0.0

    def d0_many(
        self, points: Sequence[Sequence[float]] | FloatArray
    ) -> FloatArray:
        return np.sqrt(d0_squared_exact_many(points))


class _CachedBackend(DistanceBackend):
    """Memoizes solver results for the most recent ``cache_size`` points;
    probes revisit base points."""

    def __init__(
        self,
        spec: GroupSpec,
        workers: int = 1,
        cache_size: int = settings.BACKEND_CACHE_SIZE,
    ) -> None:
        super().__init__(spec, workers)
        self._lookup = functools.lru_cache(maxsize=cache_size)(
            self._compute_key
        )

    def _compute(self, p: FloatArray) -> tuple[float, float]:
        raise NotImplementedError

    def _compute_key(self, key: tuple[float, ...]) -> tuple[float, float]:
        return self._compute(np.asarray(key, dtype=np.float64))

    def cache_info(self) -> "functools._CacheInfo":
        return self._lookup.cache_info()

    def cache_clear(self) -> None:
        self._lookup.cache_clear()

    def solve(self, p: Sequence[float] | FloatArray) -> tuple[float, float]:
        return self._lookup(canonical_key(check_point(self.spec, p)))


class ShootingBackend(_CachedBackend):
    kind = BackendEnum.SHOOTING

    def __init__(
        self,
        spec: GroupSpec,
        options: ShootingOptions | None = None,
        workers: int = 1,
        cache_size: int = settings.BACKEND_CACHE_SIZE,
    ) -> None:
        super().__init__(spec, workers, cache_size)
        self.options = options or ShootingOptions()

    def _compute(self, p: FloatArray) -> tuple[float, float]:
        result = shoot_distance(self.spec, p, self.options)
        return result.distance, result.terminal_residual


class OracleBackend(_CachedBackend):
    kind = BackendEnum.ORACLE

    def __init__(
        self,
        spec: GroupSpec,
        options: OracleOptions | None = None,
        workers: int = 1,
        cache_size: int = settings.BACKEND_CACHE_SIZE,
    ) -> None:
        super().__init__(spec, workers, cache_size)
        self.options = options or OracleOptions()

    def _compute(self, p: FloatArray) -> tuple[float, float]:
        result = control_oracle_solve(self.spec, p, options=self.options)
        return result.distance, result.residual


def make_backend(
    kind: BackendEnum | str,
    spec: GroupSpec,
    shooting_options: ShootingOptions | None = None,
    oracle_options: OracleOptions | None = None,
    workers: int = 1,
) -> DistanceBackend:
    try:
        backend_kind = BackendEnum(kind)
    except ValueError:
        raise ConfigurationError(f"unknown backend {kind!r}") from None
    logger.debug("distance backend %s on %s", backend_kind, spec.name)
    if backend_kind == BackendEnum.EXACT:
        return ExactHeisenbergBackend(spec, workers)
    if backend_kind == BackendEnum.SHOOTING:
        return ShootingBackend(spec, shooting_options, workers)
    return OracleBackend(spec, oracle_options, workers)
