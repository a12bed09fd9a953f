import math

import numpy as np
from pydantic import BaseModel
from pydantic import Field
from pydantic import PrivateAttr
from pydantic import model_validator

from carnot_kit import settings
from carnot_kit.enums import BackendEnum
from carnot_kit.enums import InitialDatumKindEnum
from carnot_kit.enums import PhiKindEnum
from carnot_kit.enums import VerdictEnum
from carnot_kit.exceptions import PhiValidationError

TableValues = list[float] | list[list[float]] | list[list[list[float]]]


class PhiSpec(BaseModel):
    """Convex nondecreasing Phi with Phi(0) = 0.

    ``power`` is tau**alpha / alpha for alpha in (1, 2], ``quadratic`` is
    tau**2 / 2 and ``tabulated`` interpolates a grid of (tau, Phi(tau))
    pairs starting at tau = 0.
    """

    kind: PhiKindEnum
    params: dict[str, float] = Field(default_factory=dict)
    table: list[tuple[float, float]] | None = None
    convexity_margin: float | None = None

    _cache: dict[str, object] = PrivateAttr(default_factory=dict)

    @model_validator(mode="after")
    def validate_kind(self) -> "PhiSpec":
        if self.kind == PhiKindEnum.POWER:
            alpha = self.params.get("alpha")
            if alpha is None or not 1.0 < alpha <= 2.0:
                raise PhiValidationError(
                    f"power Phi needs alpha in (1, 2], got {alpha}"
                )
        elif self.kind == PhiKindEnum.TABULATED:
            self.convexity_margin = _validate_table(self.table)
        return self

    @property
    def alpha(self) -> float:
        if self.kind == PhiKindEnum.QUADRATIC:
            return 2.0
        return float(self.params["alpha"])

    @property
    def beta(self) -> float:
        """Conjugate exponent, 1/alpha + 1/beta = 1."""
        return self.alpha / (self.alpha - 1.0)

    def cached(self, key: str) -> object | None:
        return self._cache.get(key)

    def store(self, key: str, value: object) -> None:
        self._cache[key] = value


def _validate_table(table: list[tuple[float, float]] | None) -> float:
    if not table or len(table) < 3:
        raise PhiValidationError("a tabulated Phi needs at least 3 nodes")
    taus = np.array([row[0] for row in table], dtype=np.float64)
    values = np.array([row[1] for row in table], dtype=np.float64)
    if not (np.all(np.isfinite(taus)) and np.all(np.isfinite(values))):
        raise PhiValidationError("tabulated Phi must be finite")
    if taus[0] != 0.0 or values[0] != 0.0:
        raise PhiValidationError("tabulated Phi must start at (0, 0)")
    if np.any(np.diff(taus) <= 0.0):
        raise PhiValidationError("tabulated tau must increase strictly")
    slopes = np.diff(values) / np.diff(taus)
    if slopes[0] < -settings.CONVEXITY_TOLERANCE:
        raise PhiValidationError("tabulated Phi must be nondecreasing")
    increments = np.diff(slopes)
    margin = float(np.min(increments))
    if margin < -settings.CONVEXITY_TOLERANCE:
        raise PhiValidationError(
            f"tabulated Phi is not convex: slope drops by {-margin:g}"
        )
    return margin


class DatumParams(BaseModel):
    value: float = 0.0
    center: list[float] | None = None
    cap: float | None = Field(default=None, gt=0)
    cloud: list[list[float]] | None = None
    axes: list[list[float]] | None = None
    values: TableValues | None = None


class InitialDatum(BaseModel):
    """Initial datum g of the Cauchy problem.

    * ``constant``: g = value;
    * ``distance``: g = d0(center^-1 . p), optionally min(., cap);
    * ``point_cloud``: g = min over the cloud of d(p, q), optionally capped;
    * ``table``: multilinear interpolation of ``values`` on the grid
      ``axes`` with queries clamped to the box.
    """

    kind: InitialDatumKindEnum
    params: DatumParams = Field(default_factory=DatumParams)

    @model_validator(mode="after")
    def validate_params(self) -> "InitialDatum":
        if self.kind == InitialDatumKindEnum.POINT_CLOUD:
            if not self.params.cloud:
                raise ValueError("a point_cloud datum needs a nonempty cloud")
        if self.kind == InitialDatumKindEnum.TABLE:
            if self.params.axes is None or self.params.values is None:
                raise ValueError("a table datum needs axes and values")
            shape = tuple(len(axis) for axis in self.params.axes)
            if np.asarray(self.params.values).shape != shape:
                raise ValueError(
                    f"table values must have shape {shape} to match the axes"
                )
        if not math.isfinite(self.params.value):
            raise ValueError("datum value must be finite")
        return self

    @property
    def bounds(self) -> tuple[float, float | None]:
        """(inf estimate, sup estimate); sup is None when unbounded."""
        kind = self.kind
        if kind == InitialDatumKindEnum.CONSTANT:
            return self.params.value, self.params.value
        if kind == InitialDatumKindEnum.TABLE:
            values = np.asarray(self.params.values, dtype=np.float64)
            return float(values.min()), float(values.max())
        return 0.0, self.params.cap

    @property
    def bounded(self) -> bool:
        return self.bounds[1] is not None

    @property
    def lipschitz(self) -> float | None:
        """Lipschitz constant for the CC metric where known."""
        if self.kind == InitialDatumKindEnum.CONSTANT:
            return 0.0
        if self.kind == InitialDatumKindEnum.TABLE:
            return None
        return 1.0

    @property
    def growth_constant(self) -> float:
        """C of the lower bound g(p) >= -C (1 + d0(p))."""
        inf = self.bounds[0]
        return max(0.0, -inf)

    def anchors(self, n: int) -> list[list[float]]:
        """Distinguished points of the datum: the center or the cloud."""
        if self.kind == InitialDatumKindEnum.DISTANCE:
            return [list(self.params.center or [0.0] * n)]
        if self.kind == InitialDatumKindEnum.POINT_CLOUD:
            return [list(q) for q in self.params.cloud or []]
        return []


class HopfLaxOptions(BaseModel):
    samples: int = Field(default=settings.DEFAULT_HOPF_LAX_SAMPLES, ge=1)
    refine_seeds: int = Field(default=settings.DEFAULT_REFINE_SEEDS, ge=0)
    max_refine_evaluations: int = Field(default=400, ge=1)
    radius_slack: float = Field(default=settings.RADIUS_SLACK, gt=0)
    seed: int = 0
    workers: int = Field(default=1, ge=1)


class HopfLaxResult(BaseModel):
    value: float
    argmin: list[float]
    search_radius: float
    evaluations: int
    refinement_gap: float
    t: float | None = None
    p: list[float] | None = None
    probe_verdict: VerdictEnum | None = None


class HopfLaxProblem(BaseModel):
    """Problem document: group, Phi, g, times and evaluation points."""

    group: str
    phi: PhiSpec
    g: InitialDatum
    t: float | list[float]
    points: list[list[float]]
    backend: BackendEnum | None = None
    options: HopfLaxOptions = Field(default_factory=HopfLaxOptions)
    probe: bool = False

    @property
    def times(self) -> list[float]:
        return [self.t] if isinstance(self.t, (int, float)) else list(self.t)
