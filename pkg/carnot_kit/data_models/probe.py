from pydantic import BaseModel
from pydantic import Field
from pydantic import field_validator

from carnot_kit import settings
from carnot_kit.enums import VerdictEnum


class PsiProfile(BaseModel):
    """Radial profile Psi(tau) = coefficient * tau ** exponent."""

    coefficient: float = Field(default=1.0, gt=0)
    exponent: float = Field(default=1.0, gt=0)

    def __call__(self, tau: float) -> float:
        return self.coefficient * tau**self.exponent


class ProbeConfig(BaseModel):
    ladder: list[float] = Field(
        default_factory=lambda: list(settings.DEFAULT_LADDER)
    )
    random_directions: int = Field(
        default=settings.DEFAULT_RANDOM_DIRECTIONS, ge=0
    )
    seed: int = 0
    failure_fraction: float = Field(
        default=settings.DEFAULT_FAILURE_FRACTION, ge=0, le=1
    )
    stabilization: float = Field(
        default=settings.STABILIZATION_FRACTION, gt=0
    )
    blowup_growth: float = Field(default=settings.BLOWUP_GROWTH, gt=1)
    workers: int = Field(default=1, ge=1)
    euclidean: bool = False

    @field_validator("ladder")
    @classmethod
    def validate_ladder(cls, value: list[float]) -> list[float]:
        if len(value) < 3:
            raise ValueError("a ladder needs at least 3 levels")
        if any(level <= 0 for level in value):
            raise ValueError("ladder levels must be positive")
        if any(b >= a for a, b in zip(value, value[1:])):
            raise ValueError("ladder levels must be strictly decreasing")
        return value


class ProbeSample(BaseModel):
    p: list[float]
    h: list[float]
    level: float
    second_diff: float
    quotient2: float
    quotient1: float


class ScaleSupremum(BaseModel):
    level: float
    sup: float
    count: int


class ProbeReport(BaseModel):
    field: str
    group: str
    samples: list[ProbeSample]
    per_scale_sup: list[ScaleSupremum]
    verdict: VerdictEnum
    failures: int = 0
    label: str | None = None
    config: ProbeConfig

    @property
    def estimated_constant(self) -> float:
        """Sup of quotient2 at the finest level, the empirical constant."""
        return self.per_scale_sup[-1].sup

    def sup_at(self, level: float) -> float:
        for entry in self.per_scale_sup:
            if entry.level == level:
                return entry.sup
        raise KeyError(level)


class LimitEstimate(BaseModel):
    value: float
    error: float
    quotients: list[float]
    levels: list[float]
    inconclusive: bool = False
