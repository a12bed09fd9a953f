from pydantic import BaseModel
from pydantic import Field

from carnot_kit import settings


class ExtremalPath(BaseModel):
    times: list[float]
    points: list[list[float]]
    covectors: list[list[float]]
    energy: float
    hamiltonian_drift: float
    vertical_drift: float = 0.0  # step 2 only: max change of xi^(2)


class ShootingResult(BaseModel):
    distance: float
    best_covector: list[float]
    terminal_residual: float
    starts_tried: int
    search_radius: float
    converged_starts: int = 0
    doublings: int = 0


class OracleResult(BaseModel):
    distance: float
    residual: float
    controls: list[list[float]]
    converged_restarts: int
    restarts: int


class ShootingOptions(BaseModel):
    starts: int = Field(default=settings.DEFAULT_SHOOTING_STARTS, ge=1)
    acceptance_gap: float = Field(
        default=settings.SHOOTING_ACCEPTANCE_GAP, gt=0
    )
    stabilization_rtol: float = Field(
        default=settings.SHOOTING_STABILIZATION_RTOL, gt=0
    )
    max_doublings: int = Field(default=settings.SHOOTING_MAX_DOUBLINGS, ge=0)
    flow_steps: int = Field(
        default=settings.DEFAULT_FLOW_STEPS, ge=settings.MIN_FLOW_STEPS
    )
    max_evaluations: int = Field(default=800, ge=10)
    seed: int = 0
    workers: int = Field(default=1, ge=1)


class OracleOptions(BaseModel):
    segments: int = Field(
        default=settings.ENGEL_ORACLE_SEGMENTS,
        ge=settings.ORACLE_MIN_SEGMENTS,
        le=settings.ORACLE_MAX_SEGMENTS,
    )
    restarts: int = Field(default=settings.ORACLE_RESTARTS, ge=1)
    residual_tol: float = Field(default=settings.ORACLE_RESIDUAL_TOL, gt=0)
    penalty_start: float = Field(default=10.0, gt=0)
    penalty_growth: float = Field(default=10.0, gt=1)
    penalty_max: float = Field(default=1e10, gt=0)
    max_outer: int = Field(default=30, ge=1)
    seed: int = 0
    workers: int = Field(default=1, ge=1)

