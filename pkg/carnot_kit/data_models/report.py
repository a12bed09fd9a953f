from typing import Any

from pydantic import BaseModel
from pydantic import Field

from carnot_kit import settings
from carnot_kit.enums import CheckStatusEnum
from carnot_kit.enums import ProvenanceEnum
from carnot_kit.enums import ReportFormatEnum


class ExperimentConfig(BaseModel):
    """Echo of the configuration a report was produced from."""

    command: str
    group: str | None = None
    seed: int = 0
    output: str | None = None
    format: ReportFormatEnum = ReportFormatEnum.JSON
    params: dict[str, Any] = Field(default_factory=dict)


class CheckResult(BaseModel):
    name: str
    status: CheckStatusEnum
    measured: float | str | None = None
    expected: float | str | None = None
    tolerance: float | None = None
    provenance: ProvenanceEnum
    detail: str | None = None


class Report(BaseModel):
    schema_version: int = settings.SCHEMA_VERSION
    generated_at: str
    config: ExperimentConfig
    checks: list[CheckResult] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        """True when every check that ran passed."""
        return all(
            check.status != CheckStatusEnum.FAIL for check in self.checks
        )

    def count(self, status: CheckStatusEnum) -> int:
        return sum(1 for check in self.checks if check.status == status)
