"""
검증 보고서 스키마 정의
"""

from typing import Any

from pydantic import Field

from .common import FrozenModel


class CriterionResult(FrozenModel):
    """수용 기준 하나의 판정"""

    name: str
    passed: bool
    value: float | None = Field(None, description="측정값 (기준과 비교되는 대표 값)")
    threshold: float | str | None = Field(None, description="임계값 또는 허용 범위")
    detail: dict[str, Any] = Field(default_factory=dict)


class VerificationReport(FrozenModel):
    criteria: list[CriterionResult]

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.criteria)

    @property
    def failed(self) -> list[str]:
        return [c.name for c in self.criteria if not c.passed]
