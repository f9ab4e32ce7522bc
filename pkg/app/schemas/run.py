"""
실행 설정(RunConfig) 스키마 정의
"""

from pathlib import Path
from typing import Any, Literal

from pydantic import Field, field_validator, model_validator

from app.config import settings

from .common import FrozenModel
from .hhl import HHLConfig
from .market import FactorModelSpec
from .portfolio import BudgetMode


class RunConfig(FrozenModel):
    """명령 실행 설정: 기본값 ← 설정 파일 ← 명령행 플래그"""

    # 입력 (CSV 파일 또는 합성 팩터 모델 중 하나)
    input_path: str | None = Field(None, description="가격 CSV 경로")
    synthetic: bool | None = Field(None, description="합성 데이터 사용 여부 (없으면 입력 경로 유무로 결정)")
    n_assets: int = Field(4, ge=2, le=64)
    n_times: int = Field(24, ge=3)
    n_factors: int = Field(1, ge=1)
    loadings_scale: float = Field(0.01, ge=0)
    idiosyncratic_scale: float = Field(0.005, ge=0)
    dt_period: int = Field(1, ge=1)

    # 프런티어
    mu_min: float | None = None
    mu_max: float | None = None
    mu_steps: int = Field(5, ge=1, le=1000)
    mu: float | None = Field(None, description="solve 명령의 단일 목표 수익률")
    xi: float = Field(1.0, gt=0, description="총 자산")
    budget_mode: BudgetMode = BudgetMode.UNIT

    # HHL
    kappa: float | None = Field(None, gt=0, description="없으면 M̂ 스펙트럼에서 제안")
    c_constant: float | None = Field(None, gt=0)
    n_phase_bits: int = Field(10, ge=3, le=12)
    backend: Literal["exact", "trotter", "density_exp"] = "exact"
    t0: float | None = Field(None, gt=0)
    trotter_steps: int = Field(8, ge=1)
    density_copies: int = Field(32, ge=1)

    # 판독
    shots: int = Field(0, ge=0, description="0 이면 정확 모드")
    samples: int = Field(10000, ge=1, description="롱/숏 샘플링 M")

    out_dir: str = Field(default_factory=lambda: settings.output_dir)
    seed: int = Field(default_factory=lambda: settings.default_seed, ge=0, lt=2**64)
    max_workers: int | None = Field(None, ge=1)
    log_level: str | None = None

    @field_validator("input_path")
    @classmethod
    def empty_path_is_none(cls, v: str | None) -> str | None:
        return v or None

    @field_validator("log_level")
    @classmethod
    def log_level_known(cls, v: str | None) -> str | None:
        if v is None:
            return v
        level = v.upper()
        if level not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"unknown log level: {v}")
        return level

    @model_validator(mode="after")
    def check_sources(self):
        if self.input_path is not None and self.synthetic:
            raise ValueError("input_path and synthetic are mutually exclusive")
        if self.synthetic is False and self.input_path is None:
            raise ValueError("an input path is required when synthetic data is disabled")
        if self.n_factors > self.n_assets:
            raise ValueError("n_factors must not exceed n_assets")
        if self.mu_min is not None and self.mu_max is not None and self.mu_min > self.mu_max:
            raise ValueError("mu_min must not exceed mu_max")
        if self.c_constant is not None and self.kappa is not None and self.c_constant > 1.0 / self.kappa:
            raise ValueError("c_constant must not exceed 1/kappa")
        return self

    @property
    def use_synthetic(self) -> bool:
        return self.input_path is None

    @property
    def out_path(self) -> Path:
        return Path(self.out_dir)

    def factor_spec(self) -> FactorModelSpec:
        return FactorModelSpec(
            n_factors=self.n_factors,
            loadings_scale=self.loadings_scale,
            idiosyncratic_scale=self.idiosyncratic_scale,
            seed=self.seed,
        )

    def hhl_config(self, kappa: float) -> HHLConfig:
        """κ 가 정해진 뒤의 HHL 설정"""
        return HHLConfig(
            kappa=kappa,
            c_constant=self.c_constant,
            n_phase_bits=self.n_phase_bits,
            evolution_backend=self.backend,
            t0=self.t0,
            seed=self.seed,
            trotter_steps=self.trotter_steps,
            density_copies=self.density_copies,
        )

    def echo(self) -> dict[str, Any]:
        """산출물에 기록할 설정 (출력 위치와 로그 수준 제외)"""
        return self.model_dump(mode="json", exclude={"out_dir", "log_level", "max_workers"})
