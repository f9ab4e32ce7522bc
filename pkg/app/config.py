"""qfolio application configuration settings."""

import os

# .env 파일 로드
from dotenv import load_dotenv
from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

load_dotenv()


class Settings(BaseSettings):
    """qfolio 실행 환경 설정"""

    # 기본 설정
    app_name: str = "qfolio Portfolio Simulator"
    app_version: str = "1.0.0"
    debug: bool = False
    environment: str = "development"

    # 시뮬레이터 설정
    qubit_cap: int = 24  # 2^24 amplitudes
    density_qubit_cap: int = 11  # 밀도행렬 파이프라인 상한

    # 로깅 설정
    log_dir: str = os.getenv("QFOLIO_LOG_DIR", "logs")
    log_level: str = "INFO"
    log_to_file: bool = True

    # 실행 설정
    output_dir: str = "out"
    max_workers: int = 4
    default_seed: int = 1234
    schema_version: str = "1.0"

    model_config = SettingsConfigDict(
        env_prefix="QFOLIO_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",  # 추가 필드 무시
    )

    @field_validator("qubit_cap", "density_qubit_cap")
    @classmethod
    def qubit_cap_in_range(cls, v: int) -> int:
        """Validate that the qubit cap fits a dense simulation."""
        if not 1 <= v <= 30:
            raise ValueError("qubit cap must be within [1, 30]")
        return v

    @field_validator("log_level")
    @classmethod
    def log_level_known(cls, v: str) -> str:
        """Validate the log level name."""
        level = v.upper()
        if level not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"unknown log level: {v}")
        return level

    @field_validator("max_workers")
    @classmethod
    def max_workers_positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError("max_workers must be >= 1")
        return v


# 설정 인스턴스 생성
settings = Settings()
