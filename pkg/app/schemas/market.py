"""
시장 데이터 관련 Pydantic 스키마 정의
"""

import numpy as np
from pydantic import Field, model_validator

from .common import FloatArray, FrozenModel

PSD_TOL = 1e-10


class PriceSeries(FrozenModel):
    """N×T′ 자산 가격 행렬과 시간 축"""

    prices: FloatArray = Field(..., description="N×T′ 가격 (통화 단위)")
    asset_labels: list[str] = Field(..., description="자산 이름")
    time_axis: list[int | str] = Field(..., description="타임스탬프 또는 정수 틱")

    @model_validator(mode="after")
    def check_prices(self):
        p = self.prices
        if p.ndim != 2:
            raise ValueError(f"prices must be a matrix, got shape {p.shape}")
        if p.shape[0] != len(self.asset_labels):
            raise ValueError("row count differs from label count")
        if p.shape[1] != len(self.time_axis):
            raise ValueError("column count differs from time-axis length")
        if p.shape[0] < 2:
            raise ValueError("N ≥ 2 required")
        if p.shape[1] < 2:
            raise ValueError("T′ ≥ 2 required")
        if not np.all(np.isfinite(p)) or np.any(p <= 0):
            raise ValueError("all prices must be strictly positive")
        return self

    @property
    def n_assets(self) -> int:
        return int(self.prices.shape[0])

    @property
    def n_times(self) -> int:
        return int(self.prices.shape[1])


class ReturnsPanel(FrozenModel):
    """수익률 y_s(t), 기대수익률 R, 표본 공분산 Σ 와 노름들"""

    returns: FloatArray = Field(..., description="N×T 수익률 (비율)")
    expected_return: FloatArray = Field(..., description="길이 N 벡터 R")
    covariance: FloatArray = Field(..., description="N×N 표본 공분산 Σ")
    norm_y: float = Field(..., ge=0)
    norm_y_prime: float = Field(..., ge=0)
    norm_y_tilde: float = Field(..., ge=0)
    asset_labels: list[str] = Field(default_factory=list)
    dt_period: int = Field(1, ge=1, description="수익률 기간")

    @model_validator(mode="after")
    def check_panel(self):
        y, r, sigma = self.returns, self.expected_return, self.covariance
        if y.ndim != 2:
            raise ValueError("returns must be a matrix")
        n, t = y.shape
        if r.shape != (n,) or sigma.shape != (n, n):
            raise ValueError("expected_return / covariance shapes do not match returns")
        if self.asset_labels and len(self.asset_labels) != n:
            raise ValueError("label count differs from asset count")
        if not np.allclose(r, y.mean(axis=1), rtol=0.0, atol=1e-12 * max(1.0, float(np.abs(y).max(initial=0.0)))):
            raise ValueError("expected_return must equal the row mean of returns")
        scale = float(np.linalg.norm(sigma, ord=2)) if sigma.size else 0.0
        if np.max(np.abs(sigma - sigma.T), initial=0.0) > PSD_TOL * max(scale, 1.0):
            raise ValueError("covariance must be symmetric")
        if n and np.min(np.linalg.eigvalsh(sigma)) < -PSD_TOL * scale:
            raise ValueError("covariance must be positive semi-definite")
        return self

    @property
    def n_assets(self) -> int:
        return int(self.returns.shape[0])

    @property
    def n_times(self) -> int:
        return int(self.returns.shape[1])

    @property
    def trace_sigma(self) -> float:
        return float(np.trace(self.covariance))

    def to_json_dict(self) -> dict:
        """JSON 내보내기 형식: returns, expected_return, covariance, norms"""
        return {
            "returns": self.returns.tolist(),
            "expected_return": self.expected_return.tolist(),
            "covariance": self.covariance.tolist(),
            "norms": {
                "norm_y": self.norm_y,
                "norm_y_prime": self.norm_y_prime,
                "norm_y_tilde": self.norm_y_tilde,
            },
        }


class FactorModelSpec(FrozenModel):
    """합성 가격 생성을 위한 팩터 모델 사양"""

    n_factors: int = Field(1, gt=0, description="팩터 수")
    loadings_scale: float = Field(0.01, ge=0, description="팩터 적재 표준편차")
    idiosyncratic_scale: float = Field(0.005, ge=0, description="고유 잡음 표준편차")
    drift: FloatArray | None = Field(None, description="길이 N 드리프트 (없으면 0)")
    seed: int = Field(1234, ge=0, lt=2**64)
