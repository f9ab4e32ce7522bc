"""
판독(readout) 관련 Pydantic 스키마 정의
"""

import numpy as np
from pydantic import Field, model_validator

from .common import FloatArray, FrozenModel, IntArray

NORM_TOL = 1e-12


class SwapTestEstimate(FrozenModel):
    """SWAP 테스트 결과: 수락 확률 p = (1 + F)/2"""

    overlap: float = Field(..., ge=0.0, le=1.0)
    shots: int = Field(..., ge=0, description="0 이면 정확 모드")
    std_error: float = Field(..., ge=0.0)
    acceptance_probability: float = Field(..., ge=0.0, le=1.0)


class PortfolioComparison(FrozenModel):
    """후보 포트폴리오가 충분히 합리적인지 판정"""

    overlap: float
    accepted: bool
    threshold: float
    std_error: float = 0.0


class SamplingResult(FrozenModel):
    """롱/숏 가정 하의 샘플링 포트폴리오 w′"""

    counts: dict[int, int] = Field(..., description="인덱스 → M_j")
    total: int = Field(..., ge=1, description="샘플 수 M")
    w_prime: FloatArray = Field(..., description="w′_j = sgn(R_j)·√(M_j/M)")
    est_return: float = Field(..., description="E[Z] 추정")
    est_return_second_moment: float
    excess_risk: float | None = Field(None, description="w′ᵀΣw′ − wᵀΣw (Σ 가 주어진 경우만)")
    sigma_j: FloatArray = Field(..., description="√(p̂_j(1−p̂_j)/M)")
    dropped: int = Field(0, ge=0, description="R_j = 0 이라 Z 에서 제외된 샘플 수")
    support_size: int = Field(..., ge=0)

    @model_validator(mode="after")
    def check_normalization(self):
        if sum(self.counts.values()) != self.total:
            raise ValueError("counts must sum to the sample total")
        if abs(float(self.w_prime @ self.w_prime) - 1.0) > NORM_TOL:
            raise ValueError("w_prime must be a unit vector")
        return self

    def to_json_dict(self) -> dict:
        return {
            "counts": {str(k): v for k, v in sorted(self.counts.items())},
            "total": self.total,
            "w_prime": self.w_prime.tolist(),
            "est_return": self.est_return,
            "est_return_second_moment": self.est_return_second_moment,
            "excess_risk": self.excess_risk,
            "sigma_j": self.sigma_j.tolist(),
            "dropped": self.dropped,
            "support_size": self.support_size,
        }


class SamplingErrorReport(FrozenModel):
    """샘플링 포트폴리오의 오차 분석"""

    epsilon_w: float = Field(..., ge=0, description="‖w − w′‖₂")
    risk_difference: float = Field(..., ge=0, description="|w′ᵀΣw′ − wᵀΣw|")
    bound: float = Field(..., ge=0, description="2‖Σ‖₂ε_w")
    bound_satisfied: bool
    sigma_j: FloatArray
    variance_term: float | None = Field(None, description="Σ′_j R_j²√((1−|w_j|²)/(M|w_j|²))")
    support_size: int


class AssetRanking(FrozenModel):
    """측정 빈도 기준 자산 순위"""

    order: IntArray = Field(..., description="점수 내림차순 자산 인덱스")
    scores: FloatArray = Field(..., description="자산별 (추정) 확률")
    shots: int = Field(..., ge=0)

    @model_validator(mode="after")
    def check_ranking(self):
        if sorted(self.order.tolist()) != list(range(len(self.scores))):
            raise ValueError("order must be a permutation of the asset indices")
        return self

    def top(self, k: int) -> list[int]:
        return [int(i) for i in self.order[:k]]

    @property
    def n_assets(self) -> int:
        return int(np.asarray(self.scores).shape[0])
