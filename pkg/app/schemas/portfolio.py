"""
포트폴리오 최적화 관련 Pydantic 스키마 정의
"""

from enum import Enum

import numpy as np
from pydantic import Field, model_validator

from .common import FloatArray, FrozenModel


class BudgetMode(str, Enum):
    """예산 제약 규약"""
    PRICES = "prices"  # Πᵀw = ξ
    UNIT = "unit"  # 1ᵀw = ξ


class KKTSystem(FrozenModel):
    """Markowitz 등식 제약 QP 의 KKT 선형 시스템 M x = b"""

    m_matrix: FloatArray = Field(..., description="(N+2)×(N+2) 대칭 행렬")
    m_hat: FloatArray = Field(..., description="M / tr M")
    rhs: FloatArray = Field(..., description="(μ, ξ, 0, …, 0)")
    mu: float = Field(..., description="목표 수익률")
    xi: float = Field(..., description="총 자산 (통화)")
    budget_mode: BudgetMode = BudgetMode.PRICES

    @model_validator(mode="after")
    def check_blocks(self):
        m = self.m_matrix
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 3:
            raise ValueError("KKT matrix must be square with N ≥ 1")
        if np.max(np.abs(m - m.T)) > 1e-10 * max(1.0, float(np.abs(m).max())):
            raise ValueError("KKT matrix must be symmetric")
        if np.any(m[:2, :2] != 0):
            raise ValueError("constraint block of the KKT matrix must be zero")
        if self.rhs.shape != (m.shape[0],) or np.any(self.rhs[2:] != 0):
            raise ValueError("rhs must be (μ, ξ, 0, …, 0)")
        trace = float(np.trace(m))
        if trace == 0 or not np.allclose(self.m_hat, m / trace, rtol=0.0, atol=1e-14 * max(1.0, float(np.abs(m / trace).max()))):
            raise ValueError("m_hat must equal m_matrix / tr(m_matrix)")
        return self

    @property
    def n_assets(self) -> int:
        return int(self.m_matrix.shape[0] - 2)

    @property
    def dim(self) -> int:
        return int(self.m_matrix.shape[0])

    @property
    def expected_return(self) -> np.ndarray:
        return self.m_matrix[0, 2:]

    @property
    def budget_vector(self) -> np.ndarray:
        return self.m_matrix[1, 2:]

    @property
    def covariance(self) -> np.ndarray:
        return self.m_matrix[2:, 2:]

    @property
    def trace(self) -> float:
        return float(np.trace(self.m_matrix))


class PortfolioSolution(FrozenModel):
    """KKT 해: 라그랑주 승수와 자산 배분"""

    eta: float
    theta: float
    weights: FloatArray = Field(..., description="자산별 통화 배분 (공매도 허용)")
    achieved_return: float
    achieved_budget: float
    risk: float = Field(..., description="wᵀΣw")
    kappa_used: float | None = None
    epsilon_kappa: float = Field(0.0, ge=0)

    @model_validator(mode="after")
    def check_risk(self):
        if self.risk < -1e-10 * max(1.0, float(self.weights @ self.weights)):
            raise ValueError("risk must be non-negative")
        return self

    def direction(self) -> np.ndarray:
        """정규화된 배분 방향 ŵ"""
        norm = np.linalg.norm(self.weights)
        return self.weights / norm if norm > 0 else self.weights


class FrontierPoint(FrozenModel):
    mu: float
    min_risk: float
    weights: FloatArray


class FrontierWarning(FrozenModel):
    """프런티어 계산에서 제외된 점"""
    index: int
    mu: float
    code: str
    message: str


class FrontierCurve(FrozenModel):
    """μ 순서의 최소 위험 곡선"""

    points: list[FrontierPoint] = Field(default_factory=list)
    warnings: list[FrontierWarning] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_points(self):
        for point in self.points:
            if point.min_risk < -1e-10:
                raise ValueError(f"negative risk at mu={point.mu}")
        return self

    @property
    def mus(self) -> np.ndarray:
        return np.array([p.mu for p in self.points])

    @property
    def risks(self) -> np.ndarray:
        return np.array([p.min_risk for p in self.points])

    def is_convex(self, tol: float = 1e-9) -> bool:
        """이산 중점 볼록성: 등간격 격자에서 2r_i ≤ r_{i−1} + r_{i+1}"""
        risks = self.risks
        if len(risks) < 3:
            return True
        scale = max(1.0, float(np.abs(risks).max()))
        return bool(np.all(2 * risks[1:-1] <= risks[:-2] + risks[2:] + tol * scale))


class QuantumFrontierPoint(FrontierPoint):
    """양자 판독 결과가 덧붙은 프런티어 점"""
    risk_quantum: float
    fidelity: float
    p_w: float
    epsilon_kappa: float
    risk_std_error: float = 0.0


class QuantumFrontierCurve(FrontierCurve):
    points: list[QuantumFrontierPoint] = Field(default_factory=list)
