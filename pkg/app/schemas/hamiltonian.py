"""
해밀토니안 시뮬레이션 관련 Pydantic 스키마 정의
"""

from typing import Literal

import numpy as np
from pydantic import Field, model_validator

from .common import ComplexArray, FloatArray, FrozenModel
from .quantum import DensityMatrix

EvolutionMethod = Literal["exact", "trotter", "density_exp"]


class HamiltonianParts(FrozenModel):
    """
    M̂ = H_Σ + H_R + H_Π 분해

    모든 부분은 tr M 으로 나눈 (N+2)×(N+2) 행렬이다.
    """

    h_sigma: FloatArray = Field(..., description="오른쪽 아래 N×N 블록의 Σ/trM")
    h_r: FloatArray = Field(..., description="1번 행/열 꼬리의 R/trM")
    h_pi: FloatArray = Field(..., description="2번 행/열 꼬리의 Π/trM")
    trace_m: float = Field(..., gt=0)
    trace_sigma: float = Field(..., gt=0)
    trotter_dt: float = Field(..., ge=0)
    n_steps: int = Field(1, ge=1)

    @model_validator(mode="after")
    def check_supports(self):
        dim = self.h_sigma.shape[0]
        for name, h in (("h_sigma", self.h_sigma), ("h_r", self.h_r), ("h_pi", self.h_pi)):
            if h.shape != (dim, dim):
                raise ValueError(f"{name} must be {dim}×{dim}")
        if np.any(self.h_sigma[:2, :] != 0) or np.any(self.h_sigma[:, :2] != 0):
            raise ValueError("h_sigma must live in the asset block")
        mask = np.ones((dim, dim), dtype=bool)
        mask[0, 2:] = mask[2:, 0] = False
        if np.any(self.h_r[mask] != 0):
            raise ValueError("h_r must live in row/column 1 tail")
        mask = np.ones((dim, dim), dtype=bool)
        mask[1, 2:] = mask[2:, 1] = False
        if np.any(self.h_pi[mask] != 0):
            raise ValueError("h_pi must live in row/column 2 tail")
        return self

    @property
    def dim(self) -> int:
        return int(self.h_sigma.shape[0])

    @property
    def n_assets(self) -> int:
        return self.dim - 2

    @property
    def expected_return(self) -> np.ndarray:
        """R/trM"""
        return self.h_r[0, 2:]

    @property
    def budget_vector(self) -> np.ndarray:
        """Π/trM"""
        return self.h_pi[1, 2:]

    @property
    def tau_scale(self) -> float:
        """ρ = Σ/trΣ 를 해밀토니안으로 쓸 때의 시간 배율 trΣ/trM"""
        return self.trace_sigma / self.trace_m

    def total(self) -> np.ndarray:
        return self.h_sigma + self.h_r + self.h_pi

    def sigma_density(self) -> DensityMatrix:
        """지수화에 쓰는 ρ = Σ/trΣ (N×N)"""
        block = self.h_sigma[2:, 2:] * (self.trace_m / self.trace_sigma)
        return DensityMatrix(matrix=(block + block.T) / 2)


class SimulatedEvolution(FrozenModel):
    """e^{−iM̂t} 근사 결과"""

    method: EvolutionMethod
    t_total: float
    n_steps: int = Field(1, ge=1)
    error_bound: float = Field(0.0, ge=0)
    unitary: ComplexArray | None = Field(None, description="exact/trotter 의 밀집 유니터리")

    @model_validator(mode="after")
    def check_unitary(self):
        if self.method != "density_exp":
            u = self.unitary
            if u is None:
                raise ValueError(f"{self.method} evolution needs a unitary")
            deviation = np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0]), ord=2)
            if deviation > 1e-8:
                raise ValueError(f"evolution is not unitary: {deviation:.3e}")
        return self
