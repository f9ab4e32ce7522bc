"""
HHL 선형 시스템 풀이 관련 Pydantic 스키마 정의
"""

from typing import Literal

import numpy as np
from pydantic import ConfigDict, Field, model_validator

from .common import ComplexArray, FrozenModel
from .quantum import QuantumState

C_TOL = 1e-12


class HHLConfig(FrozenModel):
    """HHL 실행 설정"""

    kappa: float = Field(..., gt=0, description="조건수 절단: |λ| ≥ 1/κ 만 유지")
    c_constant: float | None = Field(None, gt=0, description="회전 스케일 C (없으면 1/(2κ))")
    n_phase_bits: int = Field(10, ge=3, le=12, description="위상 레지스터 비트 수")
    evolution_backend: Literal["exact", "trotter", "density_exp"] = "exact"
    t0: float | None = Field(None, gt=0, description="기본 진화 시간 (없으면 π/(2·Gershgorin))")
    seed: int = Field(1234, ge=0, lt=2**64)
    trotter_steps: int = Field(8, ge=1, description="t0 당 Trotter 스텝 수")
    density_copies: int = Field(32, ge=1, description="밀도 지수화 ρ 사본 수")

    @model_validator(mode="after")
    def check_c_constant(self):
        if self.c_constant is not None and self.c_constant > 1.0 / self.kappa + C_TOL:
            raise ValueError(f"c_constant {self.c_constant} exceeds 1/kappa = {1.0 / self.kappa}")
        return self

    @property
    def c_value(self) -> float:
        return self.c_constant if self.c_constant is not None else 1.0 / (2.0 * self.kappa)


class SpectralComponent(FrozenModel):
    """M̂ 고유쌍 진단: λ_j, β_j = ⟨u_j|b̂⟩, 유지 여부"""

    lambda_: float = Field(..., alias="lambda")
    beta: float
    retained: bool

    model_config = ConfigDict(populate_by_name=True)


class HHLResult(FrozenModel):
    """HHL 풀이 결과와 진단"""

    solution_state: QuantumState = Field(..., description="시스템 레지스터 위의 |η, θ, w⟩")
    dim: int = Field(..., ge=1, description="논리적 시스템 차원 (KKT 이면 N+2)")
    p_w: float = Field(..., gt=0.0, le=1.0 + 1e-12, description="보조 큐비트 |1⟩ 사후 선택 확률")
    rescale: float = Field(..., ge=0)
    spectrum: list[SpectralComponent]
    epsilon_kappa: float = Field(..., ge=0)
    fidelity_vs_oracle: float = Field(..., ge=0, le=1.0 + 1e-9)
    phase_success_probability: float = Field(..., ge=0, le=1.0 + 1e-12)
    kappa: float
    c_constant: float
    t0: float
    n_phase_bits: int
    backend: str
    evolution_error: float = Field(0.0, ge=0)
    effective_rank: int | None = None
    rhs_norm: float = Field(..., gt=0)
    trace_sigma: float = Field(1.0, gt=0)
    solution_density: ComplexArray | None = Field(None, description="density_exp 백엔드의 시스템 밀도 행렬")
    warnings: list[str] = Field(default_factory=list)

    def solution_vector(self) -> np.ndarray:
        """논리 차원으로 잘라낸 해 진폭"""
        return self.solution_state.amplitudes[: self.dim]

    def to_json_dict(self) -> dict:
        """HHLResult 내보내기: fidelity, p_w, rescale, spectrum, epsilon_kappa, 진단"""
        return {
            "fidelity": self.fidelity_vs_oracle,
            "p_w": self.p_w,
            "rescale": self.rescale,
            "spectrum": [c.model_dump(mode="json", by_alias=True) for c in self.spectrum],
            "epsilon_kappa": self.epsilon_kappa,
            "phase_success_probability": self.phase_success_probability,
            "evolution": {
                "method": self.backend,
                "t0": self.t0,
                "n_phase_bits": self.n_phase_bits,
                "error_bound": self.evolution_error,
                "effective_rank": self.effective_rank,
            },
            "kappa": self.kappa,
            "c_constant": self.c_constant,
            "warnings": list(self.warnings),
        }
