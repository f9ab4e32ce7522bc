"""
양자 상태 관련 Pydantic 스키마 정의
레지스터 배치, 상태 벡터, 밀도 행렬
"""

import math

import numpy as np
from pydantic import Field, field_validator, model_validator

from app.config import settings
from app.errors import QubitCapError, RegisterError

from .common import ComplexArray, FrozenModel

NORM_TOL = 1e-10
DENSITY_TOL = 1e-10


class RegisterLayout(FrozenModel):
    """이름 있는 레지스터들의 순서 있는 배치 (앞쪽 레지스터가 최상위 자리)"""

    registers: tuple[tuple[str, int], ...] = Field(..., description="(이름, 큐비트 수) 목록")
    qubit_cap: int = Field(default_factory=lambda: settings.qubit_cap, description="큐비트 상한")

    @field_validator("registers", mode="before")
    @classmethod
    def coerce_pairs(cls, v):
        if isinstance(v, dict):
            return tuple(v.items())
        return tuple(tuple(pair) for pair in v)

    @model_validator(mode="after")
    def check_layout(self):
        names = [name for name, _ in self.registers]
        if len(set(names)) != len(names):
            raise RegisterError(f"duplicate register names in {names}")
        if any(n < 0 for _, n in self.registers):
            raise RegisterError("register sizes must be non-negative")
        if self.total_qubits > self.qubit_cap:
            raise QubitCapError(
                f"layout needs {self.total_qubits} qubits, cap is {self.qubit_cap}",
                total_qubits=self.total_qubits,
                cap=self.qubit_cap,
            )
        return self

    @classmethod
    def of(cls, *pairs: tuple[str, int], qubit_cap: int | None = None) -> "RegisterLayout":
        if qubit_cap is None:
            return cls(registers=pairs)
        return cls(registers=pairs, qubit_cap=qubit_cap)

    @property
    def total_qubits(self) -> int:
        return sum(n for _, n in self.registers)

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.registers]

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(2**n for _, n in self.registers)

    @property
    def dim(self) -> int:
        return 2**self.total_qubits

    def index(self, name: str) -> int:
        for i, (reg, _) in enumerate(self.registers):
            if reg == name:
                return i
        raise RegisterError(f"unknown register: {name}", register=name)

    def size(self, name: str) -> int:
        return self.registers[self.index(name)][1]

    def register_dim(self, name: str) -> int:
        return 2 ** self.size(name)

    def without(self, names: list[str]) -> "RegisterLayout":
        for name in names:
            self.index(name)
        kept = tuple(pair for pair in self.registers if pair[0] not in names)
        return RegisterLayout(registers=kept, qubit_cap=self.qubit_cap)

    def concat(self, other: "RegisterLayout") -> "RegisterLayout":
        return RegisterLayout(
            registers=self.registers + other.registers,
            qubit_cap=max(self.qubit_cap, other.qubit_cap),
        )


class QuantumState(FrozenModel):
    """레지스터 배치 위의 정규화된 복소 진폭 벡터"""

    amplitudes: ComplexArray
    layout: RegisterLayout

    @model_validator(mode="after")
    def check_state(self):
        if self.amplitudes.ndim != 1 or self.amplitudes.shape[0] != self.layout.dim:
            raise ValueError(
                f"amplitude vector of shape {self.amplitudes.shape} does not match "
                f"{self.layout.total_qubits}-qubit layout"
            )
        norm = float(np.linalg.norm(self.amplitudes))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {norm!r} differs from 1")
        return self

    def tensor(self) -> np.ndarray:
        """레지스터별 축을 가진 텐서 형태"""
        return self.amplitudes.reshape(self.layout.dims)

    def marginal(self, register: str) -> np.ndarray:
        """레지스터 하나의 측정 확률 분포"""
        axis = self.layout.index(register)
        probs = np.abs(self.tensor()) ** 2
        other = tuple(i for i in range(len(self.layout.dims)) if i != axis)
        return probs.sum(axis=other) if other else probs

    def vector(self, length: int | None = None) -> np.ndarray:
        """단일 레지스터 상태의 진폭 (length 로 잘라냄)"""
        return self.amplitudes[: length or len(self.amplitudes)]


class DensityMatrix(FrozenModel):
    """에르미트, 단위 대각합, 양의 준정부호 행렬"""

    matrix: ComplexArray
    layout: RegisterLayout | None = Field(None, description="레지스터 배치 (없으면 임의 차원)")

    @model_validator(mode="after")
    def check_density(self):
        m = self.matrix
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"density matrix must be square, got {m.shape}")
        if self.layout is not None and m.shape[0] != self.layout.dim:
            raise ValueError("density matrix does not match its layout")
        if np.max(np.abs(m - m.conj().T)) > DENSITY_TOL:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > DENSITY_TOL:
            raise ValueError(f"density matrix trace {np.trace(m).real!r} differs from 1")
        if np.min(np.linalg.eigvalsh((m + m.conj().T) / 2)) < -DENSITY_TOL:
            raise ValueError("density matrix has a negative eigenvalue")
        return self

    @classmethod
    def from_state(cls, state: QuantumState) -> "DensityMatrix":
        psi = state.amplitudes
        return cls(matrix=np.outer(psi, psi.conj()), layout=state.layout)

    @classmethod
    def from_vector(cls, vec) -> "DensityMatrix":
        psi = np.asarray(vec, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(matrix=np.outer(psi, psi.conj()))

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def n_qubits(self) -> int:
        return int(math.log2(self.dim)) if self.dim & (self.dim - 1) == 0 else -1

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh((self.matrix + self.matrix.conj().T) / 2)
