"""
상태 준비 관련 Pydantic 스키마 정의
qRAM 오라클, 희소성 오라클, KP 부분노름 트리, 준비 결과
"""

import numpy as np
from pydantic import Field, model_validator

from .common import FloatArray, FrozenModel, IntArray
from .quantum import QuantumState

TREE_TOL = 1e-12


class QramOracle(FrozenModel):
    """
    |i⟩|x⟩ → |i⟩|x ⊕ code(d_i)⟩ 쿼리 모델

    데이터 레지스터는 고정소수점 단어 자체 대신 서로 다른 단어들의 코드북 인덱스를
    담는다. 코드 0 은 값 0.0 에 예약되어 있다.
    """

    table: FloatArray = Field(..., description="원래 값 (인덱스 레지스터 순서의 다차원 배열)")
    m_bits: int = Field(..., ge=1, description="고정소수점 단어 길이")
    m_frac: int | None = Field(None, ge=0, description="소수부 비트 수 (없으면 정확한 값)")
    scale: float = Field(1.0, gt=0, description="고정소수점 단위")
    codebook: FloatArray = Field(..., description="코드 → 양자화된 값")
    codes: IntArray = Field(..., description="table 과 같은 모양의 코드")
    data_width: int = Field(..., ge=1, description="시뮬레이션 데이터 레지스터 큐비트 수")

    @model_validator(mode="after")
    def check_oracle(self):
        if self.codes.shape != self.table.shape:
            raise ValueError("codes must have the shape of the table")
        if self.codebook.ndim != 1 or self.codebook.size == 0 or self.codebook[0] != 0.0:
            raise ValueError("codebook must start with the reserved zero code")
        if self.codes.size and (self.codes.min() < 0 or self.codes.max() >= self.codebook.size):
            raise ValueError("code outside the codebook")
        if self.codebook.size > 2**self.data_width:
            raise ValueError("data register too narrow for the codebook")
        return self

    @property
    def values(self) -> np.ndarray:
        """쿼리가 실제로 돌려주는 (양자화된) 값"""
        return self.codebook[self.codes]

    @property
    def value_map(self) -> dict[int, float]:
        return {i: float(v) for i, v in enumerate(self.codebook)}

    def padded_codes(self, shape: tuple[int, ...]) -> np.ndarray:
        """레지스터 차원으로 0 패딩된 코드 테이블 (패딩 인덱스는 코드 0)"""
        out = np.zeros(shape, dtype=np.int64)
        out[tuple(slice(0, n) for n in self.codes.shape)] = self.codes
        return out


class SparsityOracle(FrozenModel):
    """|i, l⟩ → |i, g(i, l)⟩, l ≥ s_i 에 대해서는 남은 열로 순열 완성"""

    permutation: IntArray = Field(..., description="행마다 열 인덱스 순열")
    sparsity: IntArray = Field(..., description="행별 비영 원소 수 s_i")

    @model_validator(mode="after")
    def check_permutation(self):
        n = self.permutation.shape[0]
        if self.permutation.shape != (n, n) or self.sparsity.shape != (n,):
            raise ValueError("permutation must be n×n and sparsity length n")
        for row in self.permutation:
            if sorted(row.tolist()) != list(range(n)):
                raise ValueError("each row must be a permutation of the column indices")
        return self

    @property
    def n(self) -> int:
        return int(self.permutation.shape[0])

    def column_index(self, i: int, l: int) -> int:
        """i 행의 l 번째 비영 원소 열 인덱스"""
        if not 0 <= l < int(self.sparsity[i]):
            raise IndexError(f"row {i} has only {int(self.sparsity[i])} nonzero elements")
        return int(self.permutation[i, l])


class KPTree(FrozenModel):
    """
    부분노름 이진 트리

    levels[0] 은 루트(‖v‖²), levels[depth] 는 2^depth 로 패딩된 잎(v_i²)이다.
    """

    depth: int = Field(..., ge=0)
    levels: list[FloatArray]
    leaf_signs: FloatArray = Field(..., description="길이 N 의 ±1 벡터 (0 원소는 +1)")
    n: int = Field(..., ge=1, description="원래 벡터 길이")
    m_frac: int | None = None
    scale: float = Field(1.0, gt=0, description="m_frac 양자화 단위 (빌드 시 최대 잎)")

    @model_validator(mode="after")
    def check_tree(self):
        if len(self.levels) != self.depth + 1:
            raise ValueError("tree must have depth + 1 levels")
        for level, nodes in enumerate(self.levels):
            if nodes.shape != (2**level,):
                raise ValueError(f"level {level} must hold {2**level} nodes")
            if np.any(nodes < 0):
                raise ValueError("subnorms must be non-negative")
        for level in range(self.depth):
            parent = self.levels[level]
            children = self.levels[level + 1]
            sums = children[0::2] + children[1::2]
            if np.any(np.abs(parent - sums) > TREE_TOL * max(1.0, float(self.root))):
                raise ValueError(f"parent at level {level} differs from the sum of its children")
        if self.n > 2**self.depth or self.leaf_signs.shape != (self.n,):
            raise ValueError("leaf_signs must have length n ≤ 2^depth")
        if not np.all(np.isin(self.leaf_signs, (-1.0, 1.0))):
            raise ValueError("leaf signs must be ±1")
        return self

    @property
    def root(self) -> float:
        return float(self.levels[0][0])

    @property
    def leaves(self) -> np.ndarray:
        return self.levels[self.depth]

    def vector(self) -> np.ndarray:
        """저장된 값으로 복원한 원래 벡터"""
        return self.leaf_signs * np.sqrt(self.leaves[: self.n])

    def to_json_dict(self) -> dict:
        return {
            "depth": self.depth,
            "levels": [level.tolist() for level in self.levels],
            "leaf_signs": self.leaf_signs.tolist(),
            "n": self.n,
        }


class PrepOutcome(FrozenModel):
    """사후 선택 기반 상태 준비 결과"""

    state: QuantumState
    success_probability: float = Field(..., ge=0.0, le=1.0 + 1e-12)
    delta_used: float = Field(..., description="회전 스케일 δ (사용하지 않으면 0)")
    n_times: int = Field(..., ge=1, description="논리적 시간 길이 T")
    n_assets: int = Field(..., ge=1, description="논리적 자산 수 N")


class TraceSigmaEstimate(FrozenModel):
    """반복 준비 시행에서 얻은 trΣ 추정"""

    trace_sigma: float
    std_error: float = Field(..., ge=0)
    p_hat: float = Field(..., ge=0, le=1)
    shots: int = Field(..., ge=1)
