"""
선형대수 유틸리티 모듈
시뮬레이터와 서비스 모듈들이 공유하는 행렬 연산 헬퍼
"""

import math

import numpy as np
from scipy import linalg


class LinalgUtils:
    """밀집 행렬 연산을 위한 유틸리티 클래스"""

    @classmethod
    def next_pow2(cls, n: int) -> int:
        """n 이상인 가장 작은 2의 거듭제곱"""
        if n < 1:
            raise ValueError(f"size must be >= 1, got {n}")
        return 1 << (n - 1).bit_length()

    @classmethod
    def n_qubits_for(cls, n: int) -> int:
        """크기 n 을 담는 데 필요한 큐비트 수 (n=1 이면 0)"""
        return (n - 1).bit_length() if n > 1 else 0

    @classmethod
    def is_pow2(cls, n: int) -> bool:
        return n >= 1 and (n & (n - 1)) == 0

    @classmethod
    def pad_vector(cls, vec: np.ndarray, size: int) -> np.ndarray:
        out = np.zeros(size, dtype=np.result_type(vec, float))
        out[: len(vec)] = vec
        return out

    @classmethod
    def pad_matrix(cls, mat: np.ndarray, size: int) -> np.ndarray:
        out = np.zeros((size, size), dtype=np.result_type(mat, float))
        out[: mat.shape[0], : mat.shape[1]] = mat
        return out

    @classmethod
    def hermitian_expm(cls, h: np.ndarray, t: float) -> np.ndarray:
        """e^{-iHt} (고유분해 기반)"""
        evals, evecs = linalg.eigh(h)
        return (evecs * np.exp(-1j * evals * t)) @ evecs.conj().T

    @classmethod
    def operator_norm(cls, a: np.ndarray) -> float:
        return float(np.linalg.norm(a, ord=2))

    @classmethod
    def trace_distance(cls, a: np.ndarray, b: np.ndarray) -> float:
        """½‖A − B‖₁ (에르미트 차이의 고윳값 절댓값 합)"""
        diff = a - b
        diff = (diff + diff.conj().T) / 2
        return float(0.5 * np.sum(np.abs(linalg.eigvalsh(diff))))

    @classmethod
    def gershgorin_bound(cls, a: np.ndarray) -> float:
        """max_i Σ_j |a_ij| : 스펙트럼 반경 상한"""
        return float(np.max(np.sum(np.abs(a), axis=1)))

    @classmethod
    def numerical_rank(cls, a: np.ndarray, rel_tol: float = 1e-8) -> int:
        evals = np.abs(linalg.eigvalsh(a))
        if evals.size == 0 or evals.max() == 0:
            return 0
        return int(np.sum(evals > rel_tol * evals.max()))

    @classmethod
    def uniform_unitary(cls, dim: int, support: int) -> np.ndarray:
        """
        첫 열이 앞쪽 support 개 기저의 균등 중첩인 실직교 대합(involution) 행렬

        support 가 dim 과 같고 2의 거듭제곱이면 Hadamard 변환 H^{⊗k},
        그 외에는 Householder 반사를 사용한다.
        """
        if not 1 <= support <= dim:
            raise ValueError(f"support {support} outside [1, {dim}]")
        if support == dim and cls.is_pow2(dim):
            return linalg.hadamard(dim).astype(float) / math.sqrt(dim)
        target = np.zeros(dim)
        target[:support] = 1.0 / math.sqrt(support)
        v = -target
        v[0] += 1.0
        norm_sq = float(v @ v)
        if norm_sq < 1e-30:
            return np.eye(dim)
        return np.eye(dim) - 2.0 * np.outer(v, v) / norm_sq

    @classmethod
    def qft_matrix(cls, n_bits: int) -> np.ndarray:
        """F|x⟩ = Σ_y e^{2πixy/2^n}|y⟩/√2^n"""
        return np.conj(linalg.dft(2**n_bits, scale="sqrtn"))

    @classmethod
    def twos_complement(cls, value: int | np.ndarray, n_bits: int):
        """n 비트 2의 보수 해석: [−2^{n−1}, 2^{n−1})"""
        half = 1 << (n_bits - 1)
        return np.where(np.asarray(value) >= half, np.asarray(value) - (1 << n_bits), value)

    @classmethod
    def swap_operator(cls, d: int) -> np.ndarray:
        """d² 차원 SWAP: S|i⟩|j⟩ = |j⟩|i⟩"""
        s = np.zeros((d * d, d * d))
        idx = np.arange(d)
        s[np.add.outer(idx * d, idx).ravel(), np.add.outer(idx, idx * d).ravel()] = 1.0
        return s
