"""
공통 검증 규칙 정의
서비스 모듈들이 일관되게 사용하는 수치 입력 검증 함수들
"""

import numpy as np

from app.errors import DimensionMismatchError, InvalidInputError, NonUnitaryError

SYMMETRY_TOL = 1e-10
UNITARY_TOL = 1e-10


class CommonValidators:
    """공통 validation 규칙들"""

    @staticmethod
    def validate_vector(value, name: str, length: int | None = None) -> np.ndarray:
        """1차원 유한 실수 벡터 검증"""
        arr = np.asarray(value, dtype=float)
        if arr.ndim != 1:
            raise DimensionMismatchError(f"{name} must be a vector, got shape {arr.shape}")
        if length is not None and arr.shape[0] != length:
            raise DimensionMismatchError(
                f"{name} has length {arr.shape[0]}, expected {length}", name=name
            )
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError(f"{name} contains non-finite entries", name=name)
        return arr

    @staticmethod
    def validate_square(value, name: str, size: int | None = None) -> np.ndarray:
        """정방 행렬 검증"""
        arr = np.asarray(value)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DimensionMismatchError(f"{name} must be square, got shape {arr.shape}")
        if size is not None and arr.shape[0] != size:
            raise DimensionMismatchError(
                f"{name} is {arr.shape[0]}x{arr.shape[0]}, expected {size}x{size}", name=name
            )
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError(f"{name} contains non-finite entries", name=name)
        return arr

    @staticmethod
    def validate_symmetric(value, name: str, tol: float = SYMMETRY_TOL) -> np.ndarray:
        """실대칭 행렬 검증"""
        arr = CommonValidators.validate_square(np.asarray(value, dtype=float), name)
        asymmetry = float(np.max(np.abs(arr - arr.T))) if arr.size else 0.0
        if asymmetry > tol:
            raise InvalidInputError(
                f"asymmetric {name}: max |A - A^T| = {asymmetry:.3e}", name=name
            )
        return arr

    @staticmethod
    def validate_unitary(value, tol: float = UNITARY_TOL) -> np.ndarray:
        """‖U†U − I‖ 검사"""
        u = CommonValidators.validate_square(np.asarray(value, dtype=complex), "unitary")
        deviation = np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0]), ord=2)
        if deviation > tol:
            raise NonUnitaryError(f"matrix is not unitary: ||U^H U - I|| = {deviation:.3e}")
        return u

    @staticmethod
    def validate_positive(value: float, name: str, allow_zero: bool = False) -> float:
        """양수 검증"""
        if not np.isfinite(value) or value < 0 or (value == 0 and not allow_zero):
            bound = "non-negative" if allow_zero else "positive"
            raise InvalidInputError(f"{name} must be {bound}, got {value}", name=name)
        return float(value)

    @staticmethod
    def validate_seed(seed: int) -> int:
        """64비트 시드 검증"""
        if seed < 0 or seed >= 2**64:
            raise InvalidInputError(f"seed must fit in 64 bits, got {seed}")
        return int(seed)
