"""
공통 스키마 정의
numpy 배열 필드용 Annotated 타입과 에러 응답 형식을 제공합니다.
"""

from typing import Annotated, Any

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, PlainSerializer


def _as_float_array(value: Any) -> np.ndarray:
    return np.array(value, dtype=float)


def _as_int_array(value: Any) -> np.ndarray:
    return np.array(value, dtype=np.int64)


def _as_complex_array(value: Any) -> np.ndarray:
    # JSON 덤프 형식 {"real": [...], "imag": [...]} 도 허용
    if isinstance(value, dict) and {"real", "imag"} <= value.keys():
        return np.array(value["real"], dtype=float) + 1j * np.array(value["imag"], dtype=float)
    return np.array(value, dtype=complex)


def _float_list(value: np.ndarray) -> list:
    return np.asarray(value, dtype=float).tolist()


def _int_list(value: np.ndarray) -> list:
    return np.asarray(value, dtype=np.int64).tolist()


def _complex_dict(value: np.ndarray) -> dict[str, list]:
    arr = np.asarray(value, dtype=complex)
    return {"real": arr.real.tolist(), "imag": arr.imag.tolist()}


FloatArray = Annotated[
    np.ndarray,
    BeforeValidator(_as_float_array),
    PlainSerializer(_float_list, return_type=list, when_used="json"),
]
IntArray = Annotated[
    np.ndarray,
    BeforeValidator(_as_int_array),
    PlainSerializer(_int_list, return_type=list, when_used="json"),
]
ComplexArray = Annotated[
    np.ndarray,
    BeforeValidator(_as_complex_array),
    PlainSerializer(_complex_dict, return_type=dict, when_used="json"),
]


class FrozenModel(BaseModel):
    """생성 후 변경 불가한 도메인 모델 기본 클래스"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


class ErrorDetail(BaseModel):
    """에러 상세 정보"""

    code: str = Field(..., description="에러 코드")
    message: str = Field(..., description="에러 메시지")
    field: str | None = Field(None, description="에러 관련 필드명")


class ErrorResponse(BaseModel):
    """명령 실패 시 stderr 로 출력되는 에러 형식"""

    type: str = Field(..., description="에러 유형")
    code: str = Field(..., description="에러 코드")
    message: str = Field(..., description="에러 메시지")
    run_id: str = Field(..., description="실행 추적 ID")
    details: list[ErrorDetail] | dict[str, Any] | None = Field(None, description="상세 에러 정보")
