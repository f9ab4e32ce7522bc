"""
qfolio 도메인 예외 정의

모든 예외는 기계 판독용 ``code`` 와 진단 컨텍스트를 가진다.
pydantic 검증기를 그대로 통과하도록 ValueError 를 상속하지 않는다.
"""

from typing import Any


class QfolioError(Exception):
    """qfolio 기본 예외"""

    code = "qfolio_error"

    def __init__(self, message: str, code: str | None = None, **context: Any):
        super().__init__(message)
        self.message = message
        if code is not None:
            self.code = code
        self.context = context

    def to_dict(self) -> dict[str, Any]:
        return {"code": self.code, "message": self.message, "context": self.context}


class MarketDataError(QfolioError):
    """가격 데이터 수집/검증 오류"""

    code = "invalid_market_data"


class InvalidInputError(QfolioError):
    """연산 입력 값 오류"""

    code = "invalid_input"


class DimensionMismatchError(InvalidInputError):
    """차원 불일치"""

    code = "dimension_mismatch"


class InfeasibleTargetError(QfolioError):
    """제약 조건을 만족하는 포트폴리오가 없음"""

    code = "infeasible_target"


class QubitCapError(QfolioError):
    """시뮬레이터 큐비트 상한 초과"""

    code = "qubit_cap_exceeded"


class RegisterError(QfolioError):
    """레지스터 이름/상태 오류"""

    code = "register_error"


class NonUnitaryError(QfolioError):
    code = "non_unitary"


class RotationOverflowError(QfolioError):
    """조건부 회전 진폭이 1을 넘음"""

    code = "rotation_overflow"


class NullBranchError(QfolioError):
    """확률 0 분기로의 사후 선택"""

    code = "null_branch"


class ConfigurationError(QfolioError):
    code = "invalid_config"
