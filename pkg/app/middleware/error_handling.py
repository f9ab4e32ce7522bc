"""
명령 실행용 통합 에러 처리
모든 명령은 CommandErrorHandler 안에서 실행되고, 실패는 stderr 의 JSON 에러와 종료 코드 1 로 바뀐다.
"""

import json
import logging
import sys
import traceback
from collections.abc import Callable
from typing import TextIO

from pydantic import ValidationError

from app.errors import QfolioError
from app.schemas.common import ErrorDetail, ErrorResponse

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_PARTIAL = 2


class CommandErrorHandler:
    """명령 하나의 에러 경계 (상세 로깅 포함)"""

    def __init__(self, command: str, seed: int | None = None, stream: TextIO | None = None):
        self.command = command
        self.seed = seed
        self.stream = stream

    @property
    def run_id(self) -> str:
        # 시드에서 파생 (재실행 시 동일)
        return f"{self.command}-{self.seed if self.seed is not None else 'unparsed'}"

    def bind(self, command: str | None = None, seed: int | None = None) -> None:
        """인자 파싱 후 명령/시드 확정"""
        if command is not None:
            self.command = command
        if seed is not None:
            self.seed = seed

    def run(self, func: Callable[[], int]) -> int:
        logger.info(f"Command Request [{self.run_id}] {self.command}")
        try:
            code = func()
            logger.info(f"Command Response [{self.run_id}] exit={code}")
            return code

        except QfolioError as exc:
            return self._handle_domain_error(exc)

        except ValidationError as exc:
            return self._handle_validation_error(exc)

        except Exception as exc:
            return self._handle_unexpected_error(exc)

    def _handle_domain_error(self, exc: QfolioError) -> int:
        logger.error(f"Command Error [{self.run_id}] {exc.code}: {exc.message}")
        return self._emit(
            ErrorResponse(
                type=type(exc).__name__,
                code=exc.code,
                message=exc.message,
                run_id=self.run_id,
                details=exc.context or None,
            )
        )

    def _handle_validation_error(self, exc: ValidationError) -> int:
        """설정 검증 실패 (필드별 상세 정보)"""
        errors = [
            ErrorDetail(
                code=error["type"],
                message=error["msg"],
                field=".".join(str(loc) for loc in error["loc"]) or None,
            )
            for error in exc.errors()
        ]
        logger.error(
            f"Command Validation Error [{self.run_id}]: {len(errors)} validation errors - "
            f"{[e.model_dump() for e in errors]}"
        )
        return self._emit(
            ErrorResponse(
                type="validation_error",
                code="invalid_config",
                message="실행 설정 검증에 실패했습니다.",
                run_id=self.run_id,
                details=errors,
            )
        )

    def _handle_unexpected_error(self, exc: Exception) -> int:
        """예상치 못한 오류 (전체 스택 트레이스 로깅)"""
        logger.critical(
            f"Command Unexpected Error [{self.run_id}]: {type(exc).__name__}: {exc}\n"
            f"{traceback.format_exc()}"
        )
        return self._emit(
            ErrorResponse(
                type="internal_error",
                code="internal_error",
                message=str(exc) or type(exc).__name__,
                run_id=self.run_id,
                details={"error_type": type(exc).__name__},
            )
        )

    def _emit(self, response: ErrorResponse) -> int:
        stream = self.stream or sys.stderr
        payload = {"error": response.model_dump(mode="json")}
        stream.write(json.dumps(payload, ensure_ascii=False, sort_keys=True, default=str) + "\n")
        stream.flush()
        return EXIT_FATAL
