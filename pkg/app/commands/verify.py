"""
verify 명령: 데스크 규모 수용 기준 검사
"""

import logging

from app.middleware.error_handling import EXIT_OK, EXIT_PARTIAL
from app.middleware.json_encoder import write_artifact
from app.schemas.run import RunConfig
from app.services.verification import run_verification

logger = logging.getLogger(__name__)


def cmd_verify(cfg: RunConfig) -> int:
    """verify.json 기록, 모든 기준 통과 시에만 0"""
    report = run_verification(cfg)
    path = write_artifact(
        cfg.out_path / "verify.json",
        {"all_passed": report.all_passed, "criteria": report.criteria},
        cfg.echo(),
    )
    logger.info(f"검증 보고서 기록: {path}")
    if not report.all_passed:
        logger.warning(f"실패한 기준: {', '.join(report.failed)}")
        return EXIT_PARTIAL
    return EXIT_OK
