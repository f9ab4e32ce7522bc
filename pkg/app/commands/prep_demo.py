"""
prep-demo 명령: 패널 하나의 상태 준비 결과 덤프
"""

import logging

from app.middleware.error_handling import EXIT_OK
from app.middleware.json_encoder import write_artifact
from app.schemas.run import RunConfig
from app.services.pipeline import PortfolioPipelineService

logger = logging.getLogger(__name__)


def cmd_prep_demo(cfg: RunConfig) -> int:
    payload = PortfolioPipelineService(cfg).run_prep_demo()
    path = write_artifact(cfg.out_path / "prep_demo.json", payload, cfg.echo())
    logger.info(f"상태 준비 덤프 기록: {path}")
    return EXIT_OK
