"""
solve 명령: 단일 목표 수익률의 HHL 풀이와 포트폴리오 샘플링
"""

import logging

from app.middleware.error_handling import EXIT_OK, EXIT_PARTIAL
from app.middleware.json_encoder import write_artifact
from app.schemas.run import RunConfig
from app.services.pipeline import PortfolioPipelineService

logger = logging.getLogger(__name__)


def cmd_solve(cfg: RunConfig) -> int:
    """solution.json, portfolio.json, diagnostics.json 기록 (HHL 경고가 있으면 종료 코드 2)"""
    run = PortfolioPipelineService(cfg).run_solve()
    out = cfg.out_path
    write_artifact(out / "solution.json", run["solution"], cfg.echo())
    write_artifact(out / "portfolio.json", run["portfolio"], cfg.echo())
    write_artifact(out / "diagnostics.json", run["diagnostics"], cfg.echo())
    logger.info(f"단일 풀이 산출물 기록: {out}")

    # HHL 경고 (위상 앨리어싱 등) 는 부분 성공
    if run["warnings"]:
        for warning in run["warnings"]:
            logger.warning(f"HHL 경고: {warning}")
        return EXIT_PARTIAL
    return EXIT_OK
