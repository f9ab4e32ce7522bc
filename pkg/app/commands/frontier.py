"""
frontier 명령: 고전/양자 효율적 프런티어
"""

import logging

from app.middleware.error_handling import EXIT_OK, EXIT_PARTIAL
from app.middleware.json_encoder import write_artifact
from app.schemas.run import RunConfig
from app.services.pipeline import PortfolioPipelineService, write_frame

logger = logging.getLogger(__name__)


def cmd_frontier(cfg: RunConfig) -> int:
    """frontier.csv, frontier.json, diagnostics.json 기록 (누락된 점이 있으면 종료 코드 2)"""
    run = PortfolioPipelineService(cfg).run_frontier()
    out = cfg.out_path
    out.mkdir(parents=True, exist_ok=True)

    write_frame(run["frame"], out / "frontier.csv")
    write_artifact(out / "frontier.json", run["frontier"], cfg.echo())
    write_artifact(out / "diagnostics.json", run["diagnostics"], cfg.echo())
    logger.info(f"프런티어 산출물 기록: {out} ({len(run['frame'])}개 점)")

    if run["omitted"]:
        logger.warning(f"프런티어 점 {run['omitted']}개 누락")
        return EXIT_PARTIAL
    return EXIT_OK
