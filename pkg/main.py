"""
qfolio 명령행 진입점

    python main.py frontier --synthetic --n-assets 4 --mu-steps 5 --out out/
    python main.py solve --input prices.csv --mu 0.05
    python main.py verify --phase-bits 10
    python main.py prep-demo --synthetic --n-times 8
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any

from dotenv import dotenv_values

from app.commands import COMMANDS
from app.config import settings
from app.errors import ConfigurationError
from app.logging_config import setup_logging
from app.middleware.error_handling import CommandErrorHandler
from app.schemas.run import RunConfig

logger = logging.getLogger(__name__)

# 플래그/설정 파일 키 → RunConfig 필드
KEY_ALIASES = {
    "input": "input_path",
    "out": "out_dir",
    "phase_bits": "n_phase_bits",
}


class QfolioArgumentParser(argparse.ArgumentParser):
    """파싱 오류를 종료 대신 ConfigurationError 로 전달"""

    def error(self, message: str):
        raise ConfigurationError(f"{self.prog}: {message}")


def _common_options() -> argparse.ArgumentParser:
    common = QfolioArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)

    source = common.add_argument_group("입력")
    source.add_argument("--config", help="key=value 설정 파일")
    source.add_argument("--input", help="가격 CSV (time,<자산>... 헤더)")
    source.add_argument("--synthetic", action="store_true", help="합성 팩터 모델 데이터 사용")
    source.add_argument("--n-assets", type=int)
    source.add_argument("--n-times", type=int, help="합성 가격 시점 수 T′")
    source.add_argument("--n-factors", type=int)
    source.add_argument("--dt-period", type=int)

    problem = common.add_argument_group("포트폴리오")
    problem.add_argument("--mu-min", type=float)
    problem.add_argument("--mu-max", type=float)
    problem.add_argument("--mu-steps", type=int)
    problem.add_argument("--mu", type=float, help="solve 의 목표 수익률")
    problem.add_argument("--xi", type=float, help="총 자산")
    problem.add_argument("--budget-mode", choices=["prices", "unit"])

    hhl = common.add_argument_group("HHL")
    hhl.add_argument("--kappa", type=float)
    hhl.add_argument("--c-constant", type=float)
    hhl.add_argument("--phase-bits", type=int)
    hhl.add_argument("--backend", choices=["exact", "trotter", "density_exp"])
    hhl.add_argument("--t0", type=float)
    hhl.add_argument("--trotter-steps", type=int)
    hhl.add_argument("--density-copies", type=int)

    run = common.add_argument_group("판독/실행")
    run.add_argument("--shots", type=int, help="0 이면 정확 판독")
    run.add_argument("--samples", type=int, help="롱/숏 샘플 수 M")
    run.add_argument("--seed", type=int)
    run.add_argument("--out", help="산출물 디렉토리")
    run.add_argument("--max-workers", type=int)
    run.add_argument("--log-level")
    return common


def build_parser() -> QfolioArgumentParser:
    parser = QfolioArgumentParser(prog="qfolio", description=f"{settings.app_name} v{settings.app_version}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=QfolioArgumentParser)
    common = _common_options()
    sub.add_parser("frontier", parents=[common], help="고전/양자 효율적 프런티어")
    sub.add_parser("solve", parents=[common], help="단일 μ 풀이와 포트폴리오 샘플링")
    sub.add_parser("verify", parents=[common], help="수용 기준 검사")
    sub.add_parser("prep-demo", parents=[common], help="|χ⟩, |R⟩, |χ̃⟩, ρ 덤프")
    return parser


def _normalize_key(key: str) -> str:
    key = key.strip().lower().replace("-", "_")
    return KEY_ALIASES.get(key, key)


def load_config_file(path: str) -> dict[str, Any]:
    """dotenv 형식 설정 파일 (빈 값은 무시, 알 수 없는 키는 오류)"""
    if not Path(path).is_file():
        raise ConfigurationError(f"config file not found: {path}", path=path)
    values: dict[str, Any] = {}
    for key, value in dotenv_values(path).items():
        name = _normalize_key(key)
        if name not in RunConfig.model_fields:
            raise ConfigurationError(f"unknown config key: {key}", path=path, key=key)
        if value is None or value.strip() == "":
            continue
        values[name] = value.strip()
    return values


def build_config(args: argparse.Namespace) -> RunConfig:
    """기본값 ← 설정 파일 ← 플래그"""
    flags = {
        _normalize_key(k): v for k, v in vars(args).items() if k not in ("command", "config")
    }
    values = load_config_file(args.config) if getattr(args, "config", None) else {}
    values.update(flags)
    return RunConfig(**values)


def main(argv: list[str] | None = None) -> int:
    log_level = "DEBUG" if settings.debug else settings.log_level
    setup_logging(log_dir=settings.log_dir, log_level=log_level, log_to_file=settings.log_to_file)
    handler = CommandErrorHandler("qfolio")

    def run() -> int:
        args = build_parser().parse_args(argv)
        handler.bind(command=args.command)
        cfg = build_config(args)
        handler.bind(seed=cfg.seed)
        if cfg.log_level:
            setup_logging(log_dir=settings.log_dir, log_level=cfg.log_level, log_to_file=settings.log_to_file)
        logger.info(f"{settings.app_name} v{settings.app_version}: {args.command} (seed={cfg.seed})")
        return COMMANDS[args.command](cfg)

    return handler.run(run)


if __name__ == "__main__":
    sys.exit(main())
