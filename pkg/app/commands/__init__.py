"""
qfolio 명령 모음

각 명령은 RunConfig 를 받아 산출물을 기록하고 종료 코드를 돌려준다.
"""

from .frontier import cmd_frontier
from .prep_demo import cmd_prep_demo
from .solve import cmd_solve
from .verify import cmd_verify

COMMANDS = {
    "frontier": cmd_frontier,
    "solve": cmd_solve,
    "verify": cmd_verify,
    "prep-demo": cmd_prep_demo,
}

__all__ = ["COMMANDS", "cmd_frontier", "cmd_prep_demo", "cmd_solve", "cmd_verify"]
