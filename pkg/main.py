import sys
from typing import Sequence

from apps.cli.parser import build_parser
from core.exceptions import exit_code_for
from core.logging_setup import logger


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logger.info('command_started', command=args.command)
    try:
        code = args.handler(args)
    except Exception as exc:
        return exit_code_for(exc)
    logger.info('command_finished', command=args.command)
    return code


if __name__ == '__main__':
    sys.exit(main())
