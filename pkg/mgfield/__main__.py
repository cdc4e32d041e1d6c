"""Entry point for the mgfield command."""

import logging
import sys

from . import config
from .cli.app import build_parser, dispatch

logger = logging.getLogger(__name__)


def _log_level(verbose: int) -> int:
    if verbose >= 2:
        return logging.DEBUG
    if verbose == 1:
        return logging.INFO
    return getattr(logging, config.LOG_LEVEL, logging.WARNING)


def main(argv: list[str] | None = None) -> int:
    """Main entry point for the mgfield command.

    Returns:
        Process exit code (0 pass, 1 check failed, 2 input/usage error, 3 numerical error)
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2

    # Config before logging so the configured level applies; -v overrides it
    config.load_config(args.config)

    logging.basicConfig(
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )
    logging.getLogger().setLevel(_log_level(args.verbose))

    logger.debug(f"Running {args.command} {getattr(args, 'action', '') or ''}".rstrip())
    return dispatch(args)


if __name__ == "__main__":
    sys.exit(main())
