"""MorphoPOET - command-line entry point."""

import sys
from collections.abc import Sequence

from app.cli import build_parser
from app.core.exceptions import EXIT_FAILURE, WorkbenchError
from app.core.logging import configure_logging, get_logger

logger = get_logger(__name__)


def main(argv: Sequence[str] | None = None) -> int:
    """Parse arguments, run the command, and map errors to exit codes."""
    args = build_parser().parse_args(argv)
    configure_logging(level=args.log_level, json_logs=True if args.log_json else None)
    try:
        return int(args.handler(args))
    except WorkbenchError as e:
        logger.error("command.failed", command=args.command, error=type(e).__name__, detail=e.detail)
        print(f"error: {e.detail}", file=sys.stderr)
        return e.exit_code
    except KeyboardInterrupt:
        logger.warning("command.interrupted", command=args.command)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
