"""Command-line surface."""

import argparse

from app.cli.analyze import register as register_analyze
from app.cli.replay import register as register_replay
from app.cli.run import register as register_run
from app.core.config import settings


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=settings.app_name,
        description="Co-optimise walker morphology and control under Static, RRI or POET curricula.",
    )
    parser.add_argument("--log-level", default=None, help="Override MORPHOPOET_LOG_LEVEL")
    parser.add_argument("--log-json", action="store_true", help="Render logs as JSON")
    commands = parser.add_subparsers(dest="command", required=True)
    register_run(commands)
    register_analyze(commands)
    register_replay(commands)
    return parser
