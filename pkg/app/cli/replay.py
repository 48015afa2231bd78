"""``replay`` command."""

import argparse
import json
from pathlib import Path

from app.services.config_loader import load_config
from app.services.replay import parse_env_vector, replay


def replay_command(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    result = replay(
        Path(args.genotype),
        parse_env_vector(args.env),
        args.seed,
        Path(args.out),
        walker_config=config.walker,
        physics_config=config.physics,
    )
    print(
        json.dumps(
            {
                **result.summary.model_dump(mode="json"),
                "trajectory": str(result.trajectory_path),
                "trace_sha256": result.trace_digest,
            },
            indent=2,
        )
    )
    return 0


def register(commands: argparse._SubParsersAction) -> None:
    parser = commands.add_parser("replay", help="Replay one episode of a saved genotype")
    parser.add_argument("--genotype", required=True, help="Path to a .bin genotype")
    parser.add_argument("--env", required=True, help="Eight comma-separated environment values")
    parser.add_argument("--seed", type=int, required=True)
    parser.add_argument("--out", default="replay")
    parser.add_argument("--config", type=Path, default=None, help="TOML config for walker/physics constants")
    parser.set_defaults(handler=replay_command)
