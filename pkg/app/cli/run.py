"""``run`` and ``resume`` commands."""

import argparse
import json
from pathlib import Path

from app.core.config import settings
from app.schemas.experiment import Condition, Scale
from app.services.config_loader import load_config
from app.services.experiment_runner import RunSummary, resume, run_experiment


def _print_summary(summary: RunSummary) -> None:
    print(
        json.dumps(
            {
                "run_dir": str(summary.run_dir),
                "status": summary.status.value,
                "generation": summary.generation,
                "evaluations": summary.evaluations,
                "best_fitness": summary.best_fitness,
            },
            indent=2,
        )
    )


def run_command(args: argparse.Namespace) -> int:
    out = args.out or str(Path(settings.default_output_dir) / f"{args.condition}-{args.seed or 0}")
    config = load_config(
        args.config,
        scale=args.scale,
        overrides={
            "condition": args.condition,
            "master_seed": args.seed,
            "evaluation_budget": args.budget,
            "worker_count": args.workers,
            "output_dir": out,
            "checkpoint_every": args.checkpoint_every,
        },
        defaults={"worker_count": settings.default_workers},
    )
    _print_summary(run_experiment(config, stop_after=args.stop_after))
    return 0


def resume_command(args: argparse.Namespace) -> int:
    summary = resume(
        Path(args.checkpoint), budget=args.budget, stop_after=args.stop_after, workers=args.workers
    )
    _print_summary(summary)
    return 0


def register(commands: argparse._SubParsersAction) -> None:
    run = commands.add_parser("run", help="Start a run")
    run.add_argument("--condition", choices=[c.value for c in Condition], required=True)
    run.add_argument("--config", type=Path, default=None, help="TOML experiment config")
    run.add_argument("--scale", choices=[s.value for s in Scale], default=None)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--budget", type=int, default=None)
    run.add_argument("--workers", type=int, default=None)
    run.add_argument("--out", default=None)
    run.add_argument("--checkpoint-every", type=int, default=None)
    run.add_argument("--stop-after", type=int, default=None, help="Interrupt after this generation")
    run.set_defaults(handler=run_command)

    res = commands.add_parser("resume", help="Continue a checkpointed run")
    res.add_argument("--checkpoint", required=True)
    res.add_argument("--budget", type=int, default=None, help="Raise the evaluation budget")
    res.add_argument("--workers", type=int, default=None)
    res.add_argument("--stop-after", type=int, default=None)
    res.set_defaults(handler=resume_command)
