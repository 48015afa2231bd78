"""Single-episode replay of a saved genotype with a full per-step trace."""

import hashlib
from dataclasses import dataclass
from pathlib import Path

from app.core.exceptions import ArtifactIOError, ConfigError
from app.core.logging import get_logger
from app.schemas.environment import EnvParams
from app.schemas.experiment import PhysicsConfig, WalkerConfig
from app.services.genome import load_genotype
from app.services.walker_env import EpisodeResult, TrajectoryStep, run_episode, write_trajectory

logger = get_logger(__name__)


@dataclass(frozen=True)
class ReplayResult:
    summary: EpisodeResult
    trajectory_path: Path
    trace_digest: str


def parse_env_vector(text: str) -> EnvParams:
    """Parse eight comma-separated values into an environment."""
    try:
        values = [float(v) for v in text.split(",")]
        return EnvParams.from_vector(values)
    except ValueError as e:
        raise ConfigError(f"Invalid environment vector {text!r}: {e}") from e


def replay(
    genotype_path: Path,
    env: EnvParams,
    seed: int,
    out_dir: Path,
    walker_config: WalkerConfig | None = None,
    physics_config: PhysicsConfig | None = None,
) -> ReplayResult:
    """Run one episode and write ``trajectory.jsonl`` and ``summary.json`` into ``out_dir``."""
    genotype = load_genotype(genotype_path)
    trace: list[TrajectoryStep] = []
    summary = run_episode(genotype, env, seed, walker_config, physics_config, trace=trace)

    trajectory_path = out_dir / "trajectory.jsonl"
    write_trajectory(trace, trajectory_path)
    try:
        digest = hashlib.sha256(trajectory_path.read_bytes()).hexdigest()
        (out_dir / "summary.json").write_text(
            summary.model_dump_json(indent=2), encoding="utf-8"
        )
    except OSError as e:
        raise ArtifactIOError(f"Failed to write replay artifacts in {out_dir}: {e}") from e

    logger.info(
        "replay.finished",
        genotype=str(genotype_path),
        env=env.label(),
        seed=seed,
        reward=summary.total_reward,
        steps=summary.steps,
        termination=summary.termination.value,
    )
    return ReplayResult(summary, trajectory_path, digest)
