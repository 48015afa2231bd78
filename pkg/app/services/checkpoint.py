"""Versioned binary checkpoints with JSON sidecars."""

import hashlib
import os
import pickle
from dataclasses import dataclass
from pathlib import Path

from pydantic import ValidationError

from app.core.exceptions import ArtifactIOError, CheckpointVersionError, CorruptCheckpointError
from app.core.logging import get_logger
from app.schemas.artifacts import CHECKPOINT_FORMAT, CHECKPOINT_FORMAT_VERSION, CheckpointManifest
from app.schemas.experiment import Condition, ExperimentConfig
from app.services.curricula import RriState
from app.services.ga import AgentPopulation
from app.services.poet import PoetState

logger = get_logger(__name__)

CHECKPOINT_NAME = "checkpoint.bin"


@dataclass
class RunState:
    """Everything needed to continue a run exactly where it stopped."""

    config: ExperimentConfig
    generation: int
    evaluations: int
    record_count: int
    population: AgentPopulation | None = None
    rri: RriState | None = None
    poet: PoetState | None = None
    tracked_pair_id: int = 0
    finished: bool = False

    @property
    def condition(self) -> Condition:
        return self.config.condition


def _sidecar(path: Path) -> Path:
    return path.with_suffix(".json")


def _atomic_write(path: Path, payload: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(payload)
    os.replace(tmp, path)


def save_checkpoint(state: RunState, path: Path) -> Path:
    """Write ``path`` and its sidecar; the previous checkpoint survives a failed write."""
    payload = pickle.dumps(state, protocol=pickle.HIGHEST_PROTOCOL)
    manifest = CheckpointManifest(
        sha256=hashlib.sha256(payload).hexdigest(),
        generation=state.generation,
        evaluations=state.evaluations,
        budget=state.config.evaluation_budget,
        record_count=state.record_count,
        finished=state.finished,
        config_hash=state.config.config_hash(),
    )
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        _atomic_write(path, payload)
        _atomic_write(_sidecar(path), manifest.model_dump_json(indent=2).encode("utf-8"))
    except OSError as e:
        raise ArtifactIOError(f"Failed to write checkpoint {path}: {e}") from e
    logger.debug("checkpoint.saved", path=str(path), generation=state.generation)
    return path


def load_checkpoint(path: Path) -> RunState:
    """Read a checkpoint, verifying its format version and digest."""
    try:
        payload = path.read_bytes()
        raw_manifest = _sidecar(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ArtifactIOError(f"Cannot read checkpoint {path}: {e}") from e
    try:
        manifest = CheckpointManifest.model_validate_json(raw_manifest)
    except ValidationError as e:
        raise CorruptCheckpointError(f"Malformed checkpoint manifest for {path}: {e}") from e

    if manifest.format != CHECKPOINT_FORMAT or manifest.version != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointVersionError(
            f"{path} is {manifest.format} v{manifest.version}, "
            f"expected {CHECKPOINT_FORMAT} v{CHECKPOINT_FORMAT_VERSION}"
        )
    if hashlib.sha256(payload).hexdigest() != manifest.sha256:
        raise CorruptCheckpointError(f"Digest mismatch for checkpoint {path}")
    try:
        state = pickle.loads(payload)
    except Exception as e:
        raise CorruptCheckpointError(f"Cannot decode checkpoint {path}: {e}") from e
    if not isinstance(state, RunState):
        raise CorruptCheckpointError(f"{path} does not hold a run state")
    return state
